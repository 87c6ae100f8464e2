#include "capacc/io.hpp"

#include "capacc/graph.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

using namespace capacc;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("capacc_io_" + name))
        .string();
}

double reparse(const std::string& text) {
    return std::strtod(text.c_str(), nullptr);
}

bool same_bits(double a, double b) {
    return a == b && std::signbit(a) == std::signbit(b);
}

}  // namespace

TEST_CASE("seventeen significant digits round-trip every finite double") {
    const double values[] = {1.0 / 3.0,
                             0.1,
                             -0.0,
                             0.0,
                             1e308,
                             -1e308,
                             5e-324,  // smallest denormal
                             2.2250738585072014e-308,
                             123456789.12345679,
                             -7.5};
    for (double v : values) {
        CAPTURE(v);
        CHECK(same_bits(reparse(format_double(v)), v));
    }
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "null");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "null");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(format_double(7.5) == "7.5");  // trailing zeros are trimmed
    CHECK(format_double(-0.25) == "-0.25");
}

TEST_CASE("data CSV round-trips bitwise and deterministically") {
    Matrix x(3, 2);
    x << 1.0 / 3.0, -0.0, 1e-15, 2.5, -1e10, 0.1;
    const DataMatrix data(x, std::vector<std::string>{"load", "temp"});
    const std::string path = tmp_path("panel.csv");
    write_data_csv(path, data);
    const DataMatrix back = read_data_csv(path);
    CHECK(back.column_names() == std::vector<std::string>{"load", "temp"});
    REQUIRE(back.n() == 3);
    REQUIRE(back.p() == 2);
    for (int t = 0; t < 3; ++t) {
        for (int j = 0; j < 2; ++j) {
            CHECK(same_bits(back.values()(t, j), x(t, j)));
        }
    }
    const std::string again = tmp_path("panel2.csv");
    write_data_csv(again, back);
    CHECK(read_text(path) == read_text(again));
}

TEST_CASE("malformed data CSVs are rejected with a parse error") {
    const std::string path = tmp_path("bad.csv");

    write_text(path, "a,b\n1,2\n3\n");  // ragged
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    write_text(path, "a,b\n1,2\n3,oops\n");  // non-numeric
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    write_text(path, "a,b\n1,2\n3,1.5x\n");  // trailing garbage in a cell
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    write_text(path, "a,b\n1,inf\n3,4\n");  // non-finite
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    write_text(path, "a,b\n");  // header only
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    write_text(path, "a,b\n1,2\n");  // a single observation is not a panel
    CHECK_THROWS_AS((void)read_data_csv(path), ParseError);

    CHECK_THROWS_AS((void)read_data_csv(tmp_path("missing_file.csv")), ParseError);
}

TEST_CASE("the three precision formats agree on the same matrix") {
    Matrix q(2, 2);
    q << 2.0, 0.5, 0.5, 1.0;

    const std::string json_path = tmp_path("prec.json");
    write_text(json_path, "{\"q\":[[2.0,0.5],[0.5,1.0]]}\n");

    const std::string dense_path = tmp_path("prec_dense.csv");
    write_text(dense_path, "q1,q2\n2.0,0.5\n0.5,1.0\n");

    const std::string trip_path = tmp_path("prec_trip.csv");
    write_text(trip_path, "i,j,value\n1,1,2.0\n2,2,1.0\n1,2,0.5\n2,1,0.5\n");

    for (const auto& path : {json_path, dense_path, trip_path}) {
        CAPTURE(path);
        const Matrix got = read_precision(path);
        REQUIRE(got.rows() == 2);
        CHECK(got == q);
    }
}

TEST_CASE("precision parsing rejects inconsistent input") {
    const std::string path = tmp_path("prec_bad");

    write_text(path, "i,j,value\n1,2,0.5\n2,1,0.4\n");  // mirrored conflict
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "i,j,value\n0,1,0.5\n");  // indices are 1-based
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "i,j,value\n1,2\n");  // short triplet row
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "{\"matrix\":[[1]]}");  // JSON without "q"
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "{\"q\":[[1,0],[0]]}");  // ragged JSON rows
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "{\"q\":");  // truncated JSON
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "a,b,c\n1,0,0\n0,1,0\n");  // dense but not square
    CHECK_THROWS_AS((void)read_precision(path), ParseError);

    write_text(path, "a,b\n");  // header only
    CHECK_THROWS_AS((void)read_precision(path), ParseError);
}

TEST_CASE("adjacency CSV accepts only square 0/1 matrices") {
    const std::string path = tmp_path("adj.csv");
    write_text(path, "a,b,c\n0,1,0\n1,0,1\n0,1,0\n");
    const BoolMatrix w = read_adjacency_csv(path);
    CHECK(w == banded_adjacency(3, 1));

    write_text(path, "a,b\n0,2\n1,0\n");
    CHECK_THROWS_AS((void)read_adjacency_csv(path), ParseError);

    write_text(path, "a,b\n0,1\n");
    CHECK_THROWS_AS((void)read_adjacency_csv(path), ParseError);
}

TEST_CASE("anomaly reports serialise with a frozen field order") {
    AnomalySet set;
    CollectiveAnomaly ca;
    ca.start = 10;
    ca.end = 20;
    ca.variables = {1, 3};
    ca.mean_estimate = Vector(2);
    ca.mean_estimate << 0.5, -0.25;
    ca.saving = 7.5;
    set.collective = {ca};
    PointAnomaly pa;
    pa.time = 40;
    pa.variables = {2};
    pa.saving = 3.25;
    set.points = {pa};
    set.total_cost = -12.5;

    const PenaltyScheme scheme = default_penalties(100, 10);
    const std::string text = anomalies_to_json(set, scheme, 100, 10);
    CHECK(text == anomalies_to_json(set, scheme, 100, 10));  // byte stable
    CHECK(text.substr(0, 18) == "{\"n\":100,\"p\":10,\"p");
    CHECK(text.find("\"collective\":[{\"s\":10,\"e\":20,\"J\":[1,3],"
                    "\"means\":[0.5,-0.25],\"saving\":7.5}]") != std::string::npos);
    CHECK(text.find("\"points\":[{\"t\":40,\"J\":[2],\"saving\":3.25}]") !=
          std::string::npos);
    CHECK(text.find("\"total_cost\":-12.5}") != std::string::npos);
    CHECK(text.back() == '\n');

    const AnomalySet back = anomalies_from_json(text);
    REQUIRE(back.collective.size() == 1);
    CHECK(back.collective[0].start == 10);
    CHECK(back.collective[0].end == 20);
    CHECK(back.collective[0].variables == std::vector<int>{1, 3});
    CHECK(back.collective[0].mean_estimate == ca.mean_estimate);
    CHECK(back.collective[0].saving == 7.5);
    REQUIRE(back.points.size() == 1);
    CHECK(back.points[0].time == 40);
    CHECK(back.points[0].variables == std::vector<int>{2});
    CHECK(back.points[0].saving == 3.25);
    CHECK(back.total_cost == -12.5);

    CHECK_THROWS_AS((void)anomalies_from_json("{\"collective\":"), ParseError);
    const AnomalySet sparse_doc = anomalies_from_json("{}");
    CHECK(sparse_doc.collective.empty());
    CHECK(sparse_doc.points.empty());
}

TEST_CASE("changepoint and tuning reports are byte stable") {
    ChangepointResult cp;
    cp.tau = 50;
    cp.variables = {1, 2};
    cp.value = 1.5;
    cp.detected = true;
    const PenaltyScheme scheme = default_penalties(100, 4);
    const std::string text = changepoints_to_json({cp}, scheme, 100, 4);
    CHECK(text.find("\"changepoints\":[{\"tau\":50,\"J\":[1,2],\"value\":1.5}]") !=
          std::string::npos);
    CHECK(text == changepoints_to_json({cp}, scheme, 100, 4));

    TuneResult tr;
    tr.scale = 2.0;
    tr.alpha_hat = 0.05;
    tr.iterations = 9;
    CHECK(tune_to_json(tr, -1.0) ==
          "{\"scale\":2,\"alpha_hat\":0.050000000000000003,\"iterations\":9}\n");
    CHECK(tune_to_json(tr, 0.04).find("\"alpha_validated\":0.04") !=
          std::string::npos);

    EvaluationReport rep;
    CHECK(report_to_json(rep) == "{}\n");
    rep.ari = 1.0;
    rep.subset_recall = 0.5;
    CHECK(report_to_json(rep) == "{\"ari\":1,\"subset_recall\":0.5}\n");
}

TEST_CASE("estimate output parses back as a JSON precision") {
    Vector mu0(2);
    mu0 << 0.0, 0.5;
    Matrix q(2, 2);
    q << 2.0, -1.0, -1.0, 2.0;
    const std::string text = estimate_to_json(mu0, q, false, 3, 1e-9);
    CHECK(text.find("\"repaired\":false,\"sweeps\":3,\"gap\":") !=
          std::string::npos);
    CHECK(text.find("\"mu0\":[0,0.5]") != std::string::npos);
    const std::string path = tmp_path("estimate.json");
    write_text(path, text);
    CHECK(read_precision(path) == q);
}

TEST_CASE("scenario files describe data, model and injections") {
    const std::string path = tmp_path("scenario.json");
    write_text(path, R"({
        "n": 80,
        "p": 4,
        "precision": {"kind": "car_band", "rho": 0.6, "band": 2},
        "anomalies": [
            {"start": 10, "end": 20, "variables": [1, 2], "theta": 2.0,
             "class": "correlated", "rho_change": 0.5}
        ],
        "points": [{"time": 40, "variables": 2, "size_sd": 1.5}]
    })");
    const ScenarioConfig cfg = read_scenario(path);
    CHECK(cfg.scenario.n == 80);
    CHECK(cfg.p == 4);
    CHECK(cfg.precision_kind == "car_band");
    CHECK(cfg.rho == 0.6);
    CHECK(cfg.band == 2);
    REQUIRE(cfg.scenario.anomalies.size() == 1);
    CHECK(cfg.scenario.anomalies[0].start == 10);
    CHECK(cfg.scenario.anomalies[0].end == 20);
    CHECK(cfg.scenario.anomalies[0].variables == std::vector<int>{1, 2});
    CHECK(cfg.scenario.anomalies[0].theta == 2.0);
    CHECK(cfg.scenario.anomalies[0].change_class == ChangeClass::correlated);
    CHECK(cfg.scenario.anomalies[0].rho_change == 0.5);
    REQUIRE(cfg.scenario.points.size() == 1);
    CHECK(cfg.scenario.points[0].time == 40);
    CHECK(cfg.scenario.points[0].n_variables == 2);
    CHECK(cfg.scenario.points[0].size_sd == 1.5);

    const PrecisionModel model = scenario_precision(cfg);
    const PrecisionModel direct = car_precision(banded_adjacency(4, 2), 0.6);
    CHECK(model.q() == direct.q());

    ScenarioConfig ident;
    ident.p = 3;
    ident.precision_kind = "identity";
    CHECK(scenario_precision(ident).q() == Matrix::Identity(3, 3));

    ScenarioConfig lattice;
    lattice.p = 4;
    lattice.precision_kind = "car_lattice";
    lattice.rho = 0.5;
    lattice.lattice = 2;
    CHECK(scenario_precision(lattice).q().rows() == 4);
    lattice.p = 5;  // 2 x 2 lattice cannot have five vertices
    CHECK_THROWS_AS((void)scenario_precision(lattice), ParseError);

    ScenarioConfig unknown;
    unknown.p = 2;
    unknown.precision_kind = "banded";
    CHECK_THROWS_AS((void)scenario_precision(unknown), ParseError);

    write_text(path, "{\"p\": 4}");  // missing n
    CHECK_THROWS_AS((void)read_scenario(path), ParseError);
    write_text(path,
               R"({"n": 10, "p": 2, "precision": {"kind": "identity"},
                   "anomalies": [{"start": 1, "end": 3, "variables": [1],
                                  "theta": 1.0, "class": "quadratic"}]})");
    CHECK_THROWS_AS((void)read_scenario(path), ParseError);
}

TEST_CASE("raw text files round-trip byte for byte") {
    const std::string path = tmp_path("raw.txt");
    const std::string body = "line1\nline2\n\ttabbed, trailing\n";
    write_text(path, body);
    CHECK(read_text(path) == body);
    CHECK_THROWS_AS((void)read_text(tmp_path("absent.txt")), ParseError);
}
