#include "capacc/io.hpp"

#include "capacc/graph.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace capacc {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& cell, const std::string& where) {
    const std::string t = strip(cell);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ParseError("not a number at " + where + ": '" + cell + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError("non-finite value at " + where);
    }
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!strip(line).empty()) lines.push_back(line);
    }
    return lines;
}

json parse_json(const std::string& text, const std::string& what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError("malformed JSON in " + what);
    return doc;
}

double json_number(const json& v, const std::string& where) {
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ParseError("expected a number at " + where);
    return v.get<double>();
}

}  // namespace

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << text;
}

DataMatrix read_data_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw ParseError(path + ": need a header and data rows");
    std::vector<std::string> names;
    for (const auto& cell : split_csv_line(lines[0])) names.push_back(strip(cell));
    const int p = static_cast<int>(names.size());
    const int n = static_cast<int>(lines.size()) - 1;
    Matrix x(n, p);
    for (int t = 0; t < n; ++t) {
        const auto cells = split_csv_line(lines[t + 1]);
        if (static_cast<int>(cells.size()) != p) {
            throw ParseError(path + ": row " + std::to_string(t + 2) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(p));
        }
        for (int j = 0; j < p; ++j) {
            x(t, j) = parse_double(cells[j], path + " row " + std::to_string(t + 2));
        }
    }
    try {
        return DataMatrix(std::move(x), std::move(names));
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_data_csv(const std::string& path, const DataMatrix& data) {
    std::string out;
    for (int j = 0; j < data.p(); ++j) {
        if (j) out += ',';
        out += data.column_names()[j];
    }
    out += '\n';
    for (int t = 0; t < data.n(); ++t) {
        for (int j = 0; j < data.p(); ++j) {
            if (j) out += ',';
            out += format_double(data.values()(t, j));
        }
        out += '\n';
    }
    write_text(path, out);
}

namespace {

Matrix precision_from_triplets(const std::vector<std::string>& lines,
                               const std::string& path) {
    struct Entry {
        int i, j;
        double value;
    };
    std::vector<Entry> entries;
    int p = 0;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto cells = split_csv_line(lines[k]);
        if (cells.size() != 3) {
            throw ParseError(path + ": triplet row needs i,j,value");
        }
        const std::string where = path + " row " + std::to_string(k + 1);
        Entry e;
        e.i = static_cast<int>(parse_double(cells[0], where));
        e.j = static_cast<int>(parse_double(cells[1], where));
        e.value = parse_double(cells[2], where);
        if (e.i < 1 || e.j < 1) throw ParseError(where + ": indices are 1-based");
        p = std::max(p, std::max(e.i, e.j));
        entries.push_back(e);
    }
    Matrix q = Matrix::Zero(p, p);
    Matrix seen = Matrix::Zero(p, p);
    for (const auto& e : entries) {
        const int a = e.i - 1, b = e.j - 1;
        if (seen(a, b) != 0.0 && std::abs(q(a, b) - e.value) > 1e-12) {
            throw ParseError(path + ": conflicting duplicate entry (" +
                             std::to_string(e.i) + "," + std::to_string(e.j) + ")");
        }
        q(a, b) = e.value;
        q(b, a) = e.value;
        seen(a, b) = seen(b, a) = 1.0;
    }
    return q;
}

}  // namespace

Matrix read_precision(const std::string& path) {
    const std::string text = read_text(path);
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        const json doc = parse_json(text, path);
        if (!doc.contains("q")) throw ParseError(path + ": missing \"q\"");
        const auto& rows = doc["q"];
        const int p = static_cast<int>(rows.size());
        Matrix q(p, p);
        for (int i = 0; i < p; ++i) {
            if (static_cast<int>(rows[i].size()) != p) {
                throw ParseError(path + ": \"q\" must be square");
            }
            for (int j = 0; j < p; ++j) {
                q(i, j) = json_number(rows[i][j], path);
            }
        }
        return q;
    }

    const auto lines = read_lines(path);
    if (lines.size() < 2) throw ParseError(path + ": empty precision file");
    auto header = split_csv_line(lines[0]);
    for (auto& h : header) h = strip(h);
    if (header.size() == 3 && header[0] == "i" && header[1] == "j" &&
        header[2] == "value") {
        return precision_from_triplets(lines, path);
    }
    const int p = static_cast<int>(header.size());
    if (static_cast<int>(lines.size()) - 1 != p) {
        throw ParseError(path + ": dense precision must have p rows and p columns");
    }
    Matrix q(p, p);
    for (int i = 0; i < p; ++i) {
        const auto cells = split_csv_line(lines[i + 1]);
        if (static_cast<int>(cells.size()) != p) {
            throw ParseError(path + ": dense precision must be square");
        }
        for (int j = 0; j < p; ++j) {
            q(i, j) = parse_double(cells[j], path + " row " + std::to_string(i + 2));
        }
    }
    return q;
}

BoolMatrix read_adjacency_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw ParseError(path + ": empty adjacency file");
    const int p = static_cast<int>(split_csv_line(lines[0]).size());
    if (static_cast<int>(lines.size()) - 1 != p) {
        throw ParseError(path + ": adjacency must be square");
    }
    BoolMatrix w(p, p);
    for (int i = 0; i < p; ++i) {
        const auto cells = split_csv_line(lines[i + 1]);
        if (static_cast<int>(cells.size()) != p) {
            throw ParseError(path + ": adjacency must be square");
        }
        for (int j = 0; j < p; ++j) {
            const double v =
                parse_double(cells[j], path + " row " + std::to_string(i + 2));
            if (v != 0.0 && v != 1.0) {
                throw ParseError(path + ": adjacency entries must be 0 or 1");
            }
            w(i, j) = v != 0.0;
        }
    }
    return w;
}

namespace {

void append_int_array(std::string& out, const std::vector<int>& v) {
    out += '[';
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(v[k]);
    }
    out += ']';
}

void append_double_array(std::string& out, const Vector& v) {
    out += '[';
    for (int k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        out += format_double(v(k));
    }
    out += ']';
}

void append_penalties(std::string& out, const PenaltyScheme& s) {
    out += "{\"psi\":" + format_double(s.psi);
    out += ",\"alpha_sparse\":" + format_double(s.alpha_sparse);
    out += ",\"alpha_dense\":" + format_double(s.alpha_dense);
    out += ",\"beta\":" + format_double(s.beta);
    out += ",\"beta_point\":" + format_double(s.beta_point);
    out += ",\"k_star\":" + format_double(s.k_star);
    out += ",\"scale_collective\":" + format_double(s.scale_collective);
    out += ",\"scale_point\":" + format_double(s.scale_point);
    out += '}';
}

}  // namespace

std::string anomalies_to_json(const AnomalySet& set, const PenaltyScheme& scheme,
                              int n, int p) {
    std::string out = "{\"n\":" + std::to_string(n);
    out += ",\"p\":" + std::to_string(p);
    out += ",\"penalties\":";
    append_penalties(out, scheme);
    out += ",\"collective\":[";
    for (std::size_t k = 0; k < set.collective.size(); ++k) {
        const auto& c = set.collective[k];
        if (k) out += ',';
        out += "{\"s\":" + std::to_string(c.start);
        out += ",\"e\":" + std::to_string(c.end);
        out += ",\"J\":";
        append_int_array(out, c.variables);
        out += ",\"means\":";
        append_double_array(out, c.mean_estimate);
        out += ",\"saving\":" + format_double(c.saving);
        out += '}';
    }
    out += "],\"points\":[";
    for (std::size_t k = 0; k < set.points.size(); ++k) {
        const auto& pt = set.points[k];
        if (k) out += ',';
        out += "{\"t\":" + std::to_string(pt.time);
        out += ",\"J\":";
        append_int_array(out, pt.variables);
        out += ",\"saving\":" + format_double(pt.saving);
        out += '}';
    }
    out += "],\"total_cost\":" + format_double(set.total_cost);
    out += "}\n";
    return out;
}

AnomalySet anomalies_from_json(const std::string& text) {
    const json doc = parse_json(text, "anomaly document");
    AnomalySet set;
    if (doc.contains("collective")) {
        for (const auto& c : doc["collective"]) {
            CollectiveAnomaly ca;
            ca.start = c.at("s").get<int>();
            ca.end = c.at("e").get<int>();
            for (const auto& v : c.at("J")) ca.variables.push_back(v.get<int>());
            if (c.contains("means")) {
                ca.mean_estimate.resize(c["means"].size());
                for (int k = 0; k < ca.mean_estimate.size(); ++k) {
                    ca.mean_estimate(k) = json_number(c["means"][k], "means");
                }
            }
            if (c.contains("saving")) ca.saving = json_number(c["saving"], "saving");
            set.collective.push_back(std::move(ca));
        }
    }
    if (doc.contains("points")) {
        for (const auto& c : doc["points"]) {
            PointAnomaly pa;
            pa.time = c.at("t").get<int>();
            for (const auto& v : c.at("J")) pa.variables.push_back(v.get<int>());
            if (c.contains("saving")) pa.saving = json_number(c["saving"], "saving");
            set.points.push_back(std::move(pa));
        }
    }
    if (doc.contains("total_cost")) {
        set.total_cost = json_number(doc["total_cost"], "total_cost");
    }
    return set;
}

std::string changepoints_to_json(const std::vector<ChangepointResult>& results,
                                 const PenaltyScheme& scheme, int n, int p) {
    std::string out = "{\"n\":" + std::to_string(n);
    out += ",\"p\":" + std::to_string(p);
    out += ",\"penalties\":";
    append_penalties(out, scheme);
    out += ",\"changepoints\":[";
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& c = results[k];
        if (k) out += ',';
        out += "{\"tau\":" + std::to_string(c.tau);
        out += ",\"J\":";
        append_int_array(out, c.variables);
        out += ",\"value\":" + format_double(c.value);
        out += '}';
    }
    out += "]}\n";
    return out;
}

std::string estimate_to_json(const Vector& mu0, const Matrix& q, bool repaired,
                             int sweeps, double gap) {
    std::string out = "{\"p\":" + std::to_string(q.rows());
    out += ",\"mu0\":";
    append_double_array(out, mu0);
    out += ",\"q\":[";
    for (int i = 0; i < q.rows(); ++i) {
        if (i) out += ',';
        append_double_array(out, q.row(i).transpose());
    }
    out += "],\"repaired\":";
    out += repaired ? "true" : "false";
    out += ",\"sweeps\":" + std::to_string(sweeps);
    out += ",\"gap\":" + format_double(gap);
    out += "}\n";
    return out;
}

std::string report_to_json(const EvaluationReport& report) {
    std::string out = "{";
    bool first = true;
    auto field = [&](const char* name, const std::optional<double>& v) {
        if (!v) return;
        if (!first) out += ',';
        first = false;
        out += '"';
        out += name;
        out += "\":" + format_double(*v);
    };
    field("ari", report.ari);
    field("subset_precision", report.subset_precision);
    field("subset_recall", report.subset_recall);
    field("power", report.power);
    field("false_positive_rate", report.false_positive_rate);
    field("rmse_tau", report.rmse_tau);
    out += "}\n";
    return out;
}

std::string tune_to_json(const TuneResult& result, double validated_alpha) {
    std::string out = "{\"scale\":" + format_double(result.scale);
    out += ",\"alpha_hat\":" + format_double(result.alpha_hat);
    out += ",\"iterations\":" + std::to_string(result.iterations);
    if (validated_alpha >= 0.0) {
        out += ",\"alpha_validated\":" + format_double(validated_alpha);
    }
    out += "}\n";
    return out;
}

ScenarioConfig read_scenario(const std::string& path) {
    const json doc = parse_json(read_text(path), path);
    ScenarioConfig cfg;
    try {
        cfg.scenario.n = doc.at("n").get<int>();
        cfg.p = doc.at("p").get<int>();
        const auto& prec = doc.at("precision");
        cfg.precision_kind = prec.at("kind").get<std::string>();
        if (prec.contains("rho")) cfg.rho = prec["rho"].get<double>();
        if (prec.contains("band")) cfg.band = prec["band"].get<int>();
        if (prec.contains("m")) cfg.lattice = prec["m"].get<int>();
        if (doc.contains("anomalies")) {
            for (const auto& a : doc["anomalies"]) {
                PlannedAnomaly pa;
                pa.start = a.at("start").get<int>();
                pa.end = a.at("end").get<int>();
                for (const auto& v : a.at("variables")) {
                    pa.variables.push_back(v.get<int>());
                }
                pa.theta = a.at("theta").get<double>();
                if (a.contains("class")) {
                    const std::string cls = a["class"].get<std::string>();
                    if (cls == "covariance") {
                        pa.change_class = ChangeClass::covariance;
                    } else if (cls == "correlated") {
                        pa.change_class = ChangeClass::correlated;
                    } else {
                        throw ParseError(path + ": unknown change class " + cls);
                    }
                }
                if (a.contains("rho_change")) {
                    pa.rho_change = a["rho_change"].get<double>();
                }
                cfg.scenario.anomalies.push_back(std::move(pa));
            }
        }
        if (doc.contains("points")) {
            for (const auto& q : doc["points"]) {
                PlannedPoint pp;
                pp.time = q.at("time").get<int>();
                if (q.contains("variables")) pp.n_variables = q["variables"].get<int>();
                if (q.contains("size_sd")) pp.size_sd = q["size_sd"].get<double>();
                cfg.scenario.points.push_back(pp);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return cfg;
}

PrecisionModel scenario_precision(const ScenarioConfig& config) {
    if (config.precision_kind == "identity") {
        return PrecisionModel::identity(config.p);
    }
    if (config.precision_kind == "constant") {
        return constant_correlation_precision(config.p, config.rho);
    }
    if (config.precision_kind == "car_band") {
        return car_precision(banded_adjacency(config.p, config.band), config.rho);
    }
    if (config.precision_kind == "car_lattice") {
        const int m = config.lattice;
        if (m * m != config.p) {
            throw ParseError("scenario: lattice m^2 must equal p");
        }
        return car_precision(lattice_adjacency(m), config.rho);
    }
    throw ParseError("scenario: unknown precision kind " + config.precision_kind);
}

}  // namespace capacc
