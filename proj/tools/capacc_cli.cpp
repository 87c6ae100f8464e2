// capacc command line: detection, changepoints, estimation, simulation,
// tuning, evaluation and a micro-benchmark, all with machine-readable output.

#include "capacc/detector.hpp"
#include "capacc/cptcc.hpp"
#include "capacc/estimate.hpp"
#include "capacc/graph.hpp"
#include "capacc/io.hpp"
#include "capacc/rng.hpp"
#include "capacc/simlab.hpp"
#include "capacc/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace {

using namespace capacc;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
    } else {
        write_text(path, text);
    }
}

/* banded:R | lattice:M | full | <csv path> */
BoolMatrix adjacency_from_spec(const std::string& spec, int p) {
    auto tail_int = [&](std::size_t off) {
        try {
            return std::stoi(spec.substr(off));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad adjacency spec: " + spec);
        }
    };
    if (spec.rfind("banded:", 0) == 0) {
        return banded_adjacency(p, tail_int(7));
    }
    if (spec.rfind("lattice:", 0) == 0) {
        const int m = tail_int(8);
        if (m * m != p) {
            throw std::invalid_argument("lattice:" + std::to_string(m) +
                                        " needs p = " + std::to_string(m * m));
        }
        return lattice_adjacency(m);
    }
    if (spec == "full") {
        return banded_adjacency(p, p - 1);
    }
    BoolMatrix w = read_adjacency_csv(spec);
    if (w.rows() != p) {
        throw std::invalid_argument("adjacency file is " + std::to_string(w.rows()) +
                                    "x" + std::to_string(w.cols()) +
                                    ", data has p = " + std::to_string(p));
    }
    return w;
}

/* Shared flags of the model-driven commands. */
struct ModelOpts {
    std::string precision = "identity";  // identity | estimate | <file>
    std::string adjacency = "banded:2";  // used when precision = estimate
    bool centred = false;                // baseline 0 instead of column medians
    bool repair = false;                 // PD repair of the robust covariance
};

struct PenaltyOpts {
    double scale_collective = 1.0;
    double scale_point = 1.0;
    double alpha_sparse = kUnset;
    double alpha_dense = kUnset;
    double beta = kUnset;
    double beta_point = kUnset;
};

void add_model_flags(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--precision", m.precision,
                    "identity, estimate, or a precision matrix file");
    cmd->add_option("--adjacency", m.adjacency,
                    "banded:R, lattice:M, full, or an adjacency CSV "
                    "(constrains --precision estimate)");
    cmd->add_flag("--centred", m.centred,
                  "treat the data as already centred (baseline 0)");
    cmd->add_flag("--repair", m.repair,
                  "clip robust covariance eigenvalues when it is not PD");
}

void add_penalty_flags(CLI::App* cmd, PenaltyOpts& o) {
    cmd->add_option("-b,--scale-collective", o.scale_collective,
                    "multiplier of the collective penalties");
    cmd->add_option("--scale-point", o.scale_point,
                    "multiplier of the point penalty slope");
    cmd->add_option("--alpha-sparse", o.alpha_sparse, "override alpha_sparse");
    cmd->add_option("--alpha-dense", o.alpha_dense, "override alpha_dense");
    cmd->add_option("--beta", o.beta, "override beta");
    cmd->add_option("--beta-point", o.beta_point, "override beta_point");
}

PenaltyScheme make_scheme(int n, int p, const PenaltyOpts& o) {
    PenaltyScheme s = default_penalties(n, p, o.scale_collective, o.scale_point);
    if (!std::isnan(o.alpha_sparse)) s.alpha_sparse = o.alpha_sparse;
    if (!std::isnan(o.alpha_dense)) s.alpha_dense = o.alpha_dense;
    if (!std::isnan(o.beta)) s.beta = o.beta;
    if (!std::isnan(o.beta_point)) s.beta_point = o.beta_point;
    s.k_star = s.beta > 0.0 ? (s.alpha_dense - s.alpha_sparse) / s.beta
                            : std::numeric_limits<double>::infinity();
    return s;
}

PrecisionModel make_model(const DataMatrix& data, const ModelOpts& m) {
    const int p = data.p();
    Vector mu0 = m.centred ? Vector::Zero(p) : robust_baseline(data);
    if (m.precision == "identity") {
        return PrecisionModel(std::move(mu0), Matrix::Identity(p, p));
    }
    if (m.precision == "estimate") {
        RobustCovOptions rc_opts;
        rc_opts.repair = m.repair;
        const RobustCovariance rc = robust_covariance(data, rc_opts);
        const BoolMatrix w = adjacency_from_spec(m.adjacency, p);
        const StructuredFit fit = structured_precision(rc.s, w);
        return PrecisionModel(std::move(mu0), fit.q);
    }
    Matrix q = read_precision(m.precision);
    if (q.rows() != p) {
        throw std::invalid_argument("precision file is " + std::to_string(q.rows()) +
                                    "x" + std::to_string(q.cols()) +
                                    ", data has p = " + std::to_string(p));
    }
    return PrecisionModel(std::move(mu0), std::move(q));
}

/* Does the detected set hit the truth (segment overlap, or anything on a null)? */
bool truth_hit(const AnomalySet& truth, const AnomalySet& detected) {
    if (truth.collective.empty()) {
        return !detected.collective.empty() || !detected.points.empty();
    }
    for (const auto& t : truth.collective) {
        for (const auto& d : detected.collective) {
            if (std::max(t.start, d.start) < std::min(t.end, d.end)) return true;
        }
    }
    return false;
}

struct DetectCmd {
    std::string input, output;
    ModelOpts model;
    PenaltyOpts penalties;
    int min_len = 2, max_len = 0, threads = 1;
    bool no_points = false, no_prune = false, refine = false;

    void run() const {
        const DataMatrix data = read_data_csv(input);
        const PrecisionModel pm = make_model(data, model);
        const NeighborhoodPlan plan = build_plan(pm);
        const PenaltyScheme scheme = make_scheme(data.n(), data.p(), penalties);
        DetectOptions opts;
        opts.min_len = min_len;
        opts.max_len = max_len;
        opts.pruning = !no_prune;
        opts.point_anomalies = !no_points;
        opts.refine_subsets = refine;
        const DetectResult result = detect(data, pm, plan, scheme, opts);
        emit(output, anomalies_to_json(result.anomalies, scheme, data.n(), data.p()));
    }
};

struct CptCmd {
    std::string input, output;
    ModelOpts model;
    PenaltyOpts penalties;
    int min_len = 2;
    bool multiple = false, per_segment = false, global_centring = false;

    void run() const {
        const DataMatrix data = read_data_csv(input);
        const PrecisionModel pm = make_model(data, model);
        const NeighborhoodPlan plan = build_plan(pm);
        const PenaltyScheme scheme = make_scheme(data.n(), data.p(), penalties);
        CptOptions opts;
        opts.min_len = min_len;
        opts.per_segment_penalties = per_segment;
        opts.global_centring = global_centring;
        std::vector<ChangepointResult> results;
        if (multiple) {
            results = detect_multiple(data, pm, plan, scheme, opts);
        } else {
            const ChangepointResult best = detect_single(data, pm, plan, scheme, opts);
            if (best.detected) results.push_back(best);
        }
        emit(output, changepoints_to_json(results, scheme, data.n(), data.p()));
    }
};

struct EstimateCmd {
    std::string input, output;
    std::string adjacency = "banded:2";
    bool repair = false;
    double tol = 1e-8;
    int max_sweeps = 500;

    void run() const {
        const DataMatrix data = read_data_csv(input);
        const Vector mu0 = robust_baseline(data);
        RobustCovOptions rc_opts;
        rc_opts.repair = repair;
        const RobustCovariance rc = robust_covariance(data, rc_opts);
        const BoolMatrix w = adjacency_from_spec(adjacency, data.p());
        StructuredFitOptions fit_opts;
        fit_opts.tol = tol;
        fit_opts.max_sweeps = max_sweeps;
        const StructuredFit fit = structured_precision(rc.s, w, fit_opts);
        emit(output, estimate_to_json(mu0, fit.q, rc.repaired, fit.sweeps, fit.gap));
    }
};

struct SimulateCmd {
    std::string scenario, output, truth;
    std::uint64_t seed = 1;

    void run() const {
        const ScenarioConfig cfg = read_scenario(scenario);
        const PrecisionModel pm = scenario_precision(cfg);
        const SimData sim = sample_scenario(cfg.scenario, pm, seed);
        write_data_csv(output, sim.data);
        if (!truth.empty()) {
            const PenaltyScheme scheme = default_penalties(sim.data.n(), sim.data.p());
            write_text(truth, anomalies_to_json(sim.truth, scheme, sim.data.n(),
                                                sim.data.p()));
        }
    }
};

struct TuneCmd {
    std::string scenario, output;
    double target = 0.05, delta = 0.02;
    int reps = 1000, min_len = 2, max_len = 0, threads = 1;
    std::uint64_t seed = 1;
    bool validate = false;

    void run() const {
        const ScenarioConfig cfg = read_scenario(scenario);
        const PrecisionModel pm = scenario_precision(cfg);
        const NeighborhoodPlan plan = build_plan(pm);
        const int n = cfg.scenario.n;

        auto detects = [&](const DataMatrix& data, double scale) {
            const PenaltyScheme scheme =
                make_scheme_for(n, cfg.p, scale);
            DetectOptions opts;
            opts.min_len = min_len;
            opts.max_len = max_len;
            const DetectResult res = detect(data, pm, plan, scheme, opts);
            return !res.anomalies.collective.empty() || !res.anomalies.points.empty();
        };
        const TuneResult result =
            tune_scale(pm, n, target, delta, reps, detects, seed, threads);

        double validated = -1.0;
        if (validate) {
            SimScenario null_scenario;
            null_scenario.n = n;
            std::vector<std::uint8_t> flagged(reps, 0);
            parallel_for(threads, reps, [&](int k) {
                const SimData sim = sample_scenario(null_scenario, pm,
                                                    Rng::mix(seed, 500000 + k));
                flagged[k] = detects(sim.data, result.scale) ? 1 : 0;
            });
            long long count = 0;
            for (auto f : flagged) count += f;
            validated = static_cast<double>(count) / reps;
        }
        emit(output, tune_to_json(result, validated));
    }

    static PenaltyScheme make_scheme_for(int n, int p, double scale) {
        PenaltyOpts o;
        o.scale_collective = scale;
        o.scale_point = scale;
        return make_scheme(n, p, o);
    }
};

struct EvaluateCmd {
    std::string truth, detected, output, curves, scenario;
    std::string theta_list = "0.5,1,1.5,2,2.5,3,3.5,4";
    int n = 0, reps = 200, min_len = 2, max_len = 0, threads = 1;
    std::uint64_t seed = 1;
    double scale_correlated = 1.0, scale_identity = 1.0;

    void run() const {
        if (!curves.empty()) {
            run_curves();
            return;
        }
        if (truth.empty() || detected.empty()) {
            throw std::invalid_argument(
                "evaluate needs --truth and --detected (or --emit-curves)");
        }
        const std::string truth_text = read_text(truth);
        const AnomalySet truth_set = anomalies_from_json(truth_text);
        const AnomalySet detected_set = anomalies_from_json(read_text(detected));
        int rows = n;
        if (rows == 0) {
            const auto doc = nlohmann::json::parse(truth_text, nullptr, false);
            if (doc.is_discarded() || !doc.contains("n")) {
                throw ParseError("evaluate: pass --n or a truth file with \"n\"");
            }
            rows = doc["n"].get<int>();
        }
        emit(output, report_to_json(evaluate_detection(truth_set, detected_set, rows)));
    }

    void run_curves() const {
        if (scenario.empty()) {
            throw std::invalid_argument("evaluate --emit-curves needs --scenario");
        }
        const ScenarioConfig cfg = read_scenario(scenario);
        if (cfg.scenario.anomalies.empty()) {
            throw std::invalid_argument(
                "evaluate --emit-curves needs a scenario with anomalies");
        }
        const PrecisionModel true_model = scenario_precision(cfg);
        const PrecisionModel id_model = PrecisionModel::identity(cfg.p);
        const NeighborhoodPlan true_plan = build_plan(true_model);
        const NeighborhoodPlan id_plan = build_plan(id_model);

        std::vector<double> grid;
        std::stringstream ss(theta_list);
        std::string cell;
        while (std::getline(ss, cell, ',')) grid.push_back(std::stod(cell));
        if (grid.empty()) throw std::invalid_argument("empty --theta grid");

        std::string csv = "method,parameter,theta,power\n";
        struct Method {
            const char* name;
            const PrecisionModel* model;
            const NeighborhoodPlan* plan;
            double scale;
        };
        const Method methods[] = {
            {"correlated", &true_model, &true_plan, scale_correlated},
            {"identity", &id_model, &id_plan, scale_identity},
        };
        for (const auto& method : methods) {
            const PenaltyScheme scheme =
                TuneCmd::make_scheme_for(cfg.scenario.n, cfg.p, method.scale);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                SimScenario sc = cfg.scenario;
                for (auto& a : sc.anomalies) a.theta = grid[g];
                std::vector<std::uint8_t> hit(reps, 0);
                parallel_for(threads, reps, [&](int k) {
                    const std::uint64_t stream =
                        7000 + static_cast<std::uint64_t>(g) * reps + k;
                    const SimData sim =
                        sample_scenario(sc, true_model, Rng::mix(seed, stream));
                    DetectOptions opts;
                    opts.min_len = min_len;
                    opts.max_len = max_len;
                    const DetectResult res =
                        detect(sim.data, *method.model, *method.plan, scheme, opts);
                    hit[k] = truth_hit(sim.truth, res.anomalies) ? 1 : 0;
                });
                long long count = 0;
                for (auto h : hit) count += h;
                csv += method.name;
                csv += ',' + format_double(method.scale);
                csv += ',' + format_double(grid[g]);
                csv += ',' + format_double(static_cast<double>(count) / reps);
                csv += '\n';
            }
        }
        write_text(curves, csv);
    }
};

struct BenchCmd {
    std::string p_list = "50,100,200,400", output;
    int r = 2, reps = 200, n = 50;
    std::uint64_t seed = 1;

    void run() const {
        std::vector<int> ps;
        std::stringstream ss(p_list);
        std::string cell;
        while (std::getline(ss, cell, ',')) ps.push_back(std::stoi(cell));
        if (ps.empty()) throw std::invalid_argument("empty --p-list");

        std::string csv = "p,r,seconds\n";
        for (const int p : ps) {
            const PrecisionModel pm = car_precision(banded_adjacency(p, r), 0.5);
            const NeighborhoodPlan plan = build_plan(pm);
            SimScenario null_scenario;
            null_scenario.n = n;
            const SimData sim = sample_scenario(null_scenario, pm, seed);
            const SegmentSums sums(sim.data.values(), pm.mu0());
            const SegmentStats stats = sums.stats(0, n);
            const PenaltyScheme scheme = default_penalties(n, p);
            double sink = 0.0;
            const auto t0 = std::chrono::steady_clock::now();
            for (int k = 0; k < reps; ++k) {
                sink += approx_saving(pm.q(), plan, stats, scheme).value;
            }
            const auto t1 = std::chrono::steady_clock::now();
            const double seconds =
                std::chrono::duration<double>(t1 - t0).count() / reps;
            if (!std::isfinite(sink)) throw NumericError("bench: non-finite saving");
            csv += std::to_string(p) + ',' + std::to_string(r) + ',' +
                   format_double(seconds) + '\n';
        }
        emit(output, csv);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collective and point anomaly detection in correlated series"};
    app.require_subcommand(1);

    DetectCmd detect_cmd;
    auto* cd = app.add_subcommand("detect", "find collective and point anomalies");
    cd->add_option("input", detect_cmd.input, "data CSV")->required();
    cd->add_option("-o,--output", detect_cmd.output, "report path (default stdout)");
    add_model_flags(cd, detect_cmd.model);
    add_penalty_flags(cd, detect_cmd.penalties);
    cd->add_option("--min-len", detect_cmd.min_len, "shortest collective segment");
    cd->add_option("--max-len", detect_cmd.max_len, "longest collective segment");
    cd->add_option("--threads", detect_cmd.threads, "worker cap (scan is sequential)");
    cd->add_flag("--no-points", detect_cmd.no_points, "disable point anomalies");
    cd->add_flag("--no-prune", detect_cmd.no_prune, "disable candidate pruning");
    cd->add_flag("--refine", detect_cmd.refine, "re-optimise subsets per segment");
    cd->callback([&] { detect_cmd.run(); });

    CptCmd cpt_cmd;
    auto* cc = app.add_subcommand("cpt", "find mean changepoints");
    cc->add_option("input", cpt_cmd.input, "data CSV")->required();
    cc->add_option("-o,--output", cpt_cmd.output, "report path (default stdout)");
    add_model_flags(cc, cpt_cmd.model);
    add_penalty_flags(cc, cpt_cmd.penalties);
    cc->add_option("--min-len", cpt_cmd.min_len, "minimum distance from the ends");
    cc->add_flag("--multiple", cpt_cmd.multiple, "binary segmentation");
    cc->add_flag("--per-segment-penalties", cpt_cmd.per_segment,
                 "rescale penalties per sub-segment");
    cc->add_flag("--global-centring", cpt_cmd.global_centring,
                 "centre sub-segments with the global mean");
    cc->callback([&] { cpt_cmd.run(); });

    EstimateCmd estimate_cmd;
    auto* ce = app.add_subcommand("estimate", "robust structured precision fit");
    ce->add_option("input", estimate_cmd.input, "data CSV")->required();
    ce->add_option("-o,--output", estimate_cmd.output, "fit path (default stdout)");
    ce->add_option("--adjacency", estimate_cmd.adjacency,
                   "banded:R, lattice:M, full, or an adjacency CSV");
    ce->add_flag("--repair", estimate_cmd.repair,
                 "clip robust covariance eigenvalues when it is not PD");
    ce->add_option("--tol", estimate_cmd.tol, "moment matching tolerance");
    ce->add_option("--max-sweeps", estimate_cmd.max_sweeps, "sweep cap");
    ce->callback([&] { estimate_cmd.run(); });

    SimulateCmd simulate_cmd;
    auto* cs = app.add_subcommand("simulate", "sample a seeded scenario");
    cs->add_option("scenario", simulate_cmd.scenario, "scenario JSON")->required();
    cs->add_option("-o,--output", simulate_cmd.output, "data CSV path")->required();
    cs->add_option("--truth", simulate_cmd.truth, "write the planted truth here");
    cs->add_option("--seed", simulate_cmd.seed, "RNG seed")->envname("CAPACC_SEED");
    cs->callback([&] { simulate_cmd.run(); });

    TuneCmd tune_cmd;
    auto* ct = app.add_subcommand("tune", "calibrate the penalty scale on null data");
    ct->add_option("scenario", tune_cmd.scenario, "null scenario JSON (n, p, precision)")
        ->required();
    ct->add_option("-o,--output", tune_cmd.output, "result path (default stdout)");
    ct->add_option("--target-alpha", tune_cmd.target, "false positive target");
    ct->add_option("--delta", tune_cmd.delta, "allowed deviation from the target");
    ct->add_option("--reps", tune_cmd.reps, "null replicates");
    ct->add_option("--min-len", tune_cmd.min_len, "shortest collective segment");
    ct->add_option("--max-len", tune_cmd.max_len, "longest collective segment");
    ct->add_option("--threads", tune_cmd.threads, "worker cap");
    ct->add_option("--seed", tune_cmd.seed, "RNG seed")->envname("CAPACC_SEED");
    ct->add_flag("--validate", tune_cmd.validate,
                 "re-estimate alpha on a fresh replicate pool");
    ct->callback([&] { tune_cmd.run(); });

    EvaluateCmd evaluate_cmd;
    auto* cv = app.add_subcommand("evaluate", "score a detection against the truth");
    cv->add_option("--truth", evaluate_cmd.truth, "truth JSON");
    cv->add_option("--detected", evaluate_cmd.detected, "detection JSON");
    cv->add_option("--n", evaluate_cmd.n, "series length (default: from truth)");
    cv->add_option("-o,--output", evaluate_cmd.output, "report path (default stdout)");
    cv->add_option("--emit-curves", evaluate_cmd.curves,
                   "write a power curve CSV here instead of scoring files");
    cv->add_option("--scenario", evaluate_cmd.scenario, "scenario JSON for the curves");
    cv->add_option("--theta", evaluate_cmd.theta_list, "comma list of shift sizes");
    cv->add_option("--reps", evaluate_cmd.reps, "replicates per grid point");
    cv->add_option("--min-len", evaluate_cmd.min_len, "shortest collective segment");
    cv->add_option("--max-len", evaluate_cmd.max_len, "longest collective segment");
    cv->add_option("--threads", evaluate_cmd.threads, "worker cap");
    cv->add_option("--seed", evaluate_cmd.seed, "RNG seed")->envname("CAPACC_SEED");
    cv->add_option("--scale-correlated", evaluate_cmd.scale_correlated,
                   "penalty scale of the correlated method");
    cv->add_option("--scale-identity", evaluate_cmd.scale_identity,
                   "penalty scale of the identity method");
    cv->callback([&] { evaluate_cmd.run(); });

    BenchCmd bench_cmd;
    auto* cb = app.add_subcommand("bench", "time the single-segment saving");
    cb->add_option("--p-list", bench_cmd.p_list, "comma list of dimensions");
    cb->add_option("-r,--bandwidth", bench_cmd.r, "precision bandwidth");
    cb->add_option("--reps", bench_cmd.reps, "timed calls per dimension");
    cb->add_option("--n", bench_cmd.n, "rows of the timing dataset");
    cb->add_option("--seed", bench_cmd.seed, "RNG seed")->envname("CAPACC_SEED");
    cb->add_option("-o,--output", bench_cmd.output, "CSV path (default stdout)");
    cb->callback([&] { bench_cmd.run(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const capacc::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const capacc::ConvergenceError& e) {
        std::cerr << "did not converge: " << e.what() << "\n";
        return 4;
    } catch (const capacc::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
