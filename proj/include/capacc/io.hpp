#pragma once

#include "capacc/core.hpp"
#include "capacc/cptcc.hpp"
#include "capacc/simlab.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace capacc {

/* One parsed CLI invocation; shared knobs across subcommands. */
struct RunConfig {
    std::string input;
    std::string output;
    std::uint64_t seed = 0;
    int threads = 1;
    double scale_collective = 1.0;
    double scale_point = 1.0;
};

/* Numbers rendered with 17 significant digits; inf/nan map to null. */
std::string format_double(double v);

/*
 * CSV panel: first row holds column names, every later row one time point,
 * '.' as decimal separator.  Rejects ragged rows and non-numeric cells.
 */
DataMatrix read_data_csv(const std::string& path);
void write_data_csv(const std::string& path, const DataMatrix& data);

/*
 * Precision input, auto-detected: a JSON document (as written by the
 * estimate command), a dense CSV (header ignored, p data rows of p
 * entries), or a sparse triplet CSV with header "i,j,value" and 1-based
 * indices where mirrored duplicates must agree.
 */
Matrix read_precision(const std::string& path);

/* Adjacency CSV: square 0/1 matrix with a header row. */
BoolMatrix read_adjacency_csv(const std::string& path);

/*
 * Detection report with a fixed field order:
 * {"n", "p", "penalties", "collective", "points", "total_cost"}.
 * Variable indices and times are 1-based.  Output is byte-stable for
 * identical inputs.
 */
std::string anomalies_to_json(const AnomalySet& set, const PenaltyScheme& scheme,
                              int n, int p);

/* Parse an anomaly document (detector output or simulated truth). */
AnomalySet anomalies_from_json(const std::string& text);

std::string changepoints_to_json(const std::vector<ChangepointResult>& results,
                                 const PenaltyScheme& scheme, int n, int p);

std::string estimate_to_json(const Vector& mu0, const Matrix& q, bool repaired,
                             int sweeps, double gap);

std::string report_to_json(const EvaluationReport& report);

std::string tune_to_json(const TuneResult& result, double validated_alpha);

/* Scenario JSON: {"n", "p", "precision", "anomalies", "points"}. */
struct ScenarioConfig {
    SimScenario scenario;
    int p = 0;
    std::string precision_kind;  // identity | constant | car_band | car_lattice
    double rho = 0.0;
    int band = 1;
    int lattice = 0;
};

ScenarioConfig read_scenario(const std::string& path);

PrecisionModel scenario_precision(const ScenarioConfig& config);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace capacc
