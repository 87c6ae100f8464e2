#pragma once

#include "capacc/core.hpp"
#include "capacc/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace capacc {

/*
 * Conditional auto-regression precision on the graph w with dependence rho
 * in (0, 1): Q0 = diag(w 1) - rho * w, rescaled symmetrically so the
 * implied covariance has unit diagonal.  Errors unless Q0 is positive
 * definite (isolated vertices make it singular).
 */
PrecisionModel car_precision(const BoolMatrix& w, double rho);

/*
 * Precision of the equicorrelation covariance rho 1 1' + (1 - rho) I via
 * the rank-one inversion formula; requires -1/(p-1) < rho < 1.
 */
PrecisionModel constant_correlation_precision(int p, double rho);

/* How an anomalous mean is drawn before rescaling to norm theta. */
enum class ChangeClass {
    covariance,   // N(0, Sigma_JJ)
    correlated,   // N(0, equicorrelation(rho_change))
};

struct PlannedAnomaly {
    int start = 0;  // (start, end], 1-based convention as elsewhere
    int end = 0;
    std::vector<int> variables;  // 1-based
    double theta = 1.0;          // Euclidean norm of the mean shift
    ChangeClass change_class = ChangeClass::covariance;
    double rho_change = 0.0;     // used by ChangeClass::correlated
};

struct PlannedPoint {
    int time = 0;       // 1-based
    int n_variables = 1;
    double size_sd = 0.0;  // 0 picks the default sqrt(4 log p)
};

struct SimScenario {
    int n = 0;
    std::vector<PlannedAnomaly> anomalies;
    std::vector<PlannedPoint> points;
};

struct SimData {
    DataMatrix data;
    AnomalySet truth;
};

/*
 * Draw one replicate: correlated Gaussian noise with precision model.q()
 * around model.mu0(), plus the planned mean shifts and point anomalies.
 * Fully determined by the seed; truth savings are set to zero.
 */
SimData sample_scenario(const SimScenario& scenario, const PrecisionModel& model,
                        std::uint64_t seed);

/* 0/1 labels per row: 1 inside any collective segment or at a point anomaly. */
std::vector<int> anomaly_labels(const AnomalySet& set, int n);

/*
 * Adjusted Rand index between two label vectors.  When the correction term
 * degenerates (e.g. both partitions are a single cluster) the index is 1
 * for identical partitions and 0 otherwise.
 */
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct SubsetMetrics {
    double precision = 0.0;
    double recall = 0.0;
};

/*
 * Variable-subset precision and recall (indices compared as sets).  Empty
 * reference or prediction fall back to 1 when both are empty and 0 when
 * only one is.
 */
SubsetMetrics subset_metrics(const std::vector<int>& j_true,
                             const std::vector<int>& j_pred);

struct TuneResult {
    double scale = 1.0;
    double alpha_hat = 0.0;
    int iterations = 0;
};

/*
 * Calibrate the penalty scale so the false positive rate over `reps` null
 * replicates lands in [target - delta, target + delta].  The same frozen
 * pool of datasets is reused for every candidate scale, making alpha_hat
 * non-increasing in the scale, and the scale is bisected over
 * [0.1, 100] (geometrically).  detects(data, scale) must return whether
 * the detector flags anything.  Errors when the bracket fails or the
 * bisection cannot land in the band.
 */
TuneResult tune_scale(const PrecisionModel& null_model, int n, double target,
                      double delta, int reps,
                      const std::function<bool(const DataMatrix&, double)>& detects,
                      std::uint64_t seed, int threads = 1);

struct CountTuneResult {
    double scale = 1.0;
    int count = 0;
    bool exact = false;       // a grid scale attained the target exactly
    int grid_violations = 0;  // non-monotone steps observed along the grid
};

/*
 * Pick the penalty scale from a fixed geometric grid over [0.1, 100] so the
 * number of detected collective anomalies matches target_count; if no grid
 * point attains it, the closest count wins (larger scale on ties) and
 * exact stays false.
 */
CountTuneResult count_based_tune(const std::function<int(double)>& count_at,
                                 int target_count);

/* Aggregate comparison figures; unfilled entries stay empty. */
struct EvaluationReport {
    std::optional<double> ari;
    std::optional<double> subset_precision;
    std::optional<double> subset_recall;
    std::optional<double> power;
    std::optional<double> false_positive_rate;
    std::optional<double> rmse_tau;
};

/* ARI plus subset metrics of a detected set against the truth. */
EvaluationReport evaluate_detection(const AnomalySet& truth,
                                    const AnomalySet& detected, int n);

}  // namespace capacc
