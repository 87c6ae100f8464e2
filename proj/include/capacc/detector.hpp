#pragma once

#include "capacc/saving.hpp"

namespace capacc {

struct DetectOptions {
    int min_len = 2;        // shortest collective segment, >= 2
    int max_len = 0;        // longest collective segment; 0 means n
    bool pruning = true;
    bool point_anomalies = true;
    bool refine_subsets = false;  // re-optimise J per segment, sparse regime only
};

/* Work counters of one detector run. */
struct DetectStats {
    long long candidate_evaluations = 0;  // (t, m) pairs examined
    long long bqp_solves = 0;             // surrogate programs solved exactly
    long long pruned_candidates = 0;      // candidates retired by the cost test
};

struct DetectResult {
    AnomalySet anomalies;
    DetectStats stats;
    std::vector<double> optimal_cost;  // C(0..n)
};

/*
 * Penalised point-anomaly saving at row t (1-based): the anomaly surrogate
 * of the length-1 segment with linear penalty slope beta_point and no
 * offset, solved without early stopping.  The value is >= 0; an empty
 * subset means nothing beats the baseline.
 */
SavingResult point_saving(const SegmentSums& sums, const Matrix& q,
                          const NeighborhoodPlan& plan,
                          const PenaltyScheme& scheme, int t);

/*
 * True when candidate start t can never again produce the optimum:
 * C(t) + saving(t, m) + alpha_dense <= C(m).  The retirement only covers
 * segment ends at least min_len past m.
 */
bool prune_condition(double cost_t, double saving_t_m, double alpha_dense,
                     double cost_m);

/*
 * Optimal-partitioning detector for collective and point anomalies.
 * Collective candidates are segments (t, m] with
 * min_len <= m - t <= max_len; the recursion is
 *   C(m) = max(C(m-1), max_t C(t) + S(t, m), C(m-1) + S'(m)),  C(0) = 0,
 * with S the approximate penalised saving and S' the point saving.  Ties
 * prefer no anomaly, then a point, then the smallest start t.  Anomalies
 * are recovered by backtracking; every reported saving is positive.
 */
DetectResult detect(const DataMatrix& data, const PrecisionModel& model,
                    const NeighborhoodPlan& plan, const PenaltyScheme& scheme,
                    const DetectOptions& options = {});

}  // namespace capacc
