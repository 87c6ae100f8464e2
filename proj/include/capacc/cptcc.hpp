#pragma once

#include "capacc/saving.hpp"

namespace capacc {

struct CptOptions {
    int min_len = 2;                   // minimum distance of tau from either end
    bool per_segment_penalties = false;  // rescale penalties to each sub-segment
    bool global_centring = false;        // centre sub-segments with the global mean
};

/* A single mean change at tau (1-based, global indexing); variables 1-based. */
struct ChangepointResult {
    int tau = 0;
    std::vector<int> variables;
    double value = 0.0;
    bool detected = false;
};

/*
 * Penalised saving of one mean change at tau splitting rows 1..n into
 * (0, tau] and (tau, n].  Expects data whose columns have zero sample mean.
 * The sparse surrogate adds the two segment programs; the dense branch is
 * the exact full-set saving of both sides minus alpha_dense.  Sparse wins
 * ties; early stopping forces the dense branch.
 */
SavingResult cpt_statistic(const DataMatrix& data, const PrecisionModel& model,
                           const NeighborhoodPlan& plan,
                           const PenaltyScheme& scheme, int tau);

/*
 * Best single changepoint: columns are centred, then the statistic is
 * scanned over tau in [min_len, n - min_len]; ties take the smallest tau.
 * detected is true when the best value is positive.
 */
ChangepointResult detect_single(const DataMatrix& data,
                                const PrecisionModel& model,
                                const NeighborhoodPlan& plan,
                                const PenaltyScheme& scheme,
                                const CptOptions& options = {});

/*
 * Binary segmentation: recursively split at detected changepoints until a
 * sub-segment is shorter than 2 * min_len or yields no detection.  Each
 * sub-segment is re-centred by its own column means unless global_centring
 * is set; penalties stay those of the full series unless
 * per_segment_penalties is set.  Results are sorted by tau and keep global
 * indexing, so consecutive changepoints are at least min_len apart.
 */
std::vector<ChangepointResult> detect_multiple(const DataMatrix& data,
                                               const PrecisionModel& model,
                                               const NeighborhoodPlan& plan,
                                               const PenaltyScheme& scheme,
                                               const CptOptions& options = {});

}  // namespace capacc
