#include "capacc/cptcc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace capacc {

namespace {

double dense_saving(const Matrix& q, const NeighborhoodPlan& plan,
                    const SegmentStats& stats) {
    double s = 0.0;
    for (int d = 0; d < plan.p; ++d) {
        double row = q(d, d) * stats.mean(d);
        for (int i : plan.neighbors[d]) row += q(d, i) * stats.mean(i);
        s += stats.mean(d) * row;
    }
    return stats.length * s;
}

SavingResult cpt_value(const Matrix& q, const NeighborhoodPlan& plan,
                       const PenaltyScheme& scheme, const SegmentStats& left,
                       const SegmentStats& right) {
    const BqpInstance inst =
        build_cpt_bqp(q, plan, left, right, scheme.beta, scheme.alpha_sparse);
    const double dense = dense_saving(q, plan, left) +
                         dense_saving(q, plan, right) - scheme.alpha_dense;
    const BqpSolution sparse = solve_banded_bqp(inst, scheme.k_star);
    SavingResult result;
    if (!sparse.early_stopped && sparse.value >= dense) {
        result.value = sparse.value;
        result.regime = Regime::sparse;
        for (int d = 0; d < inst.p; ++d) {
            if (sparse.assignment[d]) result.variables.push_back(d);
        }
    } else {
        result.value = dense;
        result.regime = Regime::dense;
        result.variables.resize(inst.p);
        for (int d = 0; d < inst.p; ++d) result.variables[d] = d;
    }
    return result;
}

/* Best change over tau in [lo + min_len, hi - min_len] of pre-centred sums. */
ChangepointResult scan(const SegmentSums& sums, const Matrix& q,
                       const NeighborhoodPlan& plan, const PenaltyScheme& scheme,
                       int min_len) {
    const int n = sums.n();
    ChangepointResult best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int tau = min_len; tau <= n - min_len; ++tau) {
        const SavingResult sr = cpt_value(q, plan, scheme, sums.stats(0, tau),
                                          sums.stats(tau, n));
        if (sr.value > best.value) {
            best.value = sr.value;
            best.tau = tau;
            best.variables.assign(sr.variables.size(), 0);
            for (std::size_t k = 0; k < sr.variables.size(); ++k) {
                best.variables[k] = sr.variables[k] + 1;
            }
        }
    }
    best.detected = best.value > 0.0;
    return best;
}

Matrix centred(const Matrix& values) {
    return values.rowwise() - values.colwise().mean();
}

}  // namespace

SavingResult cpt_statistic(const DataMatrix& data, const PrecisionModel& model,
                           const NeighborhoodPlan& plan,
                           const PenaltyScheme& scheme, int tau) {
    const int n = data.n();
    if (model.p() != data.p() || plan.p != data.p()) {
        throw std::invalid_argument("cpt_statistic: dimension mismatch");
    }
    if (tau < 1 || tau >= n) {
        throw std::invalid_argument("cpt_statistic: need 1 <= tau < n");
    }
    const SegmentSums sums(data.values(), Vector::Zero(data.p()));
    return cpt_value(model.q(), plan, scheme, sums.stats(0, tau),
                     sums.stats(tau, n));
}

ChangepointResult detect_single(const DataMatrix& data,
                                const PrecisionModel& model,
                                const NeighborhoodPlan& plan,
                                const PenaltyScheme& scheme,
                                const CptOptions& options) {
    const int n = data.n();
    const int l = options.min_len;
    if (l < 1) {
        throw std::invalid_argument("detect_single: min_len must be >= 1");
    }
    if (n < 2 * l) {
        throw std::invalid_argument("detect_single: need n >= 2 * min_len");
    }
    const SegmentSums sums(centred(data.values()), Vector::Zero(data.p()));
    return scan(sums, model.q(), plan, scheme, l);
}

namespace {

void split(const Matrix& values, int offset, const PrecisionModel& model,
           const NeighborhoodPlan& plan, const PenaltyScheme& scheme,
           const CptOptions& options, std::vector<ChangepointResult>& out) {
    const int n = static_cast<int>(values.rows());
    if (n < 2 * options.min_len) return;

    const Matrix seg = options.global_centring ? values : centred(values);
    const PenaltyScheme local =
        options.per_segment_penalties
            ? default_penalties(n, scheme.p, scheme.scale_collective,
                                scheme.scale_point)
            : scheme;
    const SegmentSums sums(seg, Vector::Zero(scheme.p));
    ChangepointResult best = scan(sums, model.q(), plan, local, options.min_len);
    if (!best.detected) return;

    const int tau = best.tau;  // local index
    best.tau = offset + tau;
    out.push_back(best);
    split(values.topRows(tau), offset, model, plan, scheme, options, out);
    split(values.bottomRows(n - tau), offset + tau, model, plan, scheme, options,
          out);
}

}  // namespace

std::vector<ChangepointResult> detect_multiple(const DataMatrix& data,
                                               const PrecisionModel& model,
                                               const NeighborhoodPlan& plan,
                                               const PenaltyScheme& scheme,
                                               const CptOptions& options) {
    if (model.p() != data.p() || plan.p != data.p()) {
        throw std::invalid_argument("detect_multiple: dimension mismatch");
    }
    if (options.min_len < 1) {
        throw std::invalid_argument("detect_multiple: min_len must be >= 1");
    }
    std::vector<ChangepointResult> out;
    Matrix base =
        options.global_centring ? centred(data.values()) : data.values();
    split(base, 0, model, plan, scheme, options, out);
    std::sort(out.begin(), out.end(),
              [](const ChangepointResult& a, const ChangepointResult& b) {
                  return a.tau < b.tau;
              });
    return out;
}

}  // namespace capacc
