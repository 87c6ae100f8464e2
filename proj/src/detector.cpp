#include "capacc/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace capacc {

namespace {

constexpr int kNever = std::numeric_limits<int>::max();

enum class Choice { none, point, collective };

struct Decision {
    Choice kind = Choice::none;
    int start = 0;
    std::vector<int> variables;  // 0-based
    double saving = 0.0;
};

std::vector<int> to_one_based(const std::vector<int>& subset) {
    std::vector<int> out(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) out[k] = subset[k] + 1;
    return out;
}

/* Sparse surrogate optimum and dense branch, sharing one built instance. */
SavingResult saving_from_instance(const BqpInstance& inst, double dense_value,
                                  double k_star) {
    const BqpSolution sparse = solve_banded_bqp(inst, k_star);
    SavingResult result;
    if (!sparse.early_stopped && sparse.value >= dense_value) {
        result.value = sparse.value;
        result.regime = Regime::sparse;
        for (int d = 0; d < inst.p; ++d) {
            if (sparse.assignment[d]) result.variables.push_back(d);
        }
    } else {
        result.value = dense_value;
        result.regime = Regime::dense;
        result.variables.resize(inst.p);
        for (int d = 0; d < inst.p; ++d) result.variables[d] = d;
    }
    return result;
}

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

}  // namespace

SavingResult point_saving(const SegmentSums& sums, const Matrix& q,
                          const NeighborhoodPlan& plan,
                          const PenaltyScheme& scheme, int t) {
    if (t < 1 || t > sums.n()) {
        throw std::invalid_argument("point_saving: t out of range");
    }
    const SegmentStats st = sums.stats(t - 1, t);
    const BqpInstance inst =
        build_anomaly_bqp(q, plan, st, scheme.beta_point, 0.0);
    const BqpSolution sol =
        solve_banded_bqp(inst, std::numeric_limits<double>::infinity());
    SavingResult result;
    result.value = sol.value;
    result.regime = Regime::sparse;
    for (int d = 0; d < inst.p; ++d) {
        if (sol.assignment[d]) result.variables.push_back(d);
    }
    return result;
}

bool prune_condition(double cost_t, double saving_t_m, double alpha_dense,
                     double cost_m) {
    return cost_t + saving_t_m + alpha_dense <= cost_m;
}

DetectResult detect(const DataMatrix& data, const PrecisionModel& model,
                    const NeighborhoodPlan& plan, const PenaltyScheme& scheme,
                    const DetectOptions& options) {
    const int n = data.n();
    const int p = data.p();
    if (model.p() != p || plan.p != p || scheme.p != p) {
        throw std::invalid_argument("detect: dimension mismatch");
    }
    const int l = options.min_len;
    const int max_len = options.max_len == 0 ? n : options.max_len;
    if (l < 2) {
        throw std::invalid_argument("detect: min_len must be >= 2");
    }
    if (max_len < l || max_len > n) {
        throw std::invalid_argument("detect: need min_len <= max_len <= n");
    }

    const Matrix& q = model.q();
    const SegmentSums sums(data.values(), model.mu0());
    const double inf = std::numeric_limits<double>::infinity();

    DetectResult res;
    res.optimal_cost.assign(n + 1, 0.0);
    std::vector<double>& cost = res.optimal_cost;
    std::vector<Decision> decisions(n + 1);

    std::vector<int> candidates;
    std::vector<int> retire_at(n + 1, kNever);
    std::vector<double> seg_bound(n + 1, 0.0);  // per-m bound on saving(t, m)

    for (int m = 1; m <= n; ++m) {
        if (m - l >= 0) candidates.push_back(m - l);
        std::erase_if(candidates, [&](int t) {
            return t < m - max_len || retire_at[t] <= m;
        });

        double best = cost[m - 1];
        Decision dec;

        if (options.point_anomalies) {
            const SegmentStats st = sums.stats(m - 1, m);
            const BqpInstance inst =
                build_anomaly_bqp(q, plan, st, scheme.beta_point, 0.0);
            if (cost[m - 1] + bqp_upper_bound(inst) > best) {
                const BqpSolution sol = solve_banded_bqp(inst, inf);
                if (cost[m - 1] + sol.value > best) {
                    best = cost[m - 1] + sol.value;
                    dec.kind = Choice::point;
                    dec.saving = sol.value;
                    dec.variables.clear();
                    for (int d = 0; d < p; ++d) {
                        if (sol.assignment[d]) dec.variables.push_back(d);
                    }
                }
            }
        }

        for (int t : candidates) {
            ++res.stats.candidate_evaluations;
            const SegmentStats st = sums.stats(t, m);
            const double dense = dense_saving(q, plan, st) - scheme.alpha_dense;
            const BqpInstance inst =
                build_anomaly_bqp(q, plan, st, scheme.beta, scheme.alpha_sparse);
            const double bound = std::max(bqp_upper_bound(inst), dense);
            seg_bound[t] = bound;
            if (cost[t] + bound <= best) continue;  // cannot strictly win

            ++res.stats.bqp_solves;
            const SavingResult sr =
                saving_from_instance(inst, dense, scheme.k_star);
            seg_bound[t] = sr.value;
            if (cost[t] + sr.value > best) {
                best = cost[t] + sr.value;
                dec.kind = Choice::collective;
                dec.start = t;
                dec.variables = sr.variables;
                dec.saving = sr.value;
            }
        }

        cost[m] = best;
        decisions[m] = dec;

        if (options.pruning) {
            for (int t : candidates) {
                if (retire_at[t] == kNever &&
                    prune_condition(cost[t], seg_bound[t], scheme.alpha_dense,
                                    cost[m])) {
                    retire_at[t] = m + l;  // still usable for ends before m + l
                    ++res.stats.pruned_candidates;
                }
            }
        }
    }

    AnomalySet& out = res.anomalies;
    out.total_cost = cost[n];
    for (int m = n; m > 0;) {
        const Decision& dec = decisions[m];
        switch (dec.kind) {
            case Choice::none:
                --m;
                break;
            case Choice::point: {
                PointAnomaly pa;
                pa.time = m;
                pa.variables = to_one_based(dec.variables);
                pa.saving = dec.saving;
                out.points.push_back(pa);
                --m;
                break;
            }
            case Choice::collective: {
                CollectiveAnomaly ca;
                ca.start = dec.start;
                ca.end = m;
                std::vector<int> subset = dec.variables;
                if (options.refine_subsets) {
                    const SegmentStats st = sums.stats(dec.start, m);
                    const BqpInstance inst = build_anomaly_bqp(
                        q, plan, st, scheme.beta, scheme.alpha_sparse);
                    const BqpSolution refined = solve_banded_bqp(inst, inf);
                    std::vector<int> alt;
                    for (int d = 0; d < p; ++d) {
                        if (refined.assignment[d]) alt.push_back(d);
                    }
                    if (!alt.empty()) subset = alt;
                }
                const SegmentStats st = sums.stats(dec.start, m);
                ca.mean_estimate = subset_mle(q, st.mean, subset);
                ca.variables = to_one_based(subset);
                ca.saving = dec.saving;
                out.collective.push_back(ca);
                m = dec.start;
                break;
            }
        }
    }
    std::reverse(out.collective.begin(), out.collective.end());
    std::reverse(out.points.begin(), out.points.end());
    return res;
}

}  // namespace capacc
