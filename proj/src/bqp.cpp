#include "capacc/bqp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace capacc {

namespace {

struct Node {
    double value = 0.0;
    std::int32_t parent = -1;  // index into the previous level's node array
    std::int32_t ones = 0;     // popcount of the stored path
    std::uint8_t bit = 0;      // assignment of this level's variable
};

void check_instance(const BqpInstance& inst) {
    if (inst.plan == nullptr) {
        throw std::invalid_argument("bqp: instance has no plan");
    }
    if (inst.p != inst.plan->p || inst.linear.size() != inst.p ||
        inst.diag.size() != inst.p ||
        static_cast<int>(inst.cross.size()) != inst.p) {
        throw std::invalid_argument("bqp: instance and plan dimensions disagree");
    }
}

/* Reconstruct the assignment of levels 0..level for the node at node_index. */
void reconstruct(const std::vector<std::vector<Node>>& levels, int level,
                 int node_index, std::vector<std::uint8_t>& out) {
    out.assign(level + 1, 0);
    int idx = node_index;
    for (int d = level; d >= 0; --d) {
        const Node& nd = levels[d][idx];
        out[d] = nd.bit;
        idx = nd.parent;
    }
}

/* Lexicographic order on the full stored paths of two same-level nodes. */
bool path_less(const std::vector<std::vector<Node>>& levels, int level, int a,
               int b, std::vector<std::uint8_t>& buf_a,
               std::vector<std::uint8_t>& buf_b) {
    reconstruct(levels, level, a, buf_a);
    reconstruct(levels, level, b, buf_b);
    return std::lexicographical_compare(buf_a.begin(), buf_a.end(),
                                        buf_b.begin(), buf_b.end());
}

}  // namespace

double BqpInstance::objective(const std::vector<std::uint8_t>& u) const {
    check_instance(*this);
    if (static_cast<int>(u.size()) != p) {
        throw std::invalid_argument("bqp: assignment length mismatch");
    }
    double v = constant;
    for (int d = 0; d < p; ++d) {
        if (!u[d]) continue;
        v += linear(d) + diag(d);
        const auto& ext = plan->extended[d];
        for (std::size_t k = 0; k < ext.size(); ++k) {
            if (u[ext[k]]) v += 2.0 * cross[d][k];
        }
    }
    return v;
}

BqpSolution solve_banded_bqp(const BqpInstance& inst, double k_star,
                             DpTrace* trace) {
    check_instance(inst);
    if (std::isnan(k_star) || k_star <= 0.0) {
        throw std::invalid_argument("bqp: k_star must be positive or +inf");
    }
    const NeighborhoodPlan& plan = *inst.plan;
    const int p = inst.p;

    if (trace != nullptr) {
        trace->parents_per_level.clear();
        trace->children_per_level.clear();
        trace->min_ones_per_level.clear();
    }

    // levels[d] holds the grown positions after conditioning on variable d,
    // keyed by (bits of extended[d], bit of d); key bit k < |extended[d]|
    // is the assignment of extended[d][k], the top bit is variable d's.
    std::vector<std::vector<Node>> levels(p);
    std::vector<int> selected;       // per next-level key: index of best position
    std::vector<double> gain;        // subset sums of cross terms per key
    std::vector<std::uint8_t> buf_a, buf_b;

    int min_ones = 0;
    int last_level = -1;
    bool stopped = false;

    for (int d = 0; d < p; ++d) {
        if (static_cast<double>(min_ones) > k_star) {
            stopped = true;
            break;
        }
        const auto& ext = plan.extended[d];
        const int width = static_cast<int>(ext.size());
        const std::size_t n_parents = std::size_t{1} << width;

        // Parent selection: best previous position for each pattern of
        // extended[d]; ties keep the lexicographically smaller path.
        selected.assign(n_parents, -1);
        if (d == 0) {
            // single empty-key root handled below
        } else {
            const auto& prev = levels[d - 1];
            const auto& src = plan.key_sources[d - 1];
            for (int idx = 0; idx < static_cast<int>(prev.size()); ++idx) {
                std::size_t key = 0;
                for (int k = 0; k < width; ++k) {
                    key |= static_cast<std::size_t>((idx >> src[k]) & 1) << k;
                }
                int& slot = selected[key];
                if (slot < 0 || prev[idx].value > prev[slot].value ||
                    (prev[idx].value == prev[slot].value &&
                     path_less(levels, d - 1, idx, slot, buf_a, buf_b))) {
                    slot = idx;
                }
            }
        }

        // Subset sums of 2 * A(d, extended[d][k]) over the key bits.
        gain.assign(n_parents, 0.0);
        for (std::size_t key = 1; key < n_parents; ++key) {
            const int low = std::countr_zero(key);
            gain[key] = gain[key & (key - 1)] + 2.0 * inst.cross[d][low];
        }

        auto& cur = levels[d];
        cur.assign(n_parents << 1, Node{});
        const double base = inst.linear(d) + inst.diag(d);
        int level_min = std::numeric_limits<int>::max();
        for (std::size_t key = 0; key < n_parents; ++key) {
            const double parent_value =
                d == 0 ? inst.constant : levels[d - 1][selected[key]].value;
            const std::int32_t parent_idx =
                d == 0 ? -1 : static_cast<std::int32_t>(selected[key]);
            const std::int32_t parent_ones =
                d == 0 ? 0 : levels[d - 1][selected[key]].ones;

            Node& off = cur[key];
            off.value = parent_value;
            off.parent = parent_idx;
            off.ones = parent_ones;
            off.bit = 0;

            Node& on = cur[key | n_parents];
            on.value = parent_value + base + gain[key];
            on.parent = parent_idx;
            on.ones = parent_ones + 1;
            on.bit = 1;

            level_min = std::min(level_min, std::min(off.ones, on.ones));
        }
        min_ones = level_min;
        last_level = d;

        if (trace != nullptr) {
            trace->parents_per_level.push_back(static_cast<int>(n_parents));
            trace->children_per_level.push_back(static_cast<int>(cur.size()));
            trace->min_ones_per_level.push_back(min_ones);
        }
    }

    BqpSolution sol;
    sol.early_stopped = stopped;
    sol.levels_processed = last_level + 1;

    const auto& last = levels[last_level];
    int best = 0;
    for (int idx = 1; idx < static_cast<int>(last.size()); ++idx) {
        if (last[idx].value > last[best].value ||
            (last[idx].value == last[best].value &&
             path_less(levels, last_level, idx, best, buf_a, buf_b))) {
            best = idx;
        }
    }
    sol.value = last[best].value;
    reconstruct(levels, last_level, best, sol.assignment);
    sol.assignment.resize(p, 0);  // unreached variables count as zero
    return sol;
}

BqpSolution brute_force_bqp(const BqpInstance& inst) {
    check_instance(inst);
    if (inst.p > 25) {
        throw std::invalid_argument("brute_force_bqp: refusing p > 25");
    }
    const int p = inst.p;
    std::vector<std::uint8_t> u(p, 0), best_u(p, 0);
    double best = inst.objective(best_u);
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << p); ++m) {
        for (int d = 0; d < p; ++d) u[d] = (m >> d) & 1;
        const double v = inst.objective(u);
        if (v > best || (v == best && std::lexicographical_compare(
                                          u.begin(), u.end(), best_u.begin(),
                                          best_u.end()))) {
            best = v;
            best_u = u;
        }
    }
    BqpSolution sol;
    sol.value = best;
    sol.assignment = best_u;
    sol.levels_processed = p;
    return sol;
}

double bqp_upper_bound(const BqpInstance& inst) {
    check_instance(inst);
    const int p = inst.p;
    std::vector<double> weight(p, 0.0);
    for (int d = 0; d < p; ++d) {
        weight[d] += inst.linear(d) + inst.diag(d);
        const auto& ext = inst.plan->extended[d];
        for (std::size_t k = 0; k < ext.size(); ++k) {
            const double a = std::abs(inst.cross[d][k]);
            weight[d] += a;
            weight[ext[k]] += a;
        }
    }
    double bound = inst.constant;
    for (int d = 0; d < p; ++d) bound += std::max(0.0, weight[d]);
    return bound;
}

}  // namespace capacc
