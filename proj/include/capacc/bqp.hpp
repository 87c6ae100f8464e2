#pragma once

#include "capacc/graph.hpp"

#include <cstdint>

namespace capacc {

/*
 * Binary quadratic program max_u u'Au + u'b + c over u in {0,1}^p with A
 * symmetric and banded.  Off-diagonal entries are stored per variable,
 * aligned with the plan's extended neighbourhoods: cross[d][k] is
 * A(d, plan.extended[d][k]).  Every nonzero A(d, i) with i < d lies inside
 * extended[d], so this storage is lossless.  The plan must outlive the
 * instance.
 */
struct BqpInstance {
    int p = 0;
    double constant = 0.0;
    Vector linear;
    Vector diag;
    std::vector<std::vector<double>> cross;
    const NeighborhoodPlan* plan = nullptr;

    double objective(const std::vector<std::uint8_t>& u) const;
};

/* Per-level instrumentation of the dynamic program, for structural tests. */
struct DpTrace {
    std::vector<int> parents_per_level;   // positions after parent selection
    std::vector<int> children_per_level;  // positions after growing variable d
    std::vector<int> min_ones_per_level;  // smallest popcount among survivors
};

struct BqpSolution {
    double value = 0.0;
    std::vector<std::uint8_t> assignment;  // one entry per variable
    bool early_stopped = false;
    int levels_processed = 0;
};

/*
 * Exact maximisation by dynamic programming over the variables in index
 * order.  Work is O(sum_d 2^|M_d|) <= O(p 2^r).  Value ties are broken
 * towards the lexicographically smallest assignment.
 *
 * The search stops early once every surviving partial assignment uses more
 * than k_star ones (pass +inf to disable).  In that case early_stopped is
 * set, the returned value is a valid lower bound on the optimum (the
 * remaining variables are reported as zero), and the caller is expected to
 * fall back to the dense regime.
 */
BqpSolution solve_banded_bqp(const BqpInstance& instance, double k_star,
                             DpTrace* trace = nullptr);

/* Exhaustive reference maximiser with the same tie-break; refuses p > 25. */
BqpSolution brute_force_bqp(const BqpInstance& instance);

/*
 * Cheap upper bound on the maximum: c + sum_d max(0, b_d + A_dd + sum_i |A_di|),
 * from 2 A_di u_d u_i <= |A_di| (u_d + u_i).
 */
double bqp_upper_bound(const BqpInstance& instance);

}  // namespace capacc
