#pragma once

#include "capacc/core.hpp"

namespace capacc {

/* w_ij = true iff 0 < |i - j| <= r.  Requires 0 <= r <= p - 1 (r = 0 when p = 1). */
BoolMatrix banded_adjacency(int p, int r);

/* 4-neighbour adjacency on an m x m grid; variable (u, v) maps to (u-1)*m + v, 1-based. */
BoolMatrix lattice_adjacency(int m);

/*
 * Static solver plan for one banded sparsity pattern.
 *
 * For each variable d (0-based) the plan stores its neighbours
 * N_d = { i != d : pattern(d, i) } and the extended neighbourhood
 * M_d = P_d `intersect` union of N_i for i in d..min(p-1, d+r), where
 * P_d = { max(0, d-r), ..., d-1 } are the in-band predecessors.  M_d is the
 * part of the history a dynamic program must still distinguish when it
 * reaches variable d; a key fact used by the solver is
 * M_{d+1} \ {d} `subset` M_d, so the next level's key can be gathered from
 * the current one.  key_sources[d][k] gives, for each member of
 * extended[d+1], its bit position inside (extended[d], d).
 */
struct NeighborhoodPlan {
    int p = 0;
    int r = 0;          // bandwidth of the pattern
    int max_width = 0;  // max |M_d|
    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<int>> extended;
    std::vector<std::vector<int>> key_sources;
};

/*
 * Build the plan from a symmetric zero/nonzero pattern (diagonal ignored).
 * The pattern must be symmetric; bandwidth is derived from it.
 */
NeighborhoodPlan build_plan(const BoolMatrix& pattern);

/* Plan for the adjacency pattern of a precision model. */
NeighborhoodPlan build_plan(const PrecisionModel& model);

}  // namespace capacc
