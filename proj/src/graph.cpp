#include "capacc/graph.hpp"

#include <algorithm>

namespace capacc {

BoolMatrix banded_adjacency(int p, int r) {
    if (p < 1) {
        throw std::invalid_argument("banded_adjacency: need p >= 1");
    }
    if (r < 0 || r > p - 1) {
        throw std::invalid_argument("banded_adjacency: need 0 <= r <= p - 1");
    }
    BoolMatrix w = BoolMatrix::Constant(p, p, false);
    for (int i = 0; i < p; ++i) {
        for (int j = std::max(0, i - r); j <= std::min(p - 1, i + r); ++j) {
            if (j != i) w(i, j) = true;
        }
    }
    return w;
}

BoolMatrix lattice_adjacency(int m) {
    if (m < 1) {
        throw std::invalid_argument("lattice_adjacency: need m >= 1");
    }
    const int p = m * m;
    BoolMatrix w = BoolMatrix::Constant(p, p, false);
    auto idx = [m](int u, int v) { return u * m + v; };  // 0-based grid coords
    for (int u = 0; u < m; ++u) {
        for (int v = 0; v < m; ++v) {
            const int a = idx(u, v);
            if (u + 1 < m) {
                w(a, idx(u + 1, v)) = true;
                w(idx(u + 1, v), a) = true;
            }
            if (v + 1 < m) {
                w(a, idx(u, v + 1)) = true;
                w(idx(u, v + 1), a) = true;
            }
        }
    }
    return w;
}

NeighborhoodPlan build_plan(const BoolMatrix& pattern) {
    const int p = static_cast<int>(pattern.rows());
    if (p < 1 || pattern.cols() != p) {
        throw std::invalid_argument("build_plan: pattern must be square and non-empty");
    }
    NeighborhoodPlan plan;
    plan.p = p;
    plan.neighbors.assign(p, {});
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            if (i == j) continue;
            if (pattern(i, j) != pattern(j, i)) {
                throw std::invalid_argument("build_plan: pattern must be symmetric");
            }
            if (pattern(i, j)) {
                plan.neighbors[i].push_back(j);
                plan.r = std::max(plan.r, std::abs(i - j));
            }
        }
    }

    plan.extended.assign(p, {});
    for (int d = 0; d < p; ++d) {
        const int lo = std::max(0, d - plan.r);
        const int hi = std::min(p - 1, d + plan.r);
        std::vector<bool> hit(p, false);
        for (int i = d; i <= hi; ++i) {
            for (int j : plan.neighbors[i]) hit[j] = true;
        }
        for (int j = lo; j < d; ++j) {
            if (hit[j]) plan.extended[d].push_back(j);
        }
        plan.max_width =
            std::max(plan.max_width, static_cast<int>(plan.extended[d].size()));
    }

    plan.key_sources.assign(p, {});
    for (int d = 0; d + 1 < p; ++d) {
        const auto& cur = plan.extended[d];
        for (int j : plan.extended[d + 1]) {
            if (j == d) {
                plan.key_sources[d].push_back(static_cast<int>(cur.size()));
                continue;
            }
            auto it = std::find(cur.begin(), cur.end(), j);
            if (it == cur.end()) {
                // cannot happen for a pattern within bandwidth r
                throw std::logic_error("build_plan: extended neighbourhoods not nested");
            }
            plan.key_sources[d].push_back(static_cast<int>(it - cur.begin()));
        }
    }
    return plan;
}

NeighborhoodPlan build_plan(const PrecisionModel& model) {
    return build_plan(model.adjacency());
}

}  // namespace capacc
