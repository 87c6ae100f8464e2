#include "capacc/saving.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace capacc {

namespace {

void check_subset(const std::vector<int>& subset, int p) {
    for (std::size_t k = 0; k < subset.size(); ++k) {
        if (subset[k] < 0 || subset[k] >= p) {
            throw std::invalid_argument("saving: subset index out of range");
        }
        if (k > 0 && subset[k] <= subset[k - 1]) {
            throw std::invalid_argument("saving: subset must be sorted and unique");
        }
    }
}

/* length * mean' Q mean through the sparsity pattern of the plan. */
double full_set_saving(const Matrix& q, const NeighborhoodPlan& plan,
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

SegmentSums::SegmentSums(const Matrix& values, const Vector& mu0) {
    const int n = static_cast<int>(values.rows());
    const int p = static_cast<int>(values.cols());
    if (mu0.size() != p) {
        throw std::invalid_argument("SegmentSums: mu0 length mismatch");
    }
    cum_.resize(n + 1, p);
    cum_.row(0).setZero();
    std::vector<double> comp(p, 0.0);
    for (int t = 0; t < n; ++t) {
        for (int j = 0; j < p; ++j) {
            const double y = (values(t, j) - mu0(j)) - comp[j];
            const double s = cum_(t, j) + y;
            comp[j] = (s - cum_(t, j)) - y;
            cum_(t + 1, j) = s;
        }
    }
}

SegmentStats SegmentSums::stats(int s, int e) const {
    if (s < 0 || e <= s || e > n()) {
        throw std::invalid_argument("SegmentSums: need 0 <= s < e <= n");
    }
    SegmentStats st;
    st.length = e - s;
    st.mean = (cum_.row(e) - cum_.row(s)).transpose() / st.length;
    return st;
}

Vector subset_mle(const Matrix& q, const Vector& mean,
                  const std::vector<int>& subset) {
    const int p = static_cast<int>(q.rows());
    if (mean.size() != p) {
        throw std::invalid_argument("subset_mle: mean length mismatch");
    }
    check_subset(subset, p);
    if (subset.empty()) {
        throw std::invalid_argument("subset_mle: subset must be non-empty");
    }
    const int k = static_cast<int>(subset.size());

    std::vector<std::uint8_t> in(p, 0);
    for (int j : subset) in[j] = 1;

    Matrix q_jj(k, k);
    Vector rhs = Vector::Zero(k);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) q_jj(a, b) = q(subset[a], subset[b]);
        double cross = 0.0;
        for (int i = 0; i < p; ++i) {
            if (!in[i]) cross += q(subset[a], i) * mean(i);
        }
        rhs(a) = cross;
    }
    Eigen::LLT<Matrix> llt(q_jj);
    if (llt.info() != Eigen::Success) {
        throw NumericError("subset_mle: Q_JJ is not positive definite");
    }
    Vector shift = llt.solve(rhs);
    Vector mu(k);
    for (int a = 0; a < k; ++a) mu(a) = mean(subset[a]) + shift(a);
    return mu;
}

double exact_saving(const Matrix& q, const SegmentStats& stats,
                    const std::vector<int>& subset) {
    const int p = static_cast<int>(q.rows());
    if (stats.mean.size() != p) {
        throw std::invalid_argument("exact_saving: stats dimension mismatch");
    }
    if (subset.empty()) return 0.0;
    if (static_cast<int>(subset.size()) == p) {
        // Full set: the MLE is the segment mean itself.  Accumulate in the
        // same order as the banded evaluation so the two paths agree to the
        // last bit.
        double s = 0.0;
        for (int d = 0; d < p; ++d) {
            double row = q(d, d) * stats.mean(d);
            for (int i = 0; i < p; ++i) {
                if (i != d && std::abs(q(d, i)) > PrecisionModel::pattern_tol) {
                    row += q(d, i) * stats.mean(i);
                }
            }
            s += stats.mean(d) * row;
        }
        return stats.length * s;
    }
    Vector mu_sub = subset_mle(q, stats.mean, subset);
    Vector mu = Vector::Zero(p);
    for (std::size_t a = 0; a < subset.size(); ++a) mu(subset[a]) = mu_sub(a);
    return stats.length * (2.0 * stats.mean - mu).dot(q * mu);
}

BqpInstance build_anomaly_bqp(const Matrix& q, const NeighborhoodPlan& plan,
                              const SegmentStats& stats, double beta,
                              double alpha) {
    const int p = plan.p;
    if (q.rows() != p || stats.mean.size() != p) {
        throw std::invalid_argument("build_anomaly_bqp: dimension mismatch");
    }
    BqpInstance inst;
    inst.p = p;
    inst.plan = &plan;
    inst.constant = -alpha;
    inst.linear.resize(p);
    inst.diag.resize(p);
    inst.cross.resize(p);
    const double len = stats.length;
    for (int d = 0; d < p; ++d) {
        double qm = q(d, d) * stats.mean(d);
        for (int i : plan.neighbors[d]) qm += q(d, i) * stats.mean(i);
        inst.linear(d) = 2.0 * len * stats.mean(d) * qm - beta;
        inst.diag(d) = -len * stats.mean(d) * stats.mean(d) * q(d, d);
        const auto& ext = plan.extended[d];
        inst.cross[d].resize(ext.size());
        for (std::size_t k = 0; k < ext.size(); ++k) {
            const int i = ext[k];
            inst.cross[d][k] = -len * stats.mean(d) * stats.mean(i) * q(d, i);
        }
    }
    return inst;
}

BqpInstance build_cpt_bqp(const Matrix& q, const NeighborhoodPlan& plan,
                          const SegmentStats& left, const SegmentStats& right,
                          double beta, double alpha) {
    const int p = plan.p;
    if (q.rows() != p || left.mean.size() != p || right.mean.size() != p) {
        throw std::invalid_argument("build_cpt_bqp: dimension mismatch");
    }
    BqpInstance inst;
    inst.p = p;
    inst.plan = &plan;
    inst.constant = -alpha;
    inst.linear.resize(p);
    inst.diag.resize(p);
    inst.cross.resize(p);
    const double nl = left.length;
    const double nr = right.length;
    for (int d = 0; d < p; ++d) {
        double qml = q(d, d) * left.mean(d);
        double qmr = q(d, d) * right.mean(d);
        for (int i : plan.neighbors[d]) {
            qml += q(d, i) * left.mean(i);
            qmr += q(d, i) * right.mean(i);
        }
        inst.linear(d) =
            2.0 * nl * left.mean(d) * qml + 2.0 * nr * right.mean(d) * qmr - beta;
        inst.diag(d) = -(nl * left.mean(d) * left.mean(d) +
                         nr * right.mean(d) * right.mean(d)) *
                       q(d, d);
        const auto& ext = plan.extended[d];
        inst.cross[d].resize(ext.size());
        for (std::size_t k = 0; k < ext.size(); ++k) {
            const int i = ext[k];
            inst.cross[d][k] = -(nl * left.mean(d) * left.mean(i) +
                                 nr * right.mean(d) * right.mean(i)) *
                               q(d, i);
        }
    }
    return inst;
}

namespace {

std::vector<int> assignment_to_subset(const std::vector<std::uint8_t>& u) {
    std::vector<int> subset;
    for (int d = 0; d < static_cast<int>(u.size()); ++d) {
        if (u[d]) subset.push_back(d);
    }
    return subset;
}

std::vector<int> full_subset(int p) {
    std::vector<int> subset(p);
    std::iota(subset.begin(), subset.end(), 0);
    return subset;
}

}  // namespace

SavingResult approx_saving(const Matrix& q, const NeighborhoodPlan& plan,
                           const SegmentStats& stats,
                           const PenaltyScheme& scheme) {
    const BqpInstance inst =
        build_anomaly_bqp(q, plan, stats, scheme.beta, scheme.alpha_sparse);
    const double dense =
        full_set_saving(q, plan, stats) - scheme.alpha_dense;
    const BqpSolution sparse = solve_banded_bqp(inst, scheme.k_star);

    SavingResult result;
    if (!sparse.early_stopped && sparse.value >= dense) {
        result.value = sparse.value;
        result.variables = assignment_to_subset(sparse.assignment);
        result.regime = Regime::sparse;
    } else {
        result.value = dense;
        result.variables = full_subset(plan.p);
        result.regime = Regime::dense;
    }
    return result;
}

double approximation_error_bound(const Matrix& q, const SegmentStats& stats,
                                 const std::vector<int>& j_hat) {
    const int p = static_cast<int>(q.rows());
    if (stats.mean.size() != p) {
        throw std::invalid_argument("approximation_error_bound: dimension mismatch");
    }
    check_subset(j_hat, p);
    if (j_hat.empty()) {
        throw std::invalid_argument("approximation_error_bound: subset must be non-empty");
    }
    const int k = static_cast<int>(j_hat.size());
    if (k == p) return 0.0;

    std::vector<std::uint8_t> in(p, 0);
    for (int j : j_hat) in[j] = 1;
    std::vector<int> comp;
    for (int i = 0; i < p; ++i) {
        if (!in[i]) comp.push_back(i);
    }
    const int m = static_cast<int>(comp.size());

    Matrix q_jj(k, k), q_jc(k, m);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) q_jj(a, b) = q(j_hat[a], j_hat[b]);
        for (int b = 0; b < m; ++b) q_jc(a, b) = q(j_hat[a], comp[b]);
    }
    Eigen::LLT<Matrix> llt(q_jj);
    if (llt.info() != Eigen::Success) {
        throw NumericError("approximation_error_bound: Q_JJ is not positive definite");
    }

    double comp_sq = 0.0;
    for (int i : comp) comp_sq += stats.mean(i) * stats.mean(i);
    if (comp_sq == 0.0) return 0.0;

    // Power iteration on z -> Q_cJ Q_JJ^{-1} Q_Jc z, the nonzero block of
    // Q W.  The block is symmetric positive semi-definite, so the Rayleigh
    // quotients of the iterates are non-decreasing; seeding with the
    // complement mean keeps every iterate's quotient at or above the exact
    // quotient the bound has to dominate.
    Matrix g_half = llt.solve(q_jc);  // Q_JJ^{-1} Q_Jc
    Vector z(m);
    for (int i = 0; i < m; ++i) z(i) = stats.mean(comp[i]);
    z.normalize();
    double lambda = 0.0;
    const int max_iter = 10 * p;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = q_jc.transpose() * (g_half * z);
        const double next = z.dot(w);
        const bool converged =
            it > 0 &&
            std::abs(next - lambda) <= 1e-8 * std::max(1.0, std::abs(next));
        lambda = std::max(lambda, next);
        const double norm = w.norm();
        if (converged || norm == 0.0) break;
        z = w / norm;
    }

    return stats.length * lambda * comp_sq;
}

}  // namespace capacc
