#include "capacc/estimate.hpp"

#include "capacc/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capacc {

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median: empty input");
    }
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double m = values[mid];
    if (n % 2 == 0) {
        std::nth_element(values.begin(), values.begin() + mid - 1,
                         values.begin() + mid);
        m = (m + values[mid - 1]) / 2.0;
    }
    return m;
}

double mad(const std::vector<double>& values, double consistency) {
    const double centre = median(values);
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        dev[i] = std::abs(values[i] - centre);
    }
    return consistency * median(std::move(dev));
}

Vector robust_baseline(const DataMatrix& data) {
    Vector mu(data.p());
    std::vector<double> col(data.n());
    for (int j = 0; j < data.p(); ++j) {
        for (int t = 0; t < data.n(); ++t) col[t] = data.values()(t, j);
        mu(j) = median(col);
    }
    return mu;
}

namespace {

/* Average ranks, 1-based; exactly equal values share the mean rank. */
std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + j) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

std::vector<double> normal_scores(const std::vector<double>& x) {
    const double n1 = static_cast<double>(x.size()) + 1.0;
    std::vector<double> z = average_ranks(x);
    for (double& v : z) v = norm_quantile(v / n1);
    return z;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw std::invalid_argument("gaussian_rank_correlation: constant input");
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double gaussian_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument(
            "gaussian_rank_correlation: need two equal-length samples");
    }
    const double r = pearson(normal_scores(x), normal_scores(y));
    return std::clamp(r, -1.0, 1.0);
}

RobustCovariance robust_covariance(const DataMatrix& data,
                                   const RobustCovOptions& options) {
    const int n = data.n();
    const int p = data.p();
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (int j = 0; j < p; ++j) {
        for (int t = 0; t < n; ++t) cols[j][t] = data.values()(t, j);
    }
    Vector scale(p);
    for (int j = 0; j < p; ++j) {
        scale(j) = mad(cols[j], options.mad_consistency);
        if (scale(j) <= 0.0) {
            throw NumericError("robust_covariance: column " +
                               data.column_names()[j] +
                               " has zero robust scale");
        }
    }
    RobustCovariance out;
    out.s.resize(p, p);
    for (int i = 0; i < p; ++i) {
        out.s(i, i) = scale(i) * scale(i);
        for (int j = i + 1; j < p; ++j) {
            const double r = gaussian_rank_correlation(cols[i], cols[j]);
            out.s(i, j) = out.s(j, i) = scale(i) * scale(j) * r;
        }
    }
    if (options.repair) {
        Eigen::LLT<Matrix> llt(out.s);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(out.s);
            const double floor = 1e-8 * out.s.trace() / p;
            Vector vals = eig.eigenvalues().cwiseMax(floor);
            out.s = eig.eigenvectors() * vals.asDiagonal() *
                    eig.eigenvectors().transpose();
            out.s = ((out.s + out.s.transpose()) / 2.0).eval();
            out.repaired = true;
        }
    }
    return out;
}

namespace {

double log_det(const Matrix& q) {
    Eigen::LLT<Matrix> llt(q);
    if (llt.info() != Eigen::Success) {
        throw NumericError("structured_precision: iterate lost positive definiteness");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

StructuredFit structured_precision(const Matrix& s, const BoolMatrix& w,
                                   const StructuredFitOptions& options) {
    const int p = static_cast<int>(s.rows());
    if (s.cols() != p || w.rows() != p || w.cols() != p) {
        throw std::invalid_argument("structured_precision: dimension mismatch");
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("structured_precision: S must be symmetric");
    }
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            if (i != j && w(i, j) != w(j, i)) {
                throw std::invalid_argument("structured_precision: W must be symmetric");
            }
        }
    }
    {
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success) {
            throw NumericError("structured_precision: S is not positive definite");
        }
    }

    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            if (w(i, j)) edges.emplace_back(i, j);
        }
    }

    StructuredFit fit;
    fit.q = Matrix::Zero(p, p);
    Matrix sigma = Matrix::Zero(p, p);  // running Q^{-1}
    for (int i = 0; i < p; ++i) {
        fit.q(i, i) = 1.0 / s(i, i);
        sigma(i, i) = s(i, i);
    }

    auto gap_now = [&]() {
        double g = 0.0;
        for (int i = 0; i < p; ++i) g = std::max(g, std::abs(sigma(i, i) - s(i, i)));
        for (const auto& [i, j] : edges) {
            g = std::max(g, std::abs(sigma(i, j) - s(i, j)));
        }
        return g;
    };

    // One block update: moment-match S on cell block C, i.e.
    // Q_CC += S_CC^{-1} - Sigma_CC^{-1}, then refresh Sigma by the rank-|C|
    // Woodbury identity Sigma' = Sigma - Sigma_.C M (I + Sigma_CC M)^{-1} Sigma_C.
    auto update_block = [&](const std::vector<int>& c) {
        const int k = static_cast<int>(c.size());
        Matrix s_cc(k, k), sig_cc(k, k);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
                s_cc(a, b) = s(c[a], c[b]);
                sig_cc(a, b) = sigma(c[a], c[b]);
            }
        }
        const Matrix m = s_cc.inverse() - sig_cc.inverse();
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) fit.q(c[a], c[b]) += m(a, b);
        }
        Matrix sig_cols(p, k);
        for (int a = 0; a < k; ++a) sig_cols.col(a) = sigma.col(c[a]);
        const Matrix core = m * (Matrix::Identity(k, k) + sig_cc * m).inverse();
        sigma -= sig_cols * core * sig_cols.transpose();
        sigma = ((sigma + sigma.transpose()) / 2.0).eval();
    };

    double gap = gap_now();
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        if (gap <= options.tol) break;
        for (int i = 0; i < p; ++i) update_block({i});
        for (const auto& [i, j] : edges) update_block({i, j});
        fit.sweeps = sweep + 1;
        fit.objective_path.push_back(log_det(fit.q) -
                                     (s.cwiseProduct(fit.q)).sum());
        gap = gap_now();
    }
    fit.gap = gap;
    if (gap > options.tol) {
        throw ConvergenceError("structured_precision: no convergence after " +
                                   std::to_string(options.max_sweeps) +
                                   " sweeps, gap " + std::to_string(gap),
                               gap);
    }
    return fit;
}

DataMatrix whiten(const DataMatrix& data, const Matrix& s) {
    const int p = data.p();
    if (s.rows() != p || s.cols() != p) {
        throw std::invalid_argument("whiten: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericError("whiten: matrix is not positive definite");
    }
    const Matrix root_inv = eig.eigenvectors() *
                            eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                            eig.eigenvectors().transpose();
    return DataMatrix(data.values() * root_inv, data.column_names());
}

}  // namespace capacc
