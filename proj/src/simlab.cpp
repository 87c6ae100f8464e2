#include "capacc/simlab.hpp"

#include "capacc/util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace capacc {

PrecisionModel car_precision(const BoolMatrix& w, double rho) {
    const int p = static_cast<int>(w.rows());
    if (p < 1 || w.cols() != p) {
        throw std::invalid_argument("car_precision: W must be square");
    }
    if (!(rho > 0.0) || !(rho < 1.0)) {
        throw std::invalid_argument("car_precision: need 0 < rho < 1");
    }
    Matrix q0 = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        double degree = 0.0;
        for (int j = 0; j < p; ++j) {
            if (i == j) continue;
            if (w(i, j) != w(j, i)) {
                throw std::invalid_argument("car_precision: W must be symmetric");
            }
            if (w(i, j)) {
                degree += 1.0;
                q0(i, j) = -rho;
            }
        }
        q0(i, i) = degree;
    }
    Eigen::LLT<Matrix> llt(q0);
    if (llt.info() != Eigen::Success) {
        throw NumericError("car_precision: graph precision is not positive definite");
    }
    const Matrix sigma0 = llt.solve(Matrix::Identity(p, p));
    const Vector d = sigma0.diagonal().cwiseSqrt();
    Matrix q = d.asDiagonal() * q0 * d.asDiagonal();
    q = ((q + q.transpose()) / 2.0).eval();
    return PrecisionModel(Vector::Zero(p), q);
}

PrecisionModel constant_correlation_precision(int p, double rho) {
    if (p < 1) {
        throw std::invalid_argument("constant_correlation_precision: need p >= 1");
    }
    if (!(rho < 1.0) || (p > 1 && !(rho > -1.0 / (p - 1)))) {
        throw std::invalid_argument(
            "constant_correlation_precision: need -1/(p-1) < rho < 1");
    }
    Matrix q;
    if (p == 1) {
        q = Matrix::Identity(1, 1);
    } else {
        const double a = 1.0 / (1.0 - rho);
        const double b = rho / ((1.0 - rho) * (1.0 + (p - 1) * rho));
        q = -b * Matrix::Ones(p, p);
        q.diagonal().setConstant(a - b);
    }
    return PrecisionModel(Vector::Zero(p), q);
}

namespace {

Vector draw_change(Rng& rng, const Matrix& sigma, const std::vector<int>& vars0,
                   ChangeClass change_class, double rho_change, double theta) {
    const int k = static_cast<int>(vars0.size());
    Vector mu(k);
    for (int attempt = 0; attempt < 100; ++attempt) {
        if (change_class == ChangeClass::covariance) {
            Matrix block(k, k);
            for (int a = 0; a < k; ++a) {
                for (int b = 0; b < k; ++b) block(a, b) = sigma(vars0[a], vars0[b]);
            }
            Eigen::LLT<Matrix> llt(block);
            if (llt.info() != Eigen::Success) {
                throw NumericError("sample_scenario: Sigma_JJ is not positive definite");
            }
            Vector z(k);
            for (int a = 0; a < k; ++a) z(a) = rng.normal();
            mu = llt.matrixL() * z;
        } else {
            if (rho_change >= 1.0) {
                mu.setConstant(rng.normal());
            } else {
                if (!(rho_change >= 0.0)) {
                    throw std::invalid_argument(
                        "sample_scenario: need 0 <= rho_change <= 1");
                }
                // Sigma_c = rho 1 1' + (1 - rho) I has square root
                // sqrt(1-rho) I + ((sqrt(1-rho+k rho) - sqrt(1-rho))/k) 1 1'.
                Vector z(k);
                for (int a = 0; a < k; ++a) z(a) = rng.normal();
                const double lo = std::sqrt(1.0 - rho_change);
                const double hi = std::sqrt(1.0 - rho_change + k * rho_change);
                mu = lo * z + ((hi - lo) / k) * Vector::Ones(k) * z.sum();
            }
        }
        const double norm = mu.norm();
        if (norm > 1e-12) {
            mu *= theta / norm;
            return mu;
        }
    }
    throw NumericError("sample_scenario: degenerate mean draw");
}

}  // namespace

SimData sample_scenario(const SimScenario& scenario, const PrecisionModel& model,
                        std::uint64_t seed) {
    const int n = scenario.n;
    const int p = model.p();
    if (n < 2) {
        throw std::invalid_argument("sample_scenario: need n >= 2");
    }

    std::vector<PlannedAnomaly> anomalies = scenario.anomalies;
    std::sort(anomalies.begin(), anomalies.end(),
              [](const PlannedAnomaly& a, const PlannedAnomaly& b) {
                  return a.start < b.start;
              });
    for (std::size_t k = 0; k < anomalies.size(); ++k) {
        const auto& a = anomalies[k];
        if (a.start < 0 || a.end <= a.start || a.end > n) {
            throw std::invalid_argument("sample_scenario: anomaly window out of range");
        }
        if (k > 0 && anomalies[k - 1].end > a.start) {
            throw std::invalid_argument("sample_scenario: anomaly windows overlap");
        }
        if (a.variables.empty() || !(a.theta > 0.0)) {
            throw std::invalid_argument("sample_scenario: anomaly needs variables and theta > 0");
        }
        for (int v : a.variables) {
            if (v < 1 || v > p) {
                throw std::invalid_argument("sample_scenario: variable index out of range");
            }
        }
    }

    Rng rng(Rng::mix(seed, 0));

    Eigen::LLT<Matrix> llt(model.q());
    if (llt.info() != Eigen::Success) {
        throw NumericError("sample_scenario: precision is not positive definite");
    }
    Matrix x(n, p);
    Vector z(p);
    for (int t = 0; t < n; ++t) {
        for (int j = 0; j < p; ++j) z(j) = rng.normal();
        x.row(t) = llt.matrixU().solve(z).transpose();  // covariance Q^{-1}
    }
    x.rowwise() += model.mu0().transpose();

    AnomalySet truth_set;
    const Matrix sigma = llt.solve(Matrix::Identity(p, p));

    for (const auto& a : anomalies) {
        std::vector<int> vars0(a.variables.size());
        for (std::size_t k = 0; k < a.variables.size(); ++k) {
            vars0[k] = a.variables[k] - 1;
        }
        std::sort(vars0.begin(), vars0.end());
        const Vector mu = draw_change(rng, sigma, vars0, a.change_class,
                                      a.rho_change, a.theta);
        for (int t = a.start; t < a.end; ++t) {
            for (std::size_t k = 0; k < vars0.size(); ++k) {
                x(t, vars0[k]) += mu(k);
            }
        }
        CollectiveAnomaly truth;
        truth.start = a.start;
        truth.end = a.end;
        truth.variables.assign(vars0.size(), 0);
        for (std::size_t k = 0; k < vars0.size(); ++k) {
            truth.variables[k] = vars0[k] + 1;
        }
        truth.mean_estimate = mu;
        truth_set.collective.push_back(truth);
    }

    const double default_sd = std::sqrt(4.0 * std::log(std::max(2, p)));
    for (const auto& pt : scenario.points) {
        if (pt.time < 1 || pt.time > n) {
            throw std::invalid_argument("sample_scenario: point time out of range");
        }
        if (pt.n_variables < 1 || pt.n_variables > p) {
            throw std::invalid_argument("sample_scenario: point variable count out of range");
        }
        const double sd = pt.size_sd > 0.0 ? pt.size_sd : default_sd;
        const std::vector<int> vars0 = rng.sample_indices(pt.n_variables, p);
        PointAnomaly truth;
        truth.time = pt.time;
        for (int v : vars0) {
            x(pt.time - 1, v) += sd * rng.normal();
            truth.variables.push_back(v + 1);
        }
        truth_set.points.push_back(truth);
    }

    std::sort(truth_set.points.begin(), truth_set.points.end(),
              [](const PointAnomaly& a, const PointAnomaly& b) {
                  return a.time < b.time;
              });
    return SimData{DataMatrix(x), std::move(truth_set)};
}

std::vector<int> anomaly_labels(const AnomalySet& set, int n) {
    std::vector<int> labels(n, 0);
    for (const auto& c : set.collective) {
        for (int t = c.start; t < c.end && t < n; ++t) labels[t] = 1;
    }
    for (const auto& pt : set.points) {
        if (pt.time >= 1 && pt.time <= n) labels[pt.time - 1] = 1;
    }
    return labels;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("adjusted_rand_index: label vectors must match");
    }
    std::vector<int> ua(a), ub(b);
    std::sort(ua.begin(), ua.end());
    ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
    std::sort(ub.begin(), ub.end());
    ub.erase(std::unique(ub.begin(), ub.end()), ub.end());

    const int ka = static_cast<int>(ua.size());
    const int kb = static_cast<int>(ub.size());
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
    auto index_of = [](const std::vector<int>& u, int v) {
        return static_cast<int>(std::lower_bound(u.begin(), u.end(), v) - u.begin());
    };
    for (std::size_t t = 0; t < a.size(); ++t) {
        table(index_of(ua, a[t]), index_of(ub, b[t])) += 1.0;
    }
    auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
    double pairs = 0.0;
    for (int i = 0; i < ka; ++i) {
        for (int j = 0; j < kb; ++j) pairs += choose2(table(i, j));
    }
    double row_pairs = 0.0, col_pairs = 0.0;
    for (int i = 0; i < ka; ++i) row_pairs += choose2(table.row(i).sum());
    for (int j = 0; j < kb; ++j) col_pairs += choose2(table.col(j).sum());
    const double total = choose2(static_cast<double>(a.size()));
    const double expected = row_pairs * col_pairs / total;
    const double max_index = (row_pairs + col_pairs) / 2.0;
    const double denom = max_index - expected;
    if (denom == 0.0) {
        // both partitions degenerate; identical partitions score 1
        for (std::size_t t = 0; t < a.size(); ++t) {
            const bool same_a = a[t] == a[0];
            const bool same_b = b[t] == b[0];
            if (same_a != same_b) return 0.0;
        }
        return 1.0;
    }
    return (pairs - expected) / denom;
}

SubsetMetrics subset_metrics(const std::vector<int>& j_true,
                             const std::vector<int>& j_pred) {
    std::set<int> st(j_true.begin(), j_true.end());
    std::set<int> sp(j_pred.begin(), j_pred.end());
    double hits = 0.0;
    for (int v : sp) {
        if (st.count(v)) hits += 1.0;
    }
    SubsetMetrics m;
    if (sp.empty()) {
        m.precision = st.empty() ? 1.0 : 0.0;
    } else {
        m.precision = hits / sp.size();
    }
    if (st.empty()) {
        m.recall = sp.empty() ? 1.0 : 0.0;
    } else {
        m.recall = hits / st.size();
    }
    return m;
}

TuneResult tune_scale(const PrecisionModel& null_model, int n, double target,
                      double delta, int reps,
                      const std::function<bool(const DataMatrix&, double)>& detects,
                      std::uint64_t seed, int threads) {
    if (reps < 1 || !(target > 0.0) || !(target < 1.0) || !(delta > 0.0)) {
        throw std::invalid_argument("tune_scale: bad target or replicate count");
    }
    SimScenario null_scenario;
    null_scenario.n = n;
    std::vector<DataMatrix> pool;
    pool.reserve(reps);
    for (int k = 0; k < reps; ++k) {
        pool.push_back(sample_scenario(null_scenario, null_model,
                                       Rng::mix(seed, 1000 + k))
                           .data);
    }

    auto alpha_at = [&](double scale) {
        std::vector<std::uint8_t> flagged(reps, 0);
        parallel_for(threads, reps, [&](int k) {
            flagged[k] = detects(pool[k], scale) ? 1 : 0;
        });
        long long count = 0;
        for (auto f : flagged) count += f;
        return static_cast<double>(count) / reps;
    };

    double lo = 0.1, hi = 100.0;
    TuneResult result;
    double alpha_lo = alpha_at(lo);
    ++result.iterations;
    if (alpha_lo < target - delta) {
        throw NumericError("tune_scale: even the smallest scale is too conservative");
    }
    if (alpha_lo <= target + delta) {
        result.scale = lo;
        result.alpha_hat = alpha_lo;
        return result;
    }
    double alpha_hi = alpha_at(hi);
    ++result.iterations;
    if (alpha_hi > target + delta) {
        throw NumericError("tune_scale: even the largest scale is too permissive");
    }
    if (alpha_hi >= target - delta) {
        result.scale = hi;
        result.alpha_hat = alpha_hi;
        return result;
    }

    for (int it = 0; it < 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double alpha_mid = alpha_at(mid);
        ++result.iterations;
        if (alpha_mid >= target - delta && alpha_mid <= target + delta) {
            result.scale = mid;
            result.alpha_hat = alpha_mid;
            return result;
        }
        if (alpha_mid > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw ConvergenceError("tune_scale: bisection did not land in the band", delta);
}

CountTuneResult count_based_tune(const std::function<int(double)>& count_at,
                                 int target_count) {
    if (target_count < 0) {
        throw std::invalid_argument("count_based_tune: target must be >= 0");
    }
    // 50 geometric steps from 0.1 to 100
    std::vector<double> grid;
    const int steps = 50;
    for (int k = 0; k <= steps; ++k) {
        grid.push_back(0.1 * std::pow(1000.0, static_cast<double>(k) / steps));
    }
    CountTuneResult best;
    bool have = false;
    int prev = 0;
    int violations = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const int c = count_at(grid[k]);
        if (k > 0 && c > prev) ++violations;
        prev = c;
        const bool better =
            !have || std::abs(c - target_count) < std::abs(best.count - target_count) ||
            (std::abs(c - target_count) == std::abs(best.count - target_count) &&
             !best.exact);
        if (c == target_count && !best.exact) {
            best.scale = grid[k];
            best.count = c;
            best.exact = true;
            have = true;
        } else if (!best.exact && better) {
            best.scale = grid[k];
            best.count = c;
            have = true;
        }
    }
    best.grid_violations = violations;
    return best;
}

EvaluationReport evaluate_detection(const AnomalySet& truth,
                                    const AnomalySet& detected, int n) {
    EvaluationReport report;
    report.ari = adjusted_rand_index(anomaly_labels(truth, n),
                                     anomaly_labels(detected, n));
    std::vector<int> jt, jp;
    for (const auto& c : truth.collective) {
        jt.insert(jt.end(), c.variables.begin(), c.variables.end());
    }
    for (const auto& c : detected.collective) {
        jp.insert(jp.end(), c.variables.begin(), c.variables.end());
    }
    const SubsetMetrics m = subset_metrics(jt, jp);
    report.subset_precision = m.precision;
    report.subset_recall = m.recall;
    return report;
}

}  // namespace capacc
