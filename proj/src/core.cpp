#include "capacc/core.hpp"

#include <cmath>
#include <limits>

namespace capacc {

DataMatrix::DataMatrix(Matrix values, std::vector<std::string> column_names)
    : values_(std::move(values)), column_names_(std::move(column_names)) {
    if (values_.rows() < 2) {
        throw std::invalid_argument("DataMatrix: need at least 2 rows");
    }
    if (values_.cols() < 1) {
        throw std::invalid_argument("DataMatrix: need at least 1 column");
    }
    if (!values_.allFinite()) {
        throw std::invalid_argument("DataMatrix: entries must be finite");
    }
    if (column_names_.empty()) {
        column_names_.reserve(values_.cols());
        for (int j = 0; j < values_.cols(); ++j) {
            column_names_.push_back("x" + std::to_string(j + 1));
        }
    } else if (static_cast<int>(column_names_.size()) != values_.cols()) {
        throw std::invalid_argument("DataMatrix: column name count mismatch");
    }
}

PrecisionModel::PrecisionModel(Vector mu0, Matrix q)
    : mu0_(std::move(mu0)), q_(std::move(q)) {
    const int p = static_cast<int>(q_.rows());
    if (p < 1 || q_.cols() != p) {
        throw std::invalid_argument("PrecisionModel: Q must be square and non-empty");
    }
    if (mu0_.size() != p) {
        throw std::invalid_argument("PrecisionModel: mu0 length must match Q");
    }
    if (!q_.allFinite() || !mu0_.allFinite()) {
        throw NumericError("PrecisionModel: non-finite entries");
    }
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > symmetry_tol) {
        throw std::invalid_argument("PrecisionModel: Q is not symmetric");
    }
    q_ = ((q_ + q_.transpose()) / 2.0).eval();

    Eigen::LLT<Matrix> llt(q_);
    if (llt.info() != Eigen::Success) {
        throw NumericError("PrecisionModel: Q is not positive definite");
    }

    adjacency_ = BoolMatrix::Constant(p, p, false);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            if (i != j && std::abs(q_(i, j)) > pattern_tol) {
                adjacency_(i, j) = true;
                bandwidth_ = std::max(bandwidth_, std::abs(i - j));
            }
        }
    }
}

PrecisionModel PrecisionModel::identity(int p) {
    return PrecisionModel(Vector::Zero(p), Matrix::Identity(p, p));
}

PenaltyScheme default_penalties(int n, int p, double scale_collective,
                                double scale_point) {
    if (n < 2 || p < 1) {
        throw std::invalid_argument("default_penalties: need n >= 2 and p >= 1");
    }
    if (scale_collective <= 0.0 || scale_point <= 0.0) {
        throw std::invalid_argument("default_penalties: scales must be positive");
    }
    PenaltyScheme s;
    s.n = n;
    s.p = p;
    s.psi = std::log(static_cast<double>(n));
    s.scale_collective = scale_collective;
    s.scale_point = scale_point;
    const double log_p = std::log(static_cast<double>(p));
    s.alpha_sparse = scale_collective * 2.0 * s.psi;
    s.beta = scale_collective * 2.0 * log_p;
    s.alpha_dense =
        scale_collective * (p + 2.0 * std::sqrt(p * s.psi) + 2.0 * s.psi);
    s.beta_point = scale_point * (2.0 * log_p + 2.0 * s.psi);
    s.k_star = s.beta > 0.0
                   ? (s.alpha_dense - s.alpha_sparse) / s.beta
                   : std::numeric_limits<double>::infinity();
    return s;
}

double penalty_of(const PenaltyScheme& scheme, int j) {
    if (j < 1 || j > scheme.p) {
        throw std::invalid_argument("penalty_of: subset size out of range");
    }
    return std::min(scheme.alpha_sparse + scheme.beta * j, scheme.alpha_dense);
}

void SegmentWindow::validate(int n) const {
    if (start < 0 || end <= start || end > n) {
        throw std::invalid_argument("SegmentWindow: need 0 <= start < end <= n");
    }
    const int len = end - start;
    if (len < min_len) {
        throw std::invalid_argument("SegmentWindow: segment shorter than min_len");
    }
    if (max_len > 0 && len > max_len) {
        throw std::invalid_argument("SegmentWindow: segment longer than max_len");
    }
}

}  // namespace capacc
