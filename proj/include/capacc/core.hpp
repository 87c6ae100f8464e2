#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace capacc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/* Malformed input files or payloads. */
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* Numerical failure: indefinite matrix, singular system, non-finite value. */
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* An iterative fit stopped before reaching its tolerance; carries the final gap. */
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double gap)
        : NumericError(what), gap_(gap) {}
    double gap() const { return gap_; }

private:
    double gap_;
};

/*
 * Time series panel, rows are time points, columns are variables.
 * Immutable after construction. All entries finite, n >= 2, p >= 1.
 */
class DataMatrix {
public:
    explicit DataMatrix(Matrix values, std::vector<std::string> column_names = {});

    int n() const { return static_cast<int>(values_.rows()); }
    int p() const { return static_cast<int>(values_.cols()); }
    const Matrix& values() const { return values_; }
    const std::vector<std::string>& column_names() const { return column_names_; }

private:
    Matrix values_;
    std::vector<std::string> column_names_;
};

/*
 * Baseline mean and precision matrix of the noise process.  Q must be
 * symmetric (tolerance 1e-10, symmetrised on construction) and positive
 * definite (checked by a Cholesky attempt).  The adjacency pattern uses an
 * absolute cut-off of 1e-12 on off-diagonal entries; bandwidth is the
 * largest |i - j| over that pattern.
 */
class PrecisionModel {
public:
    PrecisionModel(Vector mu0, Matrix q);
    static PrecisionModel identity(int p);

    int p() const { return static_cast<int>(q_.rows()); }
    const Vector& mu0() const { return mu0_; }
    const Matrix& q() const { return q_; }
    const BoolMatrix& adjacency() const { return adjacency_; }
    int bandwidth() const { return bandwidth_; }

    static constexpr double symmetry_tol = 1e-10;
    static constexpr double pattern_tol = 1e-12;

private:
    Vector mu0_;
    Matrix q_;
    BoolMatrix adjacency_;
    int bandwidth_ = 0;
};

/*
 * Penalty curve P(|J|) = min(alpha_sparse + beta * |J|, alpha_dense) for
 * collective anomalies plus the linear point-anomaly slope beta_point.
 * k_star is where the two regimes cross; +inf when beta == 0.
 */
struct PenaltyScheme {
    int n = 0;
    int p = 0;
    double psi = 0.0;
    double alpha_sparse = 0.0;
    double alpha_dense = 0.0;
    double beta = 0.0;
    double beta_point = 0.0;
    double k_star = 0.0;
    double scale_collective = 1.0;
    double scale_point = 1.0;
};

/* Default penalties at significance exponent psi = log n, scaled by b and b'. */
PenaltyScheme default_penalties(int n, int p, double scale_collective = 1.0,
                                double scale_point = 1.0);

/* P(j) for a subset of size j, 1 <= j <= p. */
double penalty_of(const PenaltyScheme& scheme, int j);

/*
 * Candidate segment (s, e] in 1-based time, i.e. rows s+1..e.  Lengths are
 * constrained to min_len <= e - s <= max_len.
 */
struct SegmentWindow {
    int start = 0;    // s, 0 <= s < e
    int end = 0;      // e, e <= n
    int min_len = 2;
    int max_len = 0;  // 0 means unbounded

    void validate(int n) const;
};

/* Collective anomaly: rows start+1..end, variable indices 1-based. */
struct CollectiveAnomaly {
    int start = 0;
    int end = 0;
    std::vector<int> variables;
    Vector mean_estimate;  // aligned with variables
    double saving = 0.0;
};

/* Point anomaly at row time (1-based), variable indices 1-based. */
struct PointAnomaly {
    int time = 0;
    std::vector<int> variables;
    double saving = 0.0;
};

/*
 * Detector output.  Collective segments are disjoint and sorted, points
 * sorted by time; total_cost is the optimal penalised saving of the whole
 * series.
 */
struct AnomalySet {
    std::vector<CollectiveAnomaly> collective;
    std::vector<PointAnomaly> points;
    double total_cost = 0.0;
};

}  // namespace capacc
