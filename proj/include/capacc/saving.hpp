#pragma once

#include "capacc/bqp.hpp"

namespace capacc {

/* Mean of x_t - mu0 over rows s+1..e together with the segment length. */
struct SegmentStats {
    Vector mean;
    int length = 0;
};

/*
 * Compensated prefix sums of x_t - mu0, one pass over the data; afterwards
 * any segment mean costs O(p).
 */
class SegmentSums {
public:
    SegmentSums(const Matrix& values, const Vector& mu0);

    int n() const { return static_cast<int>(cum_.rows()) - 1; }
    int p() const { return static_cast<int>(cum_.cols()); }

    /* Stats of segment (s, e], 0 <= s < e <= n. */
    SegmentStats stats(int s, int e) const;

private:
    Matrix cum_;
};

/*
 * Maximum likelihood mean shift restricted to the variables in J (0-based,
 * sorted): mu_J = mean_J + Q_JJ^{-1} Q_{J,-J} mean_{-J}.  Returns the |J|
 * entries aligned with J.
 */
Vector subset_mle(const Matrix& q, const Vector& mean, const std::vector<int>& subset);

/*
 * Unpenalised saving of the likelihood-optimal mean shift on J over the
 * segment: length * (2 mean - mu)' Q mu with mu the padded subset MLE.
 */
double exact_saving(const Matrix& q, const SegmentStats& stats,
                    const std::vector<int>& subset);

enum class Regime { sparse, dense };

/* Penalised saving value with the maximising subset (0-based, sorted). */
struct SavingResult {
    double value = 0.0;
    std::vector<int> variables;
    Regime regime = Regime::sparse;
};

/*
 * Sparse-regime surrogate program for one segment: replacing the subset MLE
 * by the truncated segment mean makes the penalised saving a banded
 * quadratic in the indicator u, max_u u'Au + u'b + c with
 *   A = -length * (mean mean') o Q,
 *   b = 2 length * mean o (Q mean) - beta,
 *   c = -alpha.
 * The plan must outlive the instance.
 */
BqpInstance build_anomaly_bqp(const Matrix& q, const NeighborhoodPlan& plan,
                              const SegmentStats& stats, double beta, double alpha);

/* Same surrogate for a changepoint at tau: the two segment terms add. */
BqpInstance build_cpt_bqp(const Matrix& q, const NeighborhoodPlan& plan,
                          const SegmentStats& left, const SegmentStats& right,
                          double beta, double alpha);

/*
 * Approximate penalised saving of a segment: the larger of the sparse
 * surrogate optimum and the exact dense saving minus alpha_dense.  Sparse
 * wins ties; an early-stopped sparse search forces the dense branch.
 */
SavingResult approx_saving(const Matrix& q, const NeighborhoodPlan& plan,
                           const SegmentStats& stats, const PenaltyScheme& scheme);

/*
 * Upper bound on exact minus approximate saving for the segment when the
 * exact maximiser is j_hat: length * lambda_max(Q W) * |mean_{-J}|^2, where
 * W has block Q_JJ^{-1} Q_{J,-J} on (J, -J) and zeros elsewhere.  The
 * dominant eigenvalue is found by power iteration (tolerance 1e-8, at most
 * 10 p iterations); the nonzero spectrum of Q W is that of a positive
 * semi-definite Schur block, so it is real and non-negative.  j_hat equal
 * to the full set yields 0.
 */
double approximation_error_bound(const Matrix& q, const SegmentStats& stats,
                                 const std::vector<int>& j_hat);

}  // namespace capacc
