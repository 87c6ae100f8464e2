#pragma once

#include "capacc/core.hpp"

namespace capacc {

double median(std::vector<double> values);

/*
 * Median absolute deviation scaled by the normal consistency constant
 * (default 1.4826).
 */
double mad(const std::vector<double>& values, double consistency = 1.4826);

/* Column medians. */
Vector robust_baseline(const DataMatrix& data);

/*
 * Correlation of the normal scores of the ranks (average ranks on ties),
 * clamped to [-1, 1].  Errors on constant input.
 */
double gaussian_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y);

struct RobustCovOptions {
    double mad_consistency = 1.4826;
    bool repair = false;  // clip eigenvalues at 1e-8 * trace / p when not PD
};

struct RobustCovariance {
    Matrix s;
    bool repaired = false;
};

/*
 * Rank-based covariance surrogate: s_ij = mad_i * mad_j * r_ij with r the
 * Gaussian rank correlation, s_ii = mad_i^2.  Errors on a constant column,
 * naming it.  Not guaranteed positive definite; the opt-in repair clips
 * eigenvalues and flags itself.
 */
RobustCovariance robust_covariance(const DataMatrix& data,
                                   const RobustCovOptions& options = {});

struct StructuredFitOptions {
    double tol = 1e-8;    // largest allowed moment mismatch
    int max_sweeps = 500;
};

struct StructuredFit {
    Matrix q;
    int sweeps = 0;
    double gap = 0.0;                   // final max moment mismatch
    std::vector<double> objective_path;  // log det Q - tr(S Q) per sweep
};

/*
 * Gaussian maximum likelihood precision under the zero constraints implied
 * by the adjacency w: maximise log det Q - tr(S Q) with Q_ij = 0 whenever
 * w_ij is false (i != j).  Solved by cyclic moment matching over diagonal
 * cells and allowed edges; each block update is an exact coordinate-wise
 * maximiser, so the objective is non-decreasing.  At the optimum
 * (Q^{-1})_ij = S_ij on the diagonal and all allowed edges.  Throws
 * ConvergenceError with the final gap when max_sweeps is hit.
 */
StructuredFit structured_precision(const Matrix& s, const BoolMatrix& w,
                                   const StructuredFitOptions& options = {});

/* Rotate rows by the inverse symmetric square root of s. */
DataMatrix whiten(const DataMatrix& data, const Matrix& s);

}  // namespace capacc
