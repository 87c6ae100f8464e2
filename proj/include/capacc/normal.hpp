#pragma once

namespace capacc {

/*
 * Standard normal quantile by the rational approximation of Wichura's
 * PPND16; absolute error is far below 1e-9 across (1e-10, 1 - 1e-10).
 * Requires 0 < prob < 1.
 */
double norm_quantile(double prob);

/* Standard normal distribution function via erfc. */
double norm_cdf(double x);

}  // namespace capacc
