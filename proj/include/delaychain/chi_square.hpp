#pragma once

namespace delaychain {

// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

// P(X <= x) for X ~ chi-square(df). Throws DomainError for df < 1 or x < 0.
double chi_square_cdf(double x, int df);

// Inverse of chi_square_cdf; p must lie in (0, 1). The result satisfies
// |chi_square_cdf(x, df) - p| <= 1e-9.
double chi_square_quantile(double p, int df);

}  // namespace delaychain
