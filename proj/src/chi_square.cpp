#include "delaychain/chi_square.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "delaychain/error.hpp"

namespace delaychain {

namespace {

constexpr int kMaxIterations = 100000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

// Power series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz continued fraction for Q(a, x) = 1 - P(a, x), x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int n = 1; n < kMaxIterations; ++n) {
    const double an = -n * (n - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

double chi_square_pdf(double x, int df) {
  if (x <= 0.0) return 0.0;
  const double k = 0.5 * df;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma requires x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi_square_cdf(double x, int df) {
  if (df < 1) throw DomainError("chi-square requires df >= 1, got " + std::to_string(df));
  if (!(x >= 0.0)) throw DomainError("chi-square cdf requires x >= 0");
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi_square_quantile(double p, int df) {
  if (df < 1) throw DomainError("chi-square requires df >= 1, got " + std::to_string(df));
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi-square quantile requires 0 < p < 1");

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (chi_square_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
  }

  // Newton steps safeguarded by the bracket [lo, hi].
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 1000; ++iter) {
    const double f = chi_square_cdf(x, df) - p;
    if (std::abs(f) <= 1e-14) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double slope = chi_square_pdf(x, df);
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= std::numeric_limits<double>::min() ||
        std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace delaychain
