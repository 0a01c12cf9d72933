#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delaychain/core.hpp"

namespace delaychain {

enum class RecoveryStrategy { diagonal, uniform, gaussian_regression, gaussian_kernel };

const char* to_string(RecoveryStrategy strategy);
RecoveryStrategy recovery_strategy_from_string(const std::string& text);

// Warnings raised while recovering a matrix (fallbacks, ridge escalation).
using Warnings = std::vector<std::string>;

// Count ratios n_{i,j}(t) / sum_l n_{i,l}(t); zero-marginal rows are undefined.
TransitionMatrix empirical_matrix(const CountTensor& counts);

// Undefined row i becomes the unit row e_i.
TransitionMatrix diagonal_fill(const TransitionMatrix& partial);

// Undefined rows become 1 / (2N + 1) everywhere.
TransitionMatrix uniform_fill(const TransitionMatrix& partial);

// How the per-row dispersion entering the regression is computed. `printed`
// uses sum n (l - mu)^2 / (n - 1) as is; `sqrt` takes its square root.
enum class RegressionStd { printed, sqrt };

const char* to_string(RegressionStd mode);
RegressionStd regression_std_from_string(const std::string& text);

struct RegressionFit {
  double mean_intercept = 0.0;  // alpha
  double mean_slope = 0.0;      // beta
  double std_intercept = 0.0;   // alpha-check
  double std_slope = 0.0;       // beta-check
  // Per observed row (state value, mu_i, sigma_i); sigma_i is absent from the
  // dispersion fit for single-observation rows.
  struct RowMoments {
    int state = 0;
    double mean = 0.0;
    double dispersion = 0.0;
    bool has_dispersion = false;
  };
  std::vector<RowMoments> rows;

  double mean_at(int state) const { return mean_intercept + mean_slope * state; }
  double std_at(int state) const { return std_intercept + std_slope * state; }
};

// Least-squares lines through the observed row moments. Throws NoDataError
// when fewer than two rows are available for either line.
RegressionFit fit_regression(const CountTensor& counts, RegressionStd mode = RegressionStd::printed);

// Discretized Gaussian over -N..N normalized to one; sigma must be > 0.
std::vector<double> discretized_gaussian(const StateSpace& space, double mean, double sigma);

// Fills undefined rows from the regression lines; rows whose fitted sigma is
// not positive become unit diagonal rows. Falls back to diagonal_fill (and
// appends a warning) when the regression cannot be fitted.
TransitionMatrix gaussian_regression_fill(const TransitionMatrix& partial, const CountTensor& counts,
                                          RegressionStd mode = RegressionStd::printed,
                                          Warnings* warnings = nullptr);

using Point2 = std::array<double, 2>;

struct KdeModel {
  static constexpr double kDeterminantFloor = 1e-12;
  static constexpr double kRidge = 1e-6;

  int station = 0;
  std::vector<Point2> points;  // jittered observations
  Point2 mean{};
  std::array<double, 4> covariance{};  // row-major 2x2
  std::array<double, 4> inverse{};
  double determinant = 0.0;
  double bandwidth = 1.0;  // h = m^(-1/6)
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  std::size_t count() const { return points.size(); }
};

// Jitters each (d(t-1), d(t)) pair by independent uniform noise on
// [-epsilon, epsilon]^2, then fits mean, sample covariance and bandwidth.
// m = 0 throws NoDataError; m = 1 uses the identity covariance with a warning.
KdeModel kde_fit(std::span<const Point2> observations, double epsilon, std::uint64_t seed,
                 Warnings* warnings = nullptr);

// Pairs (d(t-1), d(t)) from every series reaching station t.
std::vector<Point2> transition_observations(std::span<const DelaySeries> series, int t);

double kde_density(const KdeModel& model, const Point2& x);
double kde_log_density(const KdeModel& model, const Point2& x);

// p(i, j) = f(i, j) / sum_k f(i, k), normalized in log space.
TransitionMatrix kde_matrix(const KdeModel& model, const StateSpace& space);

// Runs one strategy end to end from counts (and observations for the kernel).
struct RecoveryOptions {
  RecoveryStrategy strategy = RecoveryStrategy::gaussian_kernel;
  double epsilon = 0.1;
  RegressionStd regression_std = RegressionStd::printed;
  std::uint64_t seed = 0;
};

TransitionMatrix recover_matrix(const CountTensor& counts, std::span<const Point2> observations,
                                const RecoveryOptions& options, Warnings* warnings = nullptr);

// Matrix dumps: CSV grid with state-value header, and an aligned text heatmap.
void write_matrix_csv(std::ostream& out, const TransitionMatrix& matrix);
void write_matrix_heatmap(std::ostream& out, const TransitionMatrix& matrix, int precision = 2);

}  // namespace delaychain
