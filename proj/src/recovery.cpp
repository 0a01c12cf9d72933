#include "delaychain/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "delaychain/error.hpp"

namespace delaychain {

const char* to_string(RecoveryStrategy strategy) {
  switch (strategy) {
    case RecoveryStrategy::diagonal: return "diagonal";
    case RecoveryStrategy::uniform: return "uniform";
    case RecoveryStrategy::gaussian_regression: return "gaussian_regression";
    case RecoveryStrategy::gaussian_kernel: return "gaussian_kernel";
  }
  return "gaussian_kernel";
}

RecoveryStrategy recovery_strategy_from_string(const std::string& text) {
  if (text == "diagonal") return RecoveryStrategy::diagonal;
  if (text == "uniform") return RecoveryStrategy::uniform;
  if (text == "gaussian_regression" || text == "regression") return RecoveryStrategy::gaussian_regression;
  if (text == "gaussian_kernel" || text == "kernel") return RecoveryStrategy::gaussian_kernel;
  throw ParseError("unknown recovery strategy '" + text + "'");
}

const char* to_string(RegressionStd mode) { return mode == RegressionStd::printed ? "printed" : "sqrt"; }

RegressionStd regression_std_from_string(const std::string& text) {
  if (text == "printed") return RegressionStd::printed;
  if (text == "sqrt") return RegressionStd::sqrt;
  throw ParseError("unknown regression_std '" + text + "'");
}

namespace {

double log_sum_exp(std::span<const double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

// exp(log_weights - logsumexp) written into `out`.
void normalize_log_weights(std::span<const double> log_weights, std::vector<double>& out) {
  const double norm = log_sum_exp(log_weights);
  out.resize(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    out[k] = std::exp(log_weights[k] - norm);
    total += out[k];
  }
  for (double& v : out) v /= total;
}

std::vector<double> unit_row(std::size_t size, std::size_t hot) {
  std::vector<double> row(size, 0.0);
  row[hot] = 1.0;
  return row;
}

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
};

Line least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw NoDataError("regression needs two distinct rows");
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

}  // namespace

// ---------------------------------------------------------------------------
// Empirical matrix and heuristic fills

TransitionMatrix empirical_matrix(const CountTensor& counts) {
  TransitionMatrix out(counts.space(), counts.station());
  const std::size_t k = counts.size();
  std::vector<double> row(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Count total = counts.row_total(i);
    if (total == 0) continue;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = static_cast<double>(counts.n2(i, j)) / static_cast<double>(total);
    }
    out.set_row(i, row, RowStatus::observed);
  }
  return out;
}

TransitionMatrix diagonal_fill(const TransitionMatrix& partial) {
  TransitionMatrix out = partial;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.status(i) == RowStatus::undefined) {
      out.set_row(i, unit_row(out.size(), i), RowStatus::recovered);
    }
  }
  return out;
}

TransitionMatrix uniform_fill(const TransitionMatrix& partial) {
  TransitionMatrix out = partial;
  const std::vector<double> flat(out.size(), 1.0 / static_cast<double>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.status(i) == RowStatus::undefined) out.set_row(i, flat, RowStatus::recovered);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian regression

RegressionFit fit_regression(const CountTensor& counts, RegressionStd mode) {
  RegressionFit fit;
  const StateSpace& space = counts.space();
  std::vector<double> mean_x;
  std::vector<double> mean_y;
  std::vector<double> std_x;
  std::vector<double> std_y;

  for (std::size_t i = 0; i < counts.size(); ++i) {
    const Count total = counts.row_total(i);
    if (total == 0) continue;
    double mu = 0.0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
      mu += static_cast<double>(counts.n2(i, l)) * space.value(l);
    }
    mu /= static_cast<double>(total);

    RegressionFit::RowMoments row{space.value(i), mu, 0.0, false};
    if (total >= 2) {
      double ss = 0.0;
      for (std::size_t l = 0; l < counts.size(); ++l) {
        const double dev = space.value(l) - mu;
        ss += static_cast<double>(counts.n2(i, l)) * dev * dev;
      }
      ss /= static_cast<double>(total - 1);
      row.dispersion = mode == RegressionStd::sqrt ? std::sqrt(ss) : ss;
      row.has_dispersion = true;
      std_x.push_back(row.state);
      std_y.push_back(row.dispersion);
    }
    mean_x.push_back(row.state);
    mean_y.push_back(row.mean);
    fit.rows.push_back(row);
  }

  if (mean_x.size() < 2) throw NoDataError("mean regression needs at least two observed rows");
  if (std_x.size() < 2) throw NoDataError("dispersion regression needs two rows with >= 2 observations");

  const Line mean_line = least_squares(mean_x, mean_y);
  const Line std_line = least_squares(std_x, std_y);
  fit.mean_intercept = mean_line.intercept;
  fit.mean_slope = mean_line.slope;
  fit.std_intercept = std_line.intercept;
  fit.std_slope = std_line.slope;
  return fit;
}

std::vector<double> discretized_gaussian(const StateSpace& space, double mean, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("discretized Gaussian needs sigma > 0");
  std::vector<double> log_w(space.cardinality());
  for (std::size_t j = 0; j < log_w.size(); ++j) {
    const double z = (space.value(j) - mean) / sigma;
    log_w[j] = -0.5 * z * z;
  }
  std::vector<double> out;
  normalize_log_weights(log_w, out);
  return out;
}

TransitionMatrix gaussian_regression_fill(const TransitionMatrix& partial, const CountTensor& counts,
                                          RegressionStd mode, Warnings* warnings) {
  RegressionFit fit;
  try {
    fit = fit_regression(counts, mode);
  } catch (const NoDataError& e) {
    if (warnings) {
      warnings->push_back("station " + std::to_string(partial.station()) +
                          ": regression fill fell back to diagonal (" + e.what() + ")");
    }
    return diagonal_fill(partial);
  }

  TransitionMatrix out = partial;
  const StateSpace& space = out.space();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.status(i) != RowStatus::undefined) continue;
    const int state = space.value(i);
    const double sigma = fit.std_at(state);
    if (sigma > 0.0) {
      out.set_row(i, discretized_gaussian(space, fit.mean_at(state), sigma), RowStatus::recovered);
    } else {
      out.set_row(i, unit_row(out.size(), i), RowStatus::recovered);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian kernel density

namespace {

double quadratic_form(const std::array<double, 4>& inv, double dx, double dy) {
  return inv[0] * dx * dx + (inv[1] + inv[2]) * dx * dy + inv[3] * dy * dy;
}

}  // namespace

KdeModel kde_fit(std::span<const Point2> observations, double epsilon, std::uint64_t seed,
                 Warnings* warnings) {
  if (observations.empty()) throw NoDataError("kernel density fit needs at least one observation");
  if (!(epsilon >= 0.0)) throw DomainError("jitter bound must be >= 0");

  KdeModel model;
  model.epsilon = epsilon;
  model.seed = seed;
  model.points.assign(observations.begin(), observations.end());

  if (epsilon > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-epsilon, epsilon);
    for (auto& p : model.points) {
      p[0] += noise(rng);
      p[1] += noise(rng);
    }
  }

  const auto m = model.points.size();
  for (const auto& p : model.points) {
    model.mean[0] += p[0];
    model.mean[1] += p[1];
  }
  model.mean[0] /= static_cast<double>(m);
  model.mean[1] /= static_cast<double>(m);
  model.bandwidth = std::pow(static_cast<double>(m), -1.0 / 6.0);

  auto& cov = model.covariance;
  if (m == 1) {
    cov = {1.0, 0.0, 0.0, 1.0};
    if (warnings) warnings->push_back("single observation: identity covariance substituted");
  } else {
    for (const auto& p : model.points) {
      const double dx = p[0] - model.mean[0];
      const double dy = p[1] - model.mean[1];
      cov[0] += dx * dx;
      cov[1] += dx * dy;
      cov[3] += dy * dy;
    }
    const auto denom = static_cast<double>(m - 1);
    cov[0] /= denom;
    cov[1] /= denom;
    cov[3] /= denom;
    cov[2] = cov[1];
  }

  auto det = [&] { return cov[0] * cov[3] - cov[1] * cov[2]; };
  for (double ridge = KdeModel::kRidge; det() <= KdeModel::kDeterminantFloor; ridge *= 10.0) {
    cov[0] += ridge;
    cov[3] += ridge;
    if (warnings) warnings->push_back("near-singular covariance: added ridge " + std::to_string(ridge));
  }
  model.determinant = det();
  model.inverse = {cov[3] / model.determinant, -cov[1] / model.determinant,
                   -cov[2] / model.determinant, cov[0] / model.determinant};
  return model;
}

std::vector<Point2> transition_observations(std::span<const DelaySeries> series, int t) {
  std::vector<Point2> out;
  if (t < 2) return out;
  for (const auto& s : series) {
    if (s.length() < static_cast<std::size_t>(t)) continue;
    out.push_back({static_cast<double>(s.at_station(t - 1)), static_cast<double>(s.at_station(t))});
  }
  return out;
}

double kde_log_density(const KdeModel& model, const Point2& x) {
  const double h2 = model.bandwidth * model.bandwidth;
  std::vector<double> terms;
  terms.reserve(model.points.size());
  for (const auto& p : model.points) {
    terms.push_back(-0.5 * quadratic_form(model.inverse, x[0] - p[0], x[1] - p[1]) / h2);
  }
  const auto m = static_cast<double>(model.count());
  return log_sum_exp(terms) - std::log(m * h2 * std::sqrt(model.determinant)) -
         std::log(2.0 * std::numbers::pi);
}

double kde_density(const KdeModel& model, const Point2& x) { return std::exp(kde_log_density(model, x)); }

namespace {

// log f(x_i, y_j) up to a constant, summing every kernel term.
void exact_log_row(const KdeModel& model, const StateSpace& space, std::size_t i, std::vector<double>& log_f) {
  const double scale = -0.5 / (model.bandwidth * model.bandwidth);
  const double xi = space.value(i);
  std::vector<double> terms(model.count());
  for (std::size_t j = 0; j < log_f.size(); ++j) {
    const double yj = space.value(j);
    for (std::size_t n = 0; n < model.count(); ++n) {
      const auto& p = model.points[n];
      terms[n] = scale * quadratic_form(model.inverse, xi - p[0], yj - p[1]);
    }
    log_f[j] = log_sum_exp(terms);
  }
}

}  // namespace

// Along a row each kernel term is a concave quadratic in y, so every point
// contributes only near its own peak. Terms are accumulated relative to an
// upper bound on the whole row and a point stops contributing once its terms
// underflow; the neglected mass is below double precision.
TransitionMatrix kde_matrix(const KdeModel& model, const StateSpace& space) {
  TransitionMatrix out(space, model.station);
  const auto k = static_cast<long>(space.cardinality());
  const double scale = -0.5 / (model.bandwidth * model.bandwidth);
  const double a = model.inverse[0];
  const double b = 0.5 * (model.inverse[1] + model.inverse[2]);
  const double c = model.inverse[3];
  // Cutoff just below the smallest positive double's logarithm.
  constexpr double kUnderflow = -746.0;

  std::vector<double> acc(static_cast<std::size_t>(k));
  std::vector<double> row;
  std::vector<double> log_f(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) {
    const double xi = space.value(static_cast<std::size_t>(i));
    // Row bound: the continuous maximum over y of each point's term.
    double bound = -std::numeric_limits<double>::infinity();
    for (const auto& p : model.points) {
      const double u = xi - p[0];
      bound = std::max(bound, scale * (a - b * b / c) * u * u);
    }

    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& p : model.points) {
      const double u = xi - p[0];
      const double peak_y = p[1] - b * u / c;
      const long j0 = std::clamp(std::lround(peak_y) + static_cast<long>(space.n_max()), 0L, k - 1);
      auto term = [&](long j) {
        const double v = space.value(static_cast<std::size_t>(j)) - p[1];
        return scale * (a * u * u + 2.0 * b * u * v + c * v * v) - bound;
      };
      for (long j = j0; j < k; ++j) {
        const double t = term(j);
        if (t < kUnderflow) break;
        acc[static_cast<std::size_t>(j)] += std::exp(t);
      }
      for (long j = j0 - 1; j >= 0; --j) {
        const double t = term(j);
        if (t < kUnderflow) break;
        acc[static_cast<std::size_t>(j)] += std::exp(t);
      }
    }

    // If the row's mass sits far below the bound, relative precision is
    // gone; recompute the row exactly.
    double total = 0.0;
    double largest = 0.0;
    for (double v : acc) {
      total += v;
      largest = std::max(largest, v);
    }
    if (largest > 1e-250 && std::isfinite(total)) {
      row.assign(acc.begin(), acc.end());
      for (double& v : row) v /= total;
    } else {
      exact_log_row(model, space, static_cast<std::size_t>(i), log_f);
      normalize_log_weights(log_f, row);
    }
    out.set_row(static_cast<std::size_t>(i), row, RowStatus::recovered);
  }
  return out;
}

// ---------------------------------------------------------------------------

TransitionMatrix recover_matrix(const CountTensor& counts, std::span<const Point2> observations,
                                const RecoveryOptions& options, Warnings* warnings) {
  switch (options.strategy) {
    case RecoveryStrategy::diagonal: return diagonal_fill(empirical_matrix(counts));
    case RecoveryStrategy::uniform: return uniform_fill(empirical_matrix(counts));
    case RecoveryStrategy::gaussian_regression:
      return gaussian_regression_fill(empirical_matrix(counts), counts, options.regression_std, warnings);
    case RecoveryStrategy::gaussian_kernel: {
      if (observations.empty()) {
        if (warnings) {
          warnings->push_back("station " + std::to_string(counts.station()) +
                              ": no transitions observed, identity matrix used");
        }
        return TransitionMatrix::identity(counts.space(), counts.station());
      }
      KdeModel model = kde_fit(observations, options.epsilon, options.seed, warnings);
      model.station = counts.station();
      return kde_matrix(model, counts.space());
    }
  }
  throw DomainError("unhandled recovery strategy");
}

void write_matrix_csv(std::ostream& out, const TransitionMatrix& matrix) {
  const StateSpace& space = matrix.space();
  out << "from";
  for (std::size_t j = 0; j < matrix.size(); ++j) out << ',' << space.value(j);
  out << '\n';
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(12);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << space.value(i);
    for (double v : matrix.row(i)) out << ',' << v;
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void write_matrix_heatmap(std::ostream& out, const TransitionMatrix& matrix, int precision) {
  const StateSpace& space = matrix.space();
  const int width = precision + 3;
  const auto flags = out.flags();
  out << std::setw(5) << "i\\j";
  for (std::size_t j = 0; j < matrix.size(); ++j) out << ' ' << std::setw(width) << space.value(j);
  out << '\n' << std::fixed << std::setprecision(precision);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << std::setw(5) << space.value(i);
    for (double v : matrix.row(i)) {
      if (matrix.status(i) == RowStatus::undefined) {
        out << ' ' << std::setw(width) << '.';
      } else {
        out << ' ' << std::setw(width) << v;
      }
    }
    out << '\n';
  }
  out.flags(flags);
}

}  // namespace delaychain
