#include "delaychain/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "delaychain/error.hpp"

namespace delaychain {

const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::mean: return "mean";
    case Metric::mode: return "mode";
    case Metric::median: return "median";
    case Metric::probability: return "probability";
  }
  return "mean";
}

const char* to_string(Trend trend) {
  switch (trend) {
    case Trend::decrease: return "decrease";
    case Trend::equal: return "equal";
    case Trend::increase: return "increase";
  }
  return "equal";
}

Metric metric_from_string(const std::string& text) {
  if (text == "mean") return Metric::mean;
  if (text == "mode") return Metric::mode;
  if (text == "median") return Metric::median;
  if (text == "probability") return Metric::probability;
  throw ParseError("unknown metric '" + text + "'");
}

Trend trend_from_string(const std::string& text) {
  if (text == "decrease") return Trend::decrease;
  if (text == "equal") return Trend::equal;
  if (text == "increase") return Trend::increase;
  throw ParseError("unknown trend '" + text + "'");
}

DelayDistribution propagate(const DelayDistribution& initial, std::span<const TransitionMatrix> matrices) {
  validate_distribution(initial.probs);
  DelayDistribution v = initial;
  std::vector<double> next(v.probs.size());
  for (const auto& p : matrices) {
    if (!(p.space() == v.space)) throw DomainError("matrix state space differs from distribution");
    if (!p.is_complete()) {
      throw CoverageError("matrix for station " + std::to_string(p.station()) +
                          " has undefined rows; recover it first");
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double mass = v.probs[i];
      if (mass == 0.0) continue;
      const auto row = p.row(i);
      for (std::size_t j = 0; j < p.size(); ++j) next[j] += mass * row[j];
    }
    v.probs.swap(next);
    v.station = p.station();
  }
  return v;
}

DelayDistribution point_delay(int delay, const StateSpace& space, int station) {
  DelayDistribution v{space, station, std::vector<double>(space.cardinality(), 0.0)};
  v.probs[space.index(delay)] = 1.0;
  return v;
}

Summary summarize(const DelayDistribution& v) {
  // Slack on the cumulative sum so exact halves survive rounding.
  constexpr double kHalf = 0.5 - 1e-12;
  Summary s;
  double best = -1.0;
  double cumulative = 0.0;
  bool median_set = false;
  for (std::size_t i = 0; i < v.probs.size(); ++i) {
    const int state = v.space.value(i);
    const double p = v.probs[i];
    s.mean += p * state;
    if (p > best) {
      best = p;
      s.mode = state;
    }
    cumulative += p;
    if (!median_set && cumulative >= kHalf) {
      s.median = state;
      median_set = true;
    }
  }
  if (!median_set) s.median = v.space.n_max();
  return s;
}

TrendProbabilities trend_and_jump_probabilities(const DelayDistribution& v, int current_delay) {
  const std::size_t center = v.space.index(current_delay);
  TrendProbabilities out;
  double window = 0.0;
  for (std::size_t i = 0; i < v.probs.size(); ++i) {
    const double p = v.probs[i];
    if (i < center) {
      out.decrease += p;
    } else if (i > center) {
      out.increase += p;
    } else {
      out.equal += p;
    }
    if (i + 1 >= center && i <= center + 1) window += p;
  }
  out.jump = std::clamp(1.0 - window, 0.0, 1.0);
  return out;
}

namespace {

double point_metric(const DelayDistribution& v, Metric metric) {
  const Summary s = summarize(v);
  switch (metric) {
    case Metric::mean: return s.mean;
    case Metric::mode: return s.mode;
    case Metric::median: return s.median;
    case Metric::probability: break;
  }
  throw DomainError("probability metric has no point value");
}

}  // namespace

Trend predict_trend(const DelayDistribution& v, int current_delay, Metric metric,
                    const MetricConfig& config) {
  if (metric == Metric::probability) {
    const TrendProbabilities p = trend_and_jump_probabilities(v, current_delay);
    if (p.increase > std::max(p.decrease, p.equal)) return Trend::increase;
    if (p.decrease > std::max(p.increase, p.equal)) return Trend::decrease;
    return Trend::equal;
  }
  const double change = point_metric(v, metric) - current_delay;
  if (change >= config.trend_threshold) return Trend::increase;
  if (change <= -config.trend_threshold) return Trend::decrease;
  return Trend::equal;
}

bool predict_jump(const DelayDistribution& v, int current_delay, Metric metric,
                  const MetricConfig& config) {
  if (metric == Metric::probability) {
    return trend_and_jump_probabilities(v, current_delay).jump >= config.jump_probability_threshold;
  }
  return std::abs(point_metric(v, metric) - current_delay) >= config.jump_threshold;
}

double predict_minutes(const DelayDistribution& v, Metric metric) {
  if (metric == Metric::probability) throw DomainError("minutes cannot be derived from the probability metric");
  return point_metric(v, metric);
}

Prediction make_prediction(DelayDistribution v, int current_delay, const MetricConfig& config) {
  Prediction out;
  out.current_delay = current_delay;
  out.trend = predict_trend(v, current_delay, config.trend, config);
  out.jump = predict_jump(v, current_delay, config.jump, config);
  out.minutes = predict_minutes(v, config.minutes);
  out.metrics = config;
  out.distribution = std::move(v);
  return out;
}

}  // namespace delaychain
