#pragma once

#include <span>
#include <string>

#include "delaychain/core.hpp"

namespace delaychain {

enum class Metric { mean, mode, median, probability };
enum class Trend { decrease, equal, increase };

const char* to_string(Metric metric);
const char* to_string(Trend trend);
Metric metric_from_string(const std::string& text);
Trend trend_from_string(const std::string& text);

struct MetricConfig {
  Metric trend = Metric::median;
  Metric jump = Metric::probability;
  Metric minutes = Metric::mean;
  double trend_threshold = 1.0;             // minutes
  double jump_threshold = 2.0;              // minutes
  double jump_probability_threshold = 0.5;
};

// v(T) = v(S) P(S+1) ... P(T). Throws CoverageError if any matrix has an
// undefined row and DomainError on a state-space mismatch.
DelayDistribution propagate(const DelayDistribution& initial, std::span<const TransitionMatrix> matrices);

// Unit mass at d(S); DomainError when d(S) is outside [-N, N].
DelayDistribution point_delay(int delay, const StateSpace& space, int station = 0);

struct Summary {
  double mean = 0.0;
  int mode = 0;    // smallest state on ties
  int median = 0;  // min{ i : cumulative mass >= 1/2 }
};

Summary summarize(const DelayDistribution& v);

struct TrendProbabilities {
  double increase = 0.0;
  double decrease = 0.0;
  double equal = 0.0;
  double jump = 0.0;  // 1 - mass on d(S)-1..d(S)+1, truncated at the domain edge
};

TrendProbabilities trend_and_jump_probabilities(const DelayDistribution& v, int current_delay);

Trend predict_trend(const DelayDistribution& v, int current_delay, Metric metric,
                    const MetricConfig& config = {});
bool predict_jump(const DelayDistribution& v, int current_delay, Metric metric,
                  const MetricConfig& config = {});
// The probability metric yields no minute estimate and throws DomainError.
double predict_minutes(const DelayDistribution& v, Metric metric = Metric::mean);

struct Prediction {
  DelayDistribution distribution;
  int current_delay = 0;
  Trend trend = Trend::equal;
  bool jump = false;
  double minutes = 0.0;
  MetricConfig metrics;
};

Prediction make_prediction(DelayDistribution v, int current_delay, const MetricConfig& config = {});

}  // namespace delaychain
