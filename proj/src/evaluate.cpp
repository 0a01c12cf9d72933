#include "delaychain/evaluate.hpp"

#include <cmath>

#include "delaychain/error.hpp"

namespace delaychain {

void ConfusionTally::add(bool predicted, bool actual) {
  if (predicted && actual) {
    ++tp;
  } else if (predicted) {
    ++fp;
  } else if (actual) {
    ++fn;
  } else {
    ++tn;
  }
}

ConfusionTally& ConfusionTally::operator+=(const ConfusionTally& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

double f1_class(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp + fp == 0 || tp + fn == 0) return 0.0;
  const double ppv = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (ppv + tpr == 0.0) return 0.0;
  return 2.0 * ppv * tpr / (ppv + tpr);
}

Trend actual_trend(int current_delay, int realized_delay) {
  if (realized_delay > current_delay) return Trend::increase;
  if (realized_delay < current_delay) return Trend::decrease;
  return Trend::equal;
}

bool actual_jump(int current_delay, int realized_delay, int jump_threshold) {
  return std::abs(realized_delay - current_delay) >= jump_threshold;
}

TrendScore trend_score(std::span<const Trend> predicted, std::span<const Trend> actual) {
  if (predicted.size() != actual.size()) throw DomainError("trend lists differ in length");
  TrendScore s;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    s.increase.add(predicted[k] == Trend::increase, actual[k] == Trend::increase);
    s.decrease.add(predicted[k] == Trend::decrease, actual[k] == Trend::decrease);
    s.equal.add(predicted[k] == Trend::equal, actual[k] == Trend::equal);
  }
  s.f_in = f1_class(s.increase);
  s.f_de = f1_class(s.decrease);
  s.f_eq = f1_class(s.equal);
  s.f_tr = (s.f_in + s.f_de + s.f_eq) / 3.0;
  return s;
}

JumpScore jump_score(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) throw DomainError("jump lists differ in length");
  JumpScore s;
  for (std::size_t k = 0; k < predicted.size(); ++k) s.tally.add(predicted[k], actual[k]);
  s.f_jp = f1_class(s.tally);
  return s;
}

const char* to_string(RwmseForm form) { return form == RwmseForm::printed ? "printed" : "squared"; }

RwmseForm rwmse_form_from_string(const std::string& text) {
  if (text == "printed") return RwmseForm::printed;
  if (text == "squared") return RwmseForm::squared;
  throw ParseError("unknown rwmse form '" + text + "'");
}

double RwmseWeights::mass() const {
  return small * static_cast<double>(small_count) + large * static_cast<double>(large_count);
}

RwmseWeights rwmse_weights(std::span<const double> actual) {
  RwmseWeights w;
  for (double d : actual) {
    if (std::abs(d) <= 1.0) {
      ++w.small_count;
    } else {
      ++w.large_count;
    }
  }
  double small_mass = 0.2;
  double large_mass = 0.8;
  if (w.small_count == 0) {
    small_mass = 0.0;
    large_mass = 1.0;
  } else if (w.large_count == 0) {
    small_mass = 1.0;
    large_mass = 0.0;
  }
  if (w.small_count > 0) w.small = small_mass / static_cast<double>(w.small_count);
  if (w.large_count > 0) w.large = large_mass / static_cast<double>(w.large_count);
  return w;
}

double rwmse(std::span<const double> predicted, std::span<const double> actual, RwmseForm form) {
  if (predicted.size() != actual.size()) throw DomainError("rwmse inputs differ in length");
  if (actual.empty()) throw DomainError("rwmse needs at least one sample");
  const RwmseWeights w = rwmse_weights(actual);
  double sum = 0.0;
  for (std::size_t k = 0; k < actual.size(); ++k) {
    const double err = predicted[k] - actual[k];
    const double term = form == RwmseForm::printed ? std::abs(err) : err * err;
    sum += w.weight_for(actual[k]) * term;
  }
  return std::sqrt(sum);
}

double total_score(double f_jp, double f_tr, double rwmse_value) {
  return 10.0 * f_jp + 5.0 * f_tr - rwmse_value;
}

ScoreReport score_predictions(std::span<const Prediction> predictions, std::span<const Outcome> outcomes,
                              RwmseForm form, std::string method) {
  if (predictions.size() != outcomes.size()) throw DomainError("predictions and outcomes differ in length");
  if (outcomes.empty()) throw DomainError("cannot score an empty batch");

  std::vector<Trend> predicted_trend;
  std::vector<Trend> realized_trend;
  std::vector<bool> predicted_jump;
  std::vector<bool> realized_jump;
  std::vector<double> predicted_minutes;
  std::vector<double> realized_minutes;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    predicted_trend.push_back(predictions[k].trend);
    realized_trend.push_back(actual_trend(o.current_delay, o.realized_delay));
    predicted_jump.push_back(predictions[k].jump);
    realized_jump.push_back(actual_jump(o.current_delay, o.realized_delay));
    predicted_minutes.push_back(predictions[k].minutes);
    realized_minutes.push_back(o.realized_delay);
  }

  ScoreReport r;
  r.method = std::move(method);
  r.eval_count = outcomes.size();
  r.form = form;
  r.trend = trend_score(predicted_trend, realized_trend);
  r.jump = jump_score(predicted_jump, realized_jump);
  r.weights = rwmse_weights(realized_minutes);
  r.rwmse = rwmse(predicted_minutes, realized_minutes, form);
  r.total = total_score(r.jump.f_jp, r.trend.f_tr, r.rwmse);
  return r;
}

Prediction naive_predictor(int current_delay, const StateSpace& space) {
  Prediction p;
  p.distribution = point_delay(current_delay, space);
  p.current_delay = current_delay;
  p.trend = Trend::equal;
  p.jump = false;
  p.minutes = current_delay;
  return p;
}

Prediction marginal_predictor(const CountTensor& counts_at_target, int current_delay,
                              const MetricConfig& config) {
  const Count total = counts_at_target.total();
  if (total == 0) {
    throw NoDataError("no observations at station " + std::to_string(counts_at_target.station()));
  }
  DelayDistribution v{counts_at_target.space(), counts_at_target.station(),
                      std::vector<double>(counts_at_target.size())};
  for (std::size_t j = 0; j < v.probs.size(); ++j) {
    v.probs[j] = static_cast<double>(counts_at_target.n1(j)) / static_cast<double>(total);
  }
  return make_prediction(std::move(v), current_delay, config);
}

}  // namespace delaychain
