#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "delaychain/core.hpp"
#include "delaychain/forecast.hpp"

namespace delaychain {

struct ConfusionTally {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(bool predicted, bool actual);
  ConfusionTally& operator+=(const ConfusionTally& other);
};

// F1 = 2 PPV TPR / (PPV + TPR); 0 whenever a denominator vanishes.
double f1_class(std::size_t tp, std::size_t fp, std::size_t fn);
inline double f1_class(const ConfusionTally& t) { return f1_class(t.tp, t.fp, t.fn); }

// Realized classes: increase iff d(T) > d(S); jump iff |d(T) - d(S)| >= 2.
Trend actual_trend(int current_delay, int realized_delay);
bool actual_jump(int current_delay, int realized_delay, int jump_threshold = 2);

struct TrendScore {
  ConfusionTally increase;
  ConfusionTally decrease;
  ConfusionTally equal;
  double f_in = 0.0;
  double f_de = 0.0;
  double f_eq = 0.0;
  double f_tr = 0.0;
};

struct JumpScore {
  ConfusionTally tally;
  double f_jp = 0.0;
};

// Both throw DomainError on a length mismatch.
TrendScore trend_score(std::span<const Trend> predicted, std::span<const Trend> actual);
JumpScore jump_score(const std::vector<bool>& predicted, const std::vector<bool>& actual);

enum class RwmseForm { printed, squared };

const char* to_string(RwmseForm form);
RwmseForm rwmse_form_from_string(const std::string& text);

struct RwmseWeights {
  double small = 0.0;  // w1, applied where |d| <= 1
  double large = 0.0;  // w2, applied where |d| > 1
  std::size_t small_count = 0;
  std::size_t large_count = 0;

  double weight_for(double actual) const { return std::abs(actual) <= 1.0 ? small : large; }
  // sum_i of the per-sample weight; 1 for any nonempty batch.
  double mass() const;
};

// w1 = 0.2 / #small, w2 = 0.8 / #large. An empty class hands its mass to
// the other class.
RwmseWeights rwmse_weights(std::span<const double> actual);

// sqrt(sum_i w_i |d_hat_i - d_i|) (printed) or sqrt(sum_i w_i (d_hat_i - d_i)^2).
double rwmse(std::span<const double> predicted, std::span<const double> actual,
             RwmseForm form = RwmseForm::printed);

// 10 F_JP + 5 F_TR - RWMSE.
double total_score(double f_jp, double f_tr, double rwmse_value);

// One evaluated train: current delay at S and realized delay at T.
struct Outcome {
  int current_delay = 0;
  int realized_delay = 0;
};

struct ScoreReport {
  std::string method;
  std::size_t eval_count = 0;
  TrendScore trend;
  JumpScore jump;
  double rwmse = 0.0;
  double total = 0.0;
  RwmseWeights weights;
  RwmseForm form = RwmseForm::printed;
};

ScoreReport score_predictions(std::span<const Prediction> predictions, std::span<const Outcome> outcomes,
                              RwmseForm form = RwmseForm::printed, std::string method = {});

// d(T) = d(S): unit mass at d(S), trend equal, no jump.
Prediction naive_predictor(int current_delay, const StateSpace& space);

// v(T) = marginal frequencies n_l(T) / sum n(T), read out with `config`.
// Throws NoDataError when the marginal is empty.
Prediction marginal_predictor(const CountTensor& counts_at_target, int current_delay,
                              const MetricConfig& config = {});

}  // namespace delaychain
