#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace delaychain {

using Count = std::int64_t;

// Bounded integer delay domain [-N, N] in minutes. Vectors and matrices in
// this library are indexed by index(d) = d + N.
class StateSpace {
 public:
  static constexpr int kDefaultMaxDelay = 15;

  explicit StateSpace(int n_max = kDefaultMaxDelay);

  int n_max() const { return n_max_; }
  std::size_t cardinality() const { return static_cast<std::size_t>(2 * n_max_ + 1); }
  bool contains(int delay) const { return delay >= -n_max_ && delay <= n_max_; }

  // Throws DomainError when the delay is outside [-N, N].
  std::size_t index(int delay) const;
  int value(std::size_t index) const { return static_cast<int>(index) - n_max_; }
  int clip(int delay) const;

  friend bool operator==(const StateSpace&, const StateSpace&) = default;

 private:
  int n_max_;
};

// One train's delays on one date. delays[k] is the delay at station k + 1.
struct DelaySeries {
  std::string train_id;
  std::string date;
  std::vector<int> delays;
  std::string service_class = "all";
  int clip_count = 0;

  std::size_t length() const { return delays.size(); }
  // 1-based station index.
  int at_station(int t) const { return delays.at(static_cast<std::size_t>(t - 1)); }
};

// Observation counts at station t: n_j(t), n_{i,j}(t), n_{h,i,j}(t) and the
// pair counts n_{h,i}(t-1) = sum_j n_{h,i,j}(t). All storage is dense and
// index-based.
class CountTensor {
 public:
  CountTensor(StateSpace space, int station);

  const StateSpace& space() const { return space_; }
  int station() const { return station_; }
  std::size_t size() const { return space_.cardinality(); }

  Count n1(std::size_t j) const { return n1_[j]; }
  Count n2(std::size_t i, std::size_t j) const { return n2_[i * size() + j]; }
  Count n3(std::size_t h, std::size_t i, std::size_t j) const {
    return n3_[(h * size() + i) * size() + j];
  }
  Count pair_count(std::size_t h, std::size_t i) const { return pair_[h * size() + i]; }

  // n_i(t-1) as the row marginal sum_j n_{i,j}(t).
  Count row_total(std::size_t i) const;
  // n_h(t-2) as sum_{i,j} n_{h,i,j}(t).
  Count lag2_total(std::size_t h) const;
  Count total() const;
  Count transition_total() const;
  Count triple_total() const;

  std::size_t series_counted() const { return series_counted_; }

  // Tallies one series given as state indices for stations 1..length.
  void add_series(std::span<const std::size_t> indices);

 private:
  StateSpace space_;
  int station_;
  std::vector<Count> n1_;
  std::vector<Count> n2_;
  std::vector<Count> n3_;
  std::vector<Count> pair_;
  std::size_t series_counted_ = 0;
};

// Tallies all series long enough to reach station t. Throws AlignmentError
// when the set mixes trains or service classes and DomainError for t < 1 or
// out-of-domain delays.
CountTensor build_count_tensor(std::span<const DelaySeries> series, int t, const StateSpace& space);

// Maximum-likelihood frequencies. Rows with zero marginal are undefined and
// hold zeros; callers must consult the *_defined flags.
struct FrequencyEstimates {
  StateSpace space;
  int station = 0;
  std::vector<double> p1;
  bool p1_defined = false;
  std::vector<double> p2;  // size K*K
  std::vector<bool> p2_row_defined;
  std::vector<double> p3;  // size K*K*K
  std::vector<bool> p3_row_defined;  // indexed h*K + i

  std::vector<std::size_t> support_t;      // A(t)
  std::vector<std::size_t> support_prev;   // A(t-1)
  std::vector<std::size_t> support_prev2;  // A(t-2)

  std::size_t size() const { return space.cardinality(); }
  double p2_at(std::size_t i, std::size_t j) const { return p2[i * size() + j]; }
  double p3_at(std::size_t h, std::size_t i, std::size_t j) const {
    return p3[(h * size() + i) * size() + j];
  }
  bool p3_defined(std::size_t h, std::size_t i) const { return p3_row_defined[h * size() + i]; }

  // B_i(t) = { j : n_{i,j}(t) > 0 }.
  std::vector<std::size_t> row_support(std::size_t i) const;
  // C_j(t) = { i : n_{i,j}(t) > 0 }.
  std::vector<std::size_t> column_support(std::size_t j) const;
};

FrequencyEstimates estimate_frequencies(const CountTensor& counts);

enum class RowStatus { observed, recovered, undefined };

const char* to_string(RowStatus status);
RowStatus row_status_from_string(const std::string& text);

// (2N+1)x(2N+1) transition matrix P(t), possibly partial.
class TransitionMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  TransitionMatrix(StateSpace space, int station);

  const StateSpace& space() const { return space_; }
  int station() const { return station_; }
  std::size_t size() const { return space_.cardinality(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * size() + j]; }
  std::span<const double> row(std::size_t i) const;
  RowStatus status(std::size_t i) const { return status_[i]; }

  // Rejects negative entries or a row sum off by more than kRowSumTolerance.
  void set_row(std::size_t i, std::span<const double> values, RowStatus status);
  void clear_row(std::size_t i);

  bool is_complete() const;
  std::size_t undefined_rows() const;

  static TransitionMatrix identity(StateSpace space, int station);

 private:
  StateSpace space_;
  int station_;
  std::vector<double> data_;
  std::vector<RowStatus> status_;
};

// Probability vector v(t) over the state space.
struct DelayDistribution {
  StateSpace space;
  int station = 0;
  std::vector<double> probs;

  double at(int delay) const { return probs[space.index(delay)]; }
};

// Throws DomainError unless entries are nonnegative and sum to 1 +- tol.
void validate_distribution(std::span<const double> probs, double tolerance = 1e-9);

}  // namespace delaychain
