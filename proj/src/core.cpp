#include "delaychain/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "delaychain/error.hpp"

namespace delaychain {

StateSpace::StateSpace(int n_max) : n_max_(n_max) {
  if (n_max < 1) throw DomainError("state space requires N >= 1, got " + std::to_string(n_max));
}

std::size_t StateSpace::index(int delay) const {
  if (!contains(delay)) {
    throw DomainError("delay " + std::to_string(delay) + " outside [-" + std::to_string(n_max_) +
                      ", " + std::to_string(n_max_) + "]");
  }
  return static_cast<std::size_t>(delay + n_max_);
}

int StateSpace::clip(int delay) const { return std::clamp(delay, -n_max_, n_max_); }

// ---------------------------------------------------------------------------
// CountTensor

CountTensor::CountTensor(StateSpace space, int station)
    : space_(space),
      station_(station),
      n1_(size(), 0),
      n2_(size() * size(), 0),
      n3_(size() * size() * size(), 0),
      pair_(size() * size(), 0) {
  if (station < 1) throw DomainError("station index must be >= 1");
}

Count CountTensor::row_total(std::size_t i) const {
  const auto first = n2_.begin() + static_cast<std::ptrdiff_t>(i * size());
  return std::accumulate(first, first + static_cast<std::ptrdiff_t>(size()), Count{0});
}

Count CountTensor::lag2_total(std::size_t h) const {
  Count sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += pair_count(h, i);
  return sum;
}

Count CountTensor::total() const { return std::accumulate(n1_.begin(), n1_.end(), Count{0}); }

Count CountTensor::transition_total() const {
  return std::accumulate(n2_.begin(), n2_.end(), Count{0});
}

Count CountTensor::triple_total() const {
  return std::accumulate(n3_.begin(), n3_.end(), Count{0});
}

void CountTensor::add_series(std::span<const std::size_t> indices) {
  const auto t = static_cast<std::size_t>(station_);
  if (indices.size() < t) return;
  const std::size_t j = indices[t - 1];
  ++n1_[j];
  if (t >= 2) {
    const std::size_t i = indices[t - 2];
    ++n2_[i * size() + j];
    if (t >= 3) {
      const std::size_t h = indices[t - 3];
      ++n3_[(h * size() + i) * size() + j];
      ++pair_[h * size() + i];
    }
  }
  ++series_counted_;
}

CountTensor build_count_tensor(std::span<const DelaySeries> series, int t, const StateSpace& space) {
  CountTensor counts(space, t);
  if (series.empty()) return counts;

  const auto& first = series.front();
  std::vector<std::size_t> indices;
  for (const auto& s : series) {
    if (s.train_id != first.train_id || s.service_class != first.service_class) {
      throw AlignmentError("count set mixes alignments: " + first.train_id + "/" +
                           first.service_class + " and " + s.train_id + "/" + s.service_class);
    }
    indices.clear();
    indices.reserve(s.delays.size());
    for (int d : s.delays) indices.push_back(space.index(d));
    counts.add_series(indices);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// FrequencyEstimates

std::vector<std::size_t> FrequencyEstimates::row_support(std::size_t i) const {
  std::vector<std::size_t> out;
  if (!p2_row_defined[i]) return out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (p2_at(i, j) > 0.0) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> FrequencyEstimates::column_support(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (p2_row_defined[i] && p2_at(i, j) > 0.0) out.push_back(i);
  }
  return out;
}

FrequencyEstimates estimate_frequencies(const CountTensor& counts) {
  const std::size_t k = counts.size();
  FrequencyEstimates f;
  f.space = counts.space();
  f.station = counts.station();
  f.p1.assign(k, 0.0);
  f.p2.assign(k * k, 0.0);
  f.p2_row_defined.assign(k, false);
  f.p3.assign(k * k * k, 0.0);
  f.p3_row_defined.assign(k * k, false);

  const Count total = counts.total();
  if (total > 0) {
    f.p1_defined = true;
    for (std::size_t j = 0; j < k; ++j) {
      f.p1[j] = static_cast<double>(counts.n1(j)) / static_cast<double>(total);
      if (counts.n1(j) > 0) f.support_t.push_back(j);
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const Count row = counts.row_total(i);
    if (row == 0) continue;
    f.p2_row_defined[i] = true;
    f.support_prev.push_back(i);
    for (std::size_t j = 0; j < k; ++j) {
      f.p2[i * k + j] = static_cast<double>(counts.n2(i, j)) / static_cast<double>(row);
    }
  }

  for (std::size_t h = 0; h < k; ++h) {
    if (counts.lag2_total(h) > 0) f.support_prev2.push_back(h);
    for (std::size_t i = 0; i < k; ++i) {
      const Count pair = counts.pair_count(h, i);
      if (pair == 0) continue;
      f.p3_row_defined[h * k + i] = true;
      for (std::size_t j = 0; j < k; ++j) {
        f.p3[(h * k + i) * k + j] =
            static_cast<double>(counts.n3(h, i, j)) / static_cast<double>(pair);
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// TransitionMatrix

const char* to_string(RowStatus status) {
  switch (status) {
    case RowStatus::observed: return "observed";
    case RowStatus::recovered: return "recovered";
    case RowStatus::undefined: return "undefined";
  }
  return "undefined";
}

RowStatus row_status_from_string(const std::string& text) {
  if (text == "observed") return RowStatus::observed;
  if (text == "recovered") return RowStatus::recovered;
  if (text == "undefined") return RowStatus::undefined;
  throw ParseError("unknown row status '" + text + "'");
}

TransitionMatrix::TransitionMatrix(StateSpace space, int station)
    : space_(space),
      station_(station),
      data_(size() * size(), 0.0),
      status_(size(), RowStatus::undefined) {}

std::span<const double> TransitionMatrix::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * size(), size());
}

void TransitionMatrix::set_row(std::size_t i, std::span<const double> values, RowStatus status) {
  if (values.size() != size()) throw DomainError("row length does not match state space");
  if (status == RowStatus::undefined) {
    clear_row(i);
    return;
  }
  validate_distribution(values, kRowSumTolerance);
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * size()));
  status_[i] = status;
}

void TransitionMatrix::clear_row(std::size_t i) {
  std::fill_n(data_.begin() + static_cast<std::ptrdiff_t>(i * size()), size(), 0.0);
  status_[i] = RowStatus::undefined;
}

bool TransitionMatrix::is_complete() const { return undefined_rows() == 0; }

std::size_t TransitionMatrix::undefined_rows() const {
  return static_cast<std::size_t>(std::count(status_.begin(), status_.end(), RowStatus::undefined));
}

TransitionMatrix TransitionMatrix::identity(StateSpace space, int station) {
  TransitionMatrix m(space, station);
  std::vector<double> unit(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    unit.assign(m.size(), 0.0);
    unit[i] = 1.0;
    m.set_row(i, unit, RowStatus::recovered);
  }
  return m;
}

void validate_distribution(std::span<const double> probs, double tolerance) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("probability entry is negative or not finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw DomainError("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace delaychain
