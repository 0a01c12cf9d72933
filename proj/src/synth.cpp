#include "delaychain/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "delaychain/error.hpp"
#include "delaychain/recovery.hpp"
#include "delaychain/seed.hpp"

namespace delaychain {

namespace chr = std::chrono;

const char* to_string(GeneratorClass generator) {
  switch (generator) {
    case GeneratorClass::order0: return "order0";
    case GeneratorClass::order1: return "order1";
    case GeneratorClass::order2: return "order2";
  }
  return "order1";
}

GeneratorClass generator_class_from_string(const std::string& text) {
  if (text == "order0") return GeneratorClass::order0;
  if (text == "order1") return GeneratorClass::order1;
  if (text == "order2") return GeneratorClass::order2;
  throw ParseError("unknown generator class '" + text + "'");
}

namespace {

constexpr double kStochasticTolerance = 1e-12;

void check_row(std::span<const double> row, std::size_t size, const char* what) {
  if (row.size() != size) throw DomainError(std::string(what) + " has the wrong length");
  validate_distribution(row, kStochasticTolerance);
}

std::size_t draw(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  // Rounding left u above the final cumulative sum; take the last positive entry.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0.0) return k;
  }
  return probs.size() - 1;
}

std::vector<double> dirichlet_row(std::size_t size, double concentration, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> row(size);
  double total = 0.0;
  for (auto& v : row) {
    v = gamma(rng) + 1e-9;
    total += v;
  }
  for (auto& v : row) v /= total;
  return row;
}

std::vector<double> uniform_row(std::size_t size) {
  return std::vector<double>(size, 1.0 / static_cast<double>(size));
}

}  // namespace

void ChainSpec::validate() const {
  const std::size_t k = space.cardinality();
  if (length < 1) throw DomainError("chain length must be >= 1");
  switch (generator) {
    case GeneratorClass::order0:
      if (marginals.size() != static_cast<std::size_t>(length)) throw DomainError("order0 needs one marginal per station");
      for (const auto& m : marginals) check_row(m, k, "marginal");
      break;
    case GeneratorClass::order1:
      check_row(initial, k, "initial distribution");
      if (matrices.size() + 1 < static_cast<std::size_t>(length)) throw DomainError("order1 needs P(2)..P(length)");
      for (const auto& p : matrices) {
        if (!p.is_complete()) throw DomainError("true matrix has undefined rows");
        for (std::size_t i = 0; i < k; ++i) check_row(p.row(i), k, "matrix row");
      }
      break;
    case GeneratorClass::order2:
      check_row(initial, k, "initial distribution");
      if (length >= 2 && matrices.empty()) throw DomainError("order2 needs P(2)");
      if (second_order.size() + 2 < static_cast<std::size_t>(length)) {
        throw DomainError("order2 needs a second-order table per station from 3");
      }
      for (const auto& table : second_order) {
        if (table.size() != k * k * k) throw DomainError("second-order table has the wrong size");
        for (std::size_t hi = 0; hi < k * k; ++hi) {
          check_row(std::span<const double>(table).subspan(hi * k, k), k, "second-order row");
        }
      }
      break;
  }
}

std::vector<DelaySeries> sample_series(const ChainSpec& spec, std::size_t count) {
  spec.validate();
  const std::size_t k = spec.space.cardinality();
  const auto length = static_cast<std::size_t>(spec.length);
  const chr::sys_days first_day{chr::year{2017} / chr::September / chr::day{4}};

  std::vector<DelaySeries> out;
  out.reserve(count);
  std::vector<std::size_t> states(length);
  for (std::size_t n = 0; n < count; ++n) {
    std::mt19937_64 rng(derive_seed(spec.seed, n));
    for (std::size_t t = 0; t < length; ++t) {
      switch (spec.generator) {
        case GeneratorClass::order0:
          states[t] = draw(spec.marginals[t], rng);
          break;
        case GeneratorClass::order1:
          states[t] = t == 0 ? draw(spec.initial, rng) : draw(spec.matrices[t - 1].row(states[t - 1]), rng);
          break;
        case GeneratorClass::order2:
          if (t == 0) {
            states[t] = draw(spec.initial, rng);
          } else if (t == 1) {
            states[t] = draw(spec.matrices[0].row(states[0]), rng);
          } else {
            const auto& table = spec.second_order[t - 2];
            const std::size_t offset = (states[t - 2] * k + states[t - 1]) * k;
            states[t] = draw(std::span<const double>(table).subspan(offset, k), rng);
          }
          break;
      }
    }
    DelaySeries s;
    s.train_id = spec.train_id;
    s.date = format_date(chr::year_month_day{first_day + chr::days{static_cast<int>(n)}});
    s.delays.reserve(length);
    for (std::size_t st : states) s.delays.push_back(spec.space.value(st));
    out.push_back(std::move(s));
  }
  return out;
}

ChainSpec near_diagonal_spec(const StateSpace& space, int length, double dispersion, std::uint64_t seed) {
  if (!(dispersion > 0.0)) throw DomainError("dispersion must be positive");
  ChainSpec spec;
  spec.space = space;
  spec.length = length;
  spec.generator = GeneratorClass::order1;
  spec.seed = seed;
  spec.initial = uniform_row(space.cardinality());

  TransitionMatrix p(space, 2);
  for (std::size_t i = 0; i < space.cardinality(); ++i) {
    p.set_row(i, discretized_gaussian(space, space.value(i), dispersion), RowStatus::observed);
  }
  for (int t = 2; t <= length; ++t) {
    TransitionMatrix copy(space, t);
    for (std::size_t i = 0; i < space.cardinality(); ++i) copy.set_row(i, p.row(i), RowStatus::observed);
    spec.matrices.push_back(std::move(copy));
  }
  return spec;
}

ChainSpec random_order0_spec(const StateSpace& space, int length, std::uint64_t seed) {
  ChainSpec spec;
  spec.space = space;
  spec.length = length;
  spec.generator = GeneratorClass::order0;
  spec.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 0xA11CEULL));
  for (int t = 1; t <= length; ++t) spec.marginals.push_back(dirichlet_row(space.cardinality(), 2.0, rng));
  return spec;
}

ChainSpec random_order1_spec(const StateSpace& space, int length, double concentration, std::uint64_t seed) {
  ChainSpec spec;
  spec.space = space;
  spec.length = length;
  spec.generator = GeneratorClass::order1;
  spec.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 0xB0BULL));
  const std::size_t k = space.cardinality();
  spec.initial = uniform_row(k);
  for (int t = 2; t <= length; ++t) {
    TransitionMatrix p(space, t);
    for (std::size_t i = 0; i < k; ++i) p.set_row(i, dirichlet_row(k, concentration, rng), RowStatus::observed);
    spec.matrices.push_back(std::move(p));
  }
  return spec;
}

ChainSpec random_order2_spec(const StateSpace& space, int length, double concentration, std::uint64_t seed) {
  ChainSpec spec = random_order1_spec(space, std::min(length, 2), concentration, seed);
  spec.length = length;
  spec.generator = GeneratorClass::order2;
  std::mt19937_64 rng(derive_seed(seed, 0xC0FFEEULL));
  const std::size_t k = space.cardinality();
  for (int t = 3; t <= length; ++t) {
    std::vector<double> table;
    table.reserve(k * k * k);
    for (std::size_t hi = 0; hi < k * k; ++hi) {
      const auto row = dirichlet_row(k, concentration, rng);
      table.insert(table.end(), row.begin(), row.end());
    }
    spec.second_order.push_back(std::move(table));
  }
  return spec;
}

void write_synthetic_csv(std::ostream& timetable, std::ostream& realization, const ChainSpec& spec,
                         const std::vector<DelaySeries>& series, const SyntheticTimetable& layout) {
  auto station_code = [](int t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "ST%02d", t);
    return std::string(buf);
  };
  auto activity = [&](int t) {
    if (t == 1) return Activity::V;
    if (t == spec.length) return Activity::A;
    return Activity::D;
  };
  auto planned_offset = [&](int t) { return layout.start_seconds + (t - 1) * layout.gap_minutes * 60; };

  timetable << kTimetableHeader << '\n';
  for (int t = 1; t <= spec.length; ++t) {
    timetable << spec.train_id << ',' << station_code(t) << ',' << to_string(activity(t)) << ','
              << format_clock_seconds(planned_offset(t)) << ',' << t << '\n';
  }

  realization << kRealizationHeader << '\n';
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& s = series[n];
    std::mt19937_64 rng(derive_seed(spec.seed ^ 0x5EC0DULL, n));
    std::uniform_int_distribution<int> jitter(-25, 25);
    const chr::sys_days day{parse_date(s.date)};
    for (std::size_t k = 0; k < s.delays.size(); ++k) {
      const int t = static_cast<int>(k) + 1;
      const Timestamp planned = day + chr::seconds{planned_offset(t)};
      const Timestamp realized = planned + chr::seconds{s.delays[k] * 60 + jitter(rng)};
      realization << s.train_id << ',' << s.date << ',' << station_code(t) << ',' << to_string(activity(t)) << ','
                  << format_timestamp(planned) << ',' << format_timestamp(realized) << '\n';
    }
  }
}

}  // namespace delaychain
