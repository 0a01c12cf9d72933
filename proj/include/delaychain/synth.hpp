#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "delaychain/core.hpp"
#include "delaychain/ingest.hpp"

namespace delaychain {

enum class GeneratorClass { order0, order1, order2 };

const char* to_string(GeneratorClass generator);
GeneratorClass generator_class_from_string(const std::string& text);

// Ground-truth chain. Which tables are used depends on the generator:
//   order0: marginals[t-1] is the law of D(t) for every t;
//   order1: initial, then matrices[t-2] = P(t) for t = 2..length;
//   order2: initial, matrices[0] = P(2), then second_order[t-3] holds
//           rows keyed by (h, i) at index (h*K + i)*K + j for t >= 3.
struct ChainSpec {
  StateSpace space;
  int length = 2;
  GeneratorClass generator = GeneratorClass::order1;
  std::vector<double> initial;
  std::vector<TransitionMatrix> matrices;
  std::vector<std::vector<double>> marginals;
  std::vector<std::vector<double>> second_order;
  std::uint64_t seed = 0;
  std::string train_id = "synth";

  // Throws DomainError if a table is missing or not row-stochastic (1e-12).
  void validate() const;
};

// Deterministic given spec.seed; series k draws from its own split stream.
// Dates count up from 2017-09-04 in series order.
std::vector<DelaySeries> sample_series(const ChainSpec& spec, std::size_t count);

// Rows are discretized Gaussians centered at the row state with the given
// dispersion, identical at every station. Initial law defaults to uniform.
ChainSpec near_diagonal_spec(const StateSpace& space, int length, double dispersion, std::uint64_t seed);

// Random strictly positive stochastic tables of each order, with rows drawn
// from a Dirichlet(concentration) law. Small concentrations give strongly
// state-dependent rows.
ChainSpec random_order0_spec(const StateSpace& space, int length, std::uint64_t seed);
ChainSpec random_order1_spec(const StateSpace& space, int length, double concentration, std::uint64_t seed);
ChainSpec random_order2_spec(const StateSpace& space, int length, double concentration, std::uint64_t seed);

// Writes a timetable and realization CSV pair for the series: one template
// with stations "ST01".. spaced `gap_minutes` apart from 08:00:00, and
// realized times equal to planned + delay minutes plus a sub-rounding
// second offset.
struct SyntheticTimetable {
  int gap_minutes = 7;
  int start_seconds = 8 * 3600;
};

void write_synthetic_csv(std::ostream& timetable, std::ostream& realization, const ChainSpec& spec,
                         const std::vector<DelaySeries>& series, const SyntheticTimetable& layout = {});

}  // namespace delaychain
