#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delaychain/core.hpp"

namespace delaychain {

// Likelihood-ratio and chi-square statistics of one order test together with
// the degrees of freedom computed on the zero-row/zero-column truncated
// count matrix.
struct OrderStatistics {
  double lr = 0.0;
  double q = 0.0;
  int df = 0;
};

// H0(0): p_{i,j}(t) = p_j(t). Requires t >= 2; throws UntestableError when
// no p_{i,j} row is defined.
OrderStatistics zero_order_statistics(const FrequencyEstimates& freq, const CountTensor& counts);

// H0(1): p_{h,i,j}(t) = p_{i,j}(t). Requires t >= 3; throws UntestableError
// when no p_{h,i,j} cell is defined.
OrderStatistics first_order_statistics(const FrequencyEstimates& freq, const CountTensor& counts);

// df0 = (|A(t-1)| - 1)(|A(t)| - 1), clamped at 0 for empty supports.
int zero_order_df(std::size_t prev_support, std::size_t support);
// df1 = (|A(t-2)| - 1)|A(t-1)|(|A(t)| - 1).
int first_order_df(std::size_t prev2_support, std::size_t prev_support, std::size_t support);

enum class TestStatistic { lr, q };
// `skipped` marks H0(1) when the ladder stopped after not rejecting H0(0).
enum class Verdict { not_rejected, rejected, untestable, skipped };

const char* to_string(TestStatistic statistic);
const char* to_string(Verdict verdict);
TestStatistic test_statistic_from_string(const std::string& text);

struct LadderVerdicts {
  Verdict order0 = Verdict::untestable;
  Verdict order1 = Verdict::skipped;
};

struct OrderTestReport {
  int station = 0;
  std::optional<OrderStatistics> order0;
  std::optional<OrderStatistics> order1;
  double alpha1 = 0.05;
  double alpha2 = 0.05;
  TestStatistic statistic = TestStatistic::q;
  LadderVerdicts lr_verdicts;
  LadderVerdicts q_verdicts;

  // Verdicts of the configured statistic.
  const LadderVerdicts& verdicts() const {
    return statistic == TestStatistic::q ? q_verdicts : lr_verdicts;
  }
};

// Sequential test: H0(0) is tested against the 1 - alpha1 chi-square quantile
// and only when rejected is H0(1) tested against the 1 - alpha2 quantile. Both
// LR and Q ladders are evaluated; `statistic` selects the primary one.
OrderTestReport markov_property_test(const CountTensor& counts, double alpha1, double alpha2,
                                     TestStatistic statistic = TestStatistic::q);

// Per-statistic rejection tallies over many stations.
struct RejectionTally {
  std::size_t reject_order0 = 0;
  std::size_t reject_order1 = 0;
  std::size_t untestable_order0 = 0;
};

struct MarkovTestSummary {
  std::size_t total_stations = 0;
  RejectionTally lr;
  RejectionTally q;

  void add(const OrderTestReport& report);
};

}  // namespace delaychain
