#include "delaychain/mctest.hpp"

#include <cmath>

#include "delaychain/chi_square.hpp"
#include "delaychain/error.hpp"

namespace delaychain {

int zero_order_df(std::size_t prev_support, std::size_t support) {
  if (prev_support == 0 || support == 0) return 0;
  return static_cast<int>((prev_support - 1) * (support - 1));
}

int first_order_df(std::size_t prev2_support, std::size_t prev_support, std::size_t support) {
  if (prev2_support == 0 || support == 0) return 0;
  return static_cast<int>((prev2_support - 1) * prev_support * (support - 1));
}

OrderStatistics zero_order_statistics(const FrequencyEstimates& freq, const CountTensor& counts) {
  if (counts.station() < 2) throw UntestableError("zero-order test needs t >= 2");
  if (freq.support_prev.empty()) throw UntestableError("no defined transition row at t");

  OrderStatistics out;
  const std::size_t k = counts.size();
  for (std::size_t i : freq.support_prev) {
    const auto n_prev = static_cast<double>(counts.row_total(i));
    for (std::size_t j = 0; j < k; ++j) {
      const double p_ij = freq.p2_at(i, j);
      if (p_ij == 0.0) continue;
      const double p_j = freq.p1[j];
      out.lr += 2.0 * static_cast<double>(counts.n2(i, j)) * std::log(p_ij / p_j);
      const double diff = p_ij - p_j;
      out.q += n_prev * diff * diff / p_j;
    }
  }
  out.df = zero_order_df(freq.support_prev.size(), freq.support_t.size());
  return out;
}

OrderStatistics first_order_statistics(const FrequencyEstimates& freq, const CountTensor& counts) {
  if (counts.station() < 3) throw UntestableError("first-order test needs t >= 3");

  OrderStatistics out;
  bool any_cell = false;
  const std::size_t k = counts.size();
  for (std::size_t h : freq.support_prev2) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!freq.p3_defined(h, i)) continue;
      const auto n_hi = static_cast<double>(counts.pair_count(h, i));
      for (std::size_t j = 0; j < k; ++j) {
        const double p_hij = freq.p3_at(h, i, j);
        if (p_hij == 0.0) continue;
        any_cell = true;
        const double p_ij = freq.p2_at(i, j);
        out.lr += 2.0 * static_cast<double>(counts.n3(h, i, j)) * std::log(p_hij / p_ij);
        const double diff = p_hij - p_ij;
        out.q += n_hi * diff * diff / p_ij;
      }
    }
  }
  if (!any_cell) throw UntestableError("no defined second-order cell at t");
  out.df = first_order_df(freq.support_prev2.size(), freq.support_prev.size(), freq.support_t.size());
  return out;
}

const char* to_string(TestStatistic statistic) {
  return statistic == TestStatistic::lr ? "LR" : "Q";
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::not_rejected: return "not_rejected";
    case Verdict::rejected: return "rejected";
    case Verdict::untestable: return "untestable";
    case Verdict::skipped: return "skipped";
  }
  return "untestable";
}

TestStatistic test_statistic_from_string(const std::string& text) {
  if (text == "Q" || text == "q") return TestStatistic::q;
  if (text == "LR" || text == "lr") return TestStatistic::lr;
  throw ParseError("unknown test statistic '" + text + "'");
}

namespace {

Verdict decide(double statistic, int df, double alpha) {
  if (df <= 0) return Verdict::untestable;
  return statistic < chi_square_quantile(1.0 - alpha, df) ? Verdict::not_rejected
                                                          : Verdict::rejected;
}

}  // namespace

OrderTestReport markov_property_test(const CountTensor& counts, double alpha1, double alpha2,
                                     TestStatistic statistic) {
  if (!(alpha1 > 0.0 && alpha1 < 1.0) || !(alpha2 > 0.0 && alpha2 < 1.0)) {
    throw DomainError("significance levels must lie in (0, 1)");
  }

  OrderTestReport report;
  report.station = counts.station();
  report.alpha1 = alpha1;
  report.alpha2 = alpha2;
  report.statistic = statistic;

  if (counts.station() < 2) return report;
  const FrequencyEstimates freq = estimate_frequencies(counts);
  if (freq.support_prev.empty()) return report;

  report.order0 = zero_order_statistics(freq, counts);
  report.lr_verdicts.order0 = decide(report.order0->lr, report.order0->df, alpha1);
  report.q_verdicts.order0 = decide(report.order0->q, report.order0->df, alpha1);

  const bool needs_order1 = report.lr_verdicts.order0 == Verdict::rejected ||
                            report.q_verdicts.order0 == Verdict::rejected;
  if (!needs_order1) return report;

  std::optional<OrderStatistics> order1;
  if (counts.station() >= 3 && counts.triple_total() > 0) {
    order1 = first_order_statistics(freq, counts);
  }
  report.order1 = order1;

  auto second_rung = [&](Verdict first, double value) {
    if (first != Verdict::rejected) return Verdict::skipped;
    if (!order1) return Verdict::untestable;
    return decide(value, order1->df, alpha2);
  };
  report.lr_verdicts.order1 = second_rung(report.lr_verdicts.order0, order1 ? order1->lr : 0.0);
  report.q_verdicts.order1 = second_rung(report.q_verdicts.order0, order1 ? order1->q : 0.0);
  return report;
}

void MarkovTestSummary::add(const OrderTestReport& report) {
  ++total_stations;
  auto tally = [](RejectionTally& t, const LadderVerdicts& v) {
    if (v.order0 == Verdict::rejected) ++t.reject_order0;
    if (v.order0 == Verdict::untestable) ++t.untestable_order0;
    if (v.order1 == Verdict::rejected) ++t.reject_order1;
  };
  tally(lr, report.lr_verdicts);
  tally(q, report.q_verdicts);
}

}  // namespace delaychain
