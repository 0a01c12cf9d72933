#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "delaychain/chi_square.hpp"
#include "delaychain/error.hpp"
#include "delaychain/mctest.hpp"
#include "delaychain/synth.hpp"
#include "test_util.hpp"

using namespace delaychain;

namespace {

struct Direct {
  double lr0 = 0, q0 = 0, lr1 = 0, q1 = 0;
  int df0 = 0, df1 = 0;
};

// Statistics straight from delay triples, sharing no code with the library:
// frequencies come from maps keyed by delay values.
Direct direct_statistics(const std::vector<DelaySeries>& data, int t) {
  std::map<int, double> n_j, n_i, n_h;
  std::map<std::pair<int, int>, double> n_ij, n_hi;
  std::map<std::tuple<int, int, int>, double> n_hij;
  double total = 0;
  for (const auto& s : data) {
    if (static_cast<int>(s.length()) < t) continue;
    const int j = s.at_station(t), i = s.at_station(t - 1);
    total += 1;
    n_j[j] += 1;
    n_i[i] += 1;
    n_ij[{i, j}] += 1;
    if (t >= 3) {
      const int h = s.at_station(t - 2);
      n_h[h] += 1;
      n_hi[{h, i}] += 1;
      n_hij[{h, i, j}] += 1;
    }
  }
  Direct d;
  for (const auto& [key, n] : n_ij) {
    const auto [i, j] = key;
    const double p_ij = n / n_i[i];
    const double p_j = n_j[j] / total;
    d.lr0 += 2 * n * std::log(p_ij / p_j);
    d.q0 += n_i[i] * (p_ij - p_j) * (p_ij - p_j) / p_j;
  }
  for (const auto& [key, n] : n_hij) {
    const auto [h, i, j] = key;
    const double p_hij = n / n_hi[{h, i}];
    const double p_ij = n_ij[{i, j}] / n_i[i];
    d.lr1 += 2 * n * std::log(p_hij / p_ij);
    d.q1 += n_hi[{h, i}] * (p_hij - p_ij) * (p_hij - p_ij) / p_ij;
  }
  const int a_t = static_cast<int>(n_j.size());
  const int a_prev = static_cast<int>(n_i.size());
  const int a_prev2 = static_cast<int>(n_h.size());
  d.df0 = (a_prev - 1) * (a_t - 1);
  d.df1 = (a_prev2 - 1) * a_prev * (a_t - 1);
  return d;
}

std::vector<DelaySeries> repeat(const std::vector<std::pair<std::vector<int>, int>>& paths) {
  std::vector<std::vector<int>> out;
  for (const auto& [p, n] : paths) {
    for (int k = 0; k < n; ++k) out.push_back(p);
  }
  return testutil::batch(out);
}

}  // namespace

TEST(OrderStatistics, ZeroOrderHandCase) {
  // n_{i,j}(2) = [[2, 0], [0, 2]] over the states {0, 1}.
  const StateSpace space(1);
  const auto data = repeat({{{0, 0}, 2}, {{1, 1}, 2}});
  const CountTensor counts = build_count_tensor(data, 2, space);
  const auto s = zero_order_statistics(estimate_frequencies(counts), counts);
  const Direct d = direct_statistics(data, 2);
  EXPECT_NEAR(s.q, 2.0, 1e-12);
  EXPECT_NEAR(s.lr, 8.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(s.df, 1);
  EXPECT_NEAR(d.q0, 2.0, 1e-12);
  EXPECT_NEAR(d.lr0, 8.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(d.df0, 1);
}

TEST(OrderStatistics, FirstOrderHandCase) {
  // (h, i, j) = (0, 0, 0) twice and (1, 0, 1) twice.
  const StateSpace space(1);
  const auto data = repeat({{{0, 0, 0}, 2}, {{1, 0, 1}, 2}});
  const CountTensor counts = build_count_tensor(data, 3, space);
  const auto s = first_order_statistics(estimate_frequencies(counts), counts);
  const Direct d = direct_statistics(data, 3);
  EXPECT_NEAR(s.q, 2.0, 1e-12);
  EXPECT_NEAR(s.lr, 8.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(s.df, 1);
  EXPECT_NEAR(d.q1, 2.0, 1e-12);
  EXPECT_NEAR(d.lr1, 8.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(d.df1, 1);
}

TEST(OrderStatistics, MatchDirectSummationOnRandomSparseData) {
  const StateSpace space(4);
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> delay(-4, 4);
  std::uniform_int_distribution<int> walk(-1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<int>> paths;
    for (int n = 0; n < 60; ++n) {
      std::vector<int> p{delay(rng)};
      for (int t = 1; t < 4; ++t) p.push_back(space.clip(p.back() + walk(rng)));
      paths.push_back(p);
    }
    const auto data = testutil::batch(paths);
    for (int t = 3; t <= 4; ++t) {
      const CountTensor counts = build_count_tensor(data, t, space);
      const auto freq = estimate_frequencies(counts);
      const auto s0 = zero_order_statistics(freq, counts);
      const auto s1 = first_order_statistics(freq, counts);
      const Direct d = direct_statistics(data, t);
      EXPECT_NEAR(s0.lr, d.lr0, 1e-9 * std::max(1.0, d.lr0));
      EXPECT_NEAR(s0.q, d.q0, 1e-9 * std::max(1.0, d.q0));
      EXPECT_NEAR(s1.lr, d.lr1, 1e-9 * std::max(1.0, d.lr1));
      EXPECT_NEAR(s1.q, d.q1, 1e-9 * std::max(1.0, d.q1));
      EXPECT_EQ(s0.df, d.df0);
      EXPECT_EQ(s1.df, d.df1);
    }
  }
}

TEST(OrderStatistics, DegreesOfFreedomFromTruncatedSupport) {
  EXPECT_EQ(zero_order_df(3, 4), 6);
  EXPECT_EQ(zero_order_df(1, 4), 0);
  EXPECT_EQ(zero_order_df(0, 0), 0);
  EXPECT_EQ(first_order_df(3, 2, 4), 12);
  EXPECT_EQ(first_order_df(1, 5, 5), 0);
  // Zero rows and columns of the 31-state matrix do not count.
  const StateSpace space;
  const auto data = repeat({{{0, 0}, 3}, {{0, 5}, 1}, {{2, 5}, 2}, {{-7, 0}, 1}});
  const auto f = estimate_frequencies(build_count_tensor(data, 2, space));
  EXPECT_EQ(f.support_prev.size(), 3u);
  EXPECT_EQ(f.support_t.size(), 2u);
  EXPECT_EQ(zero_order_statistics(f, build_count_tensor(data, 2, space)).df, 2);
}

TEST(OrderStatistics, UntestableCases) {
  const StateSpace space(1);
  const CountTensor empty(space, 3);
  const auto f = estimate_frequencies(empty);
  EXPECT_THROW(zero_order_statistics(f, empty), UntestableError);
  EXPECT_THROW(first_order_statistics(f, empty), UntestableError);
  const CountTensor first(space, 1);
  EXPECT_THROW(zero_order_statistics(estimate_frequencies(first), first), UntestableError);
}

TEST(Ladder, StopsAfterNonRejection) {
  // Independent columns: p_{i,j} = p_j exactly.
  const StateSpace space(1);
  const auto data = repeat({{{0, 0, 0}, 5}, {{0, 0, 1}, 5}, {{0, 1, 0}, 5}, {{0, 1, 1}, 5}});
  const auto r = markov_property_test(build_count_tensor(data, 3, space), 0.05, 0.05);
  ASSERT_TRUE(r.order0.has_value());
  EXPECT_NEAR(r.order0->q, 0.0, 1e-12);
  EXPECT_EQ(r.verdicts().order0, Verdict::not_rejected);
  EXPECT_EQ(r.verdicts().order1, Verdict::skipped);
  EXPECT_FALSE(r.order1.has_value());
}

TEST(Ladder, RejectsDependenceAndTestsOrderOne) {
  const StateSpace space(1);
  const auto data = repeat({{{0, 0, 0}, 40}, {{1, 1, 1}, 40}, {{0, 1, 1}, 40}, {{1, 0, 0}, 40}});
  const auto r = markov_property_test(build_count_tensor(data, 3, space), 0.05, 0.05);
  EXPECT_EQ(r.q_verdicts.order0, Verdict::rejected);
  EXPECT_EQ(r.lr_verdicts.order0, Verdict::rejected);
  ASSERT_TRUE(r.order1.has_value());
  // D(3) is a function of D(2), so the second lag adds nothing.
  EXPECT_NEAR(r.order1->q, 0.0, 1e-12);
  EXPECT_EQ(r.verdicts().order1, Verdict::not_rejected);
}

TEST(Ladder, ThresholdIsTheChiSquareQuantile) {
  // Q0 = 2 with df 1: rejected at alpha = 0.2 (critical 1.64), kept at 0.05 (3.84).
  const StateSpace space(1);
  const auto data = repeat({{{0, 0}, 2}, {{1, 1}, 2}});
  const CountTensor counts = build_count_tensor(data, 2, space);
  EXPECT_EQ(markov_property_test(counts, 0.2, 0.05).q_verdicts.order0, Verdict::rejected);
  EXPECT_EQ(markov_property_test(counts, 0.05, 0.05).q_verdicts.order0, Verdict::not_rejected);
  // LR0 = 5.545 exceeds 3.84, so the LR ladder rejects and hits t = 2.
  const auto r = markov_property_test(counts, 0.05, 0.05, TestStatistic::lr);
  EXPECT_EQ(r.verdicts().order0, Verdict::rejected);
  EXPECT_EQ(r.verdicts().order1, Verdict::untestable);
  EXPECT_THROW(markov_property_test(counts, 0.0, 0.05), DomainError);
}

TEST(Ladder, SingleStateIsUntestable) {
  const StateSpace space(1);
  const auto data = repeat({{{0, 0}, 10}});
  const auto r = markov_property_test(build_count_tensor(data, 2, space), 0.05, 0.05);
  EXPECT_EQ(r.verdicts().order0, Verdict::untestable);
}

TEST(Summary, TalliesBothStatistics) {
  MarkovTestSummary summary;
  OrderTestReport a;
  a.q_verdicts = {Verdict::rejected, Verdict::rejected};
  a.lr_verdicts = {Verdict::rejected, Verdict::not_rejected};
  OrderTestReport b;
  b.q_verdicts = {Verdict::untestable, Verdict::skipped};
  b.lr_verdicts = {Verdict::not_rejected, Verdict::skipped};
  summary.add(a);
  summary.add(b);
  EXPECT_EQ(summary.total_stations, 2u);
  EXPECT_EQ(summary.q.reject_order0, 1u);
  EXPECT_EQ(summary.q.reject_order1, 1u);
  EXPECT_EQ(summary.q.untestable_order0, 1u);
  EXPECT_EQ(summary.lr.reject_order1, 0u);
}

TEST(Ladder, FirstOrderChainRejectsIndependence) {
  const StateSpace space(1);
  const auto spec = random_order1_spec(space, 4, 0.3, 8);
  const auto data = sample_series(spec, 3000);
  const auto r = markov_property_test(build_count_tensor(data, 4, space), 0.05, 0.05);
  EXPECT_EQ(r.verdicts().order0, Verdict::rejected);
}
