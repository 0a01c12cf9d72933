// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "delaychain/app/commands.hpp"
#include "delaychain/app/pipeline.hpp"
#include "delaychain/app/store.hpp"
#include "delaychain/chi_square.hpp"
#include "delaychain/evaluate.hpp"
#include "delaychain/forecast.hpp"
#include "delaychain/mctest.hpp"
#include "delaychain/recovery.hpp"
#include "delaychain/seed.hpp"
#include "delaychain/synth.hpp"

using namespace delaychain;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::vector<DelaySeries> paths_to_series(const std::vector<std::vector<int>>& paths) {
  std::vector<DelaySeries> out;
  for (const auto& p : paths) {
    DelaySeries s;
    s.train_id = "A";
    s.date = "2017-10-02";
    s.delays = p;
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome score_arithmetic() {
  const double a = total_score(0.56716, 0.57231, 2.88631);
  const double b = total_score(0.48485, 0.56947, 3.04482);
  const bool ok = std::abs(a - 5.64684) <= 1e-5 && std::abs(b - 4.65101) <= 1e-4;
  return {ok, fmt("%.6f (want 5.64684), %.6f (want 4.65101)", a, b)};
}

// Direct summation from value-keyed maps, independent of the count tensor.
struct DirectStats {
  double lr0 = 0, q0 = 0, lr1 = 0, q1 = 0;
};

DirectStats direct_stats(const std::vector<DelaySeries>& data, int t) {
  std::map<int, double> nj, ni;
  std::map<std::pair<int, int>, double> nij, nhi;
  std::map<std::tuple<int, int, int>, double> nhij;
  double total = 0;
  for (const auto& s : data) {
    const int j = s.delays[t - 1], i = s.delays[t - 2];
    total += 1;
    nj[j] += 1;
    ni[i] += 1;
    nij[{i, j}] += 1;
    if (t >= 3) {
      const int h = s.delays[t - 3];
      nhi[{h, i}] += 1;
      nhij[{h, i, j}] += 1;
    }
  }
  DirectStats d;
  for (const auto& [k, n] : nij) {
    const double pij = n / ni[k.first], pj = nj[k.second] / total;
    d.lr0 += 2 * n * std::log(pij / pj);
    d.q0 += ni[k.first] * (pij - pj) * (pij - pj) / pj;
  }
  for (const auto& [k, n] : nhij) {
    const auto [h, i, j] = k;
    const double phij = n / nhi[{h, i}], pij = nij[{i, j}] / ni[i];
    d.lr1 += 2 * n * std::log(phij / pij);
    d.q1 += nhi[{h, i}] * (phij - pij) * (phij - pij) / pij;
  }
  return d;
}

Outcome statistic_fixtures() {
  const StateSpace space(1);
  const double lr_want = 8.0 * std::log(2.0);
  const auto zero = paths_to_series({{0, 0}, {0, 0}, {1, 1}, {1, 1}});
  const CountTensor c0 = build_count_tensor(zero, 2, space);
  const auto s0 = zero_order_statistics(estimate_frequencies(c0), c0);
  const auto d0 = direct_stats(zero, 2);

  const auto first = paths_to_series({{0, 0, 0}, {0, 0, 0}, {1, 0, 1}, {1, 0, 1}});
  const CountTensor c1 = build_count_tensor(first, 3, space);
  const auto s1 = first_order_statistics(estimate_frequencies(c1), c1);
  const auto d1 = direct_stats(first, 3);

  const double tol = 1e-12;
  const bool ok = std::abs(s0.q - 2) <= tol && std::abs(s0.lr - lr_want) <= tol && s0.df == 1 &&
                  std::abs(d0.q0 - s0.q) <= tol && std::abs(d0.lr0 - s0.lr) <= tol &&
                  std::abs(s1.q - 2) <= tol && std::abs(s1.lr - lr_want) <= tol && s1.df == 1 &&
                  std::abs(d1.q1 - s1.q) <= tol && std::abs(d1.lr1 - s1.lr) <= tol;
  return {ok, fmt("q0=%.15g lr0=%.15g df0=%d | q1=%.15g lr1=%.15g df1=%d", s0.q, s0.lr, s0.df, s1.q, s1.lr,
                  s1.df)};
}

// Exact two-sided 99% acceptance band of Binomial(n, p).
std::pair<int, int> binomial_band(int n, double p, double level) {
  const double tail = (1.0 - level) / 2.0;
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p));
  }
  int lo = 0;
  double cdf = 0.0;
  while (cdf + pmf[lo] <= tail) cdf += pmf[lo++];
  int hi = n;
  double upper = 0.0;
  while (upper + pmf[hi] <= tail) upper += pmf[hi--];
  return {lo, hi};
}

constexpr int kReplications = 500;
constexpr int kSeries = 2000;
constexpr int kStations = 5;

struct RegimeRates {
  int reject0 = 0;
  int reject1 = 0;
};

RegimeRates run_regime(GeneratorClass generator) {
  const StateSpace space(1);
  std::vector<LadderVerdicts> verdicts(kReplications);
  app::parallel_for(kReplications, std::max(1u, std::thread::hardware_concurrency()),
                    [&](std::size_t r) {
                      const std::uint64_t seed = derive_seed(2024 + static_cast<int>(generator), r);
                      ChainSpec spec;
                      switch (generator) {
                        case GeneratorClass::order0: spec = random_order0_spec(space, kStations, seed); break;
                        case GeneratorClass::order1: spec = random_order1_spec(space, kStations, 1.0, seed); break;
                        case GeneratorClass::order2: spec = random_order2_spec(space, kStations, 1.0, seed); break;
                      }
                      const auto data = sample_series(spec, kSeries);
                      const auto counts = build_count_tensor(data, kStations, space);
                      verdicts[r] = markov_property_test(counts, 0.05, 0.05, TestStatistic::q).q_verdicts;
                    });
  RegimeRates rates;
  for (const auto& v : verdicts) {
    rates.reject0 += v.order0 == Verdict::rejected;
    rates.reject1 += v.order1 == Verdict::rejected;
  }
  return rates;
}

Outcome order_test_power() {
  const auto band = binomial_band(kReplications, 0.05, 0.99);
  const auto r0 = run_regime(GeneratorClass::order0);
  const auto r1 = run_regime(GeneratorClass::order1);
  const auto r2 = run_regime(GeneratorClass::order2);
  const double n = kReplications;
  const bool size_ok = r0.reject0 >= band.first && r0.reject0 <= band.second;
  const bool order1_ok = r1.reject0 / n >= 0.95 && r1.reject1 / n <= 0.10;
  const bool order2_ok = r2.reject1 / n >= 0.90;
  return {size_ok && order1_ok && order2_ok,
          fmt("order0: H0(0) %d/%d in [%d,%d]; order1: H0(0) %.3f, H0(1) %.3f; order2: H0(1) %.3f", r0.reject0,
              kReplications, band.first, band.second, r1.reject0 / n, r1.reject1 / n, r2.reject1 / n)};
}

Outcome kde_convergence() {
  const StateSpace space(15);
  const auto spec = near_diagonal_spec(space, 2, 1.0, 31);
  const auto data = sample_series(spec, 100000);
  const auto obs = transition_observations(data, 2);
  const auto m1 = kde_matrix(kde_fit(obs, 0.1, 77), space);
  const auto m2 = kde_matrix(kde_fit(obs, 0.1, 77), space);
  const auto& truth = spec.matrices[0];
  double worst_tv = 0.0, worst_sum = 0.0;
  int worst_row = 0;
  bool identical = true;
  for (std::size_t i = 0; i < space.cardinality(); ++i) {
    double tv = 0.0, sum = 0.0;
    for (std::size_t j = 0; j < space.cardinality(); ++j) {
      tv += 0.5 * std::abs(m1(i, j) - truth(i, j));
      sum += m1(i, j);
      identical = identical && m1(i, j) == m2(i, j);
    }
    if (tv > worst_tv) {
      worst_tv = tv;
      worst_row = space.value(i);
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  return {worst_tv <= 0.1 && worst_sum <= 1e-9 && identical,
          fmt("max row TV %.4f (row %d), max |row sum - 1| %.2e, deterministic %s", worst_tv, worst_row, worst_sum,
              identical ? "yes" : "no")};
}

// Sparse benchmark: delays start clustered near on-time (sd 3), so outer rows
// are rarely or never observed in the 200 training series. Strategies are
// scored on held-out series from the same chain, S = 1 and T from the
// 20-minute horizon.
Outcome recovery_ranking() {
  const StateSpace space(15);
  constexpr int kLength = 8;
  auto spec = near_diagonal_spec(space, kLength, 1.0, 1234);
  spec.initial = discretized_gaussian(space, 0.0, 3.0);
  const auto all = sample_series(spec, 200 + 2000);
  const std::vector<DelaySeries> training(all.begin(), all.begin() + 200);
  const std::vector<DelaySeries> held_out(all.begin() + 200, all.end());

  JourneyTemplate journey{spec.train_id, "all", {}};
  for (int t = 1; t <= kLength; ++t) {
    journey.stops.push_back({{"ST" + std::to_string(t), Activity::D}, 8 * 3600 + (t - 1) * 7 * 60});
  }
  app::RunConfig config;
  config.seed = 99;
  const app::TrainGroup train_group{journey, training};
  const auto cases = app::build_cases({app::TrainGroup{journey, held_out}}, app::Selection{}, config).cases;

  std::map<std::string, double> scores;
  std::string detail;
  for (auto strategy : {RecoveryStrategy::gaussian_kernel, RecoveryStrategy::diagonal, RecoveryStrategy::uniform,
                        RecoveryStrategy::gaussian_regression}) {
    config.strategy = strategy;
    app::MatrixBundle bundle;
    bundle.n_max = space.n_max();
    bundle.templates.push_back(journey);
    bundle.chains.push_back(app::train_chain(train_group, config));
    const auto r = app::evaluate_bundle(bundle, cases, config, to_string(strategy));
    scores[r.method] = r.total;
    detail += fmt("%s %.4f; ", r.method.c_str(), r.total);
  }
  app::MatrixBundle truth;  // the generating matrices, for reference only
  truth.n_max = space.n_max();
  truth.templates.push_back(journey);
  app::TrainedChain exact;
  exact.train_id = spec.train_id;
  exact.series_count = training.size();
  exact.matrices = spec.matrices;
  truth.chains.push_back(exact);
  detail += fmt("true matrices %.4f; ", app::evaluate_bundle(truth, cases, config, "truth").total);
  const double kernel = scores["gaussian_kernel"];
  const bool ok = kernel >= scores["diagonal"] && kernel >= scores["uniform"] &&
                  kernel >= scores["gaussian_regression"];
  detail += fmt("T=%d, %zu cases", cases.front().target, cases.size());
  return {ok, detail};
}

Outcome propagation_oracle() {
  const StateSpace space(1);
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_matrix = [&](const StateSpace& sp, int station) {
    TransitionMatrix m(sp, station);
    for (std::size_t i = 0; i < sp.cardinality(); ++i) {
      std::vector<double> row(sp.cardinality());
      double total = 0.0;
      for (auto& v : row) total += (v = std::pow(u(rng), 3.0));
      for (auto& v : row) v /= total;
      m.set_row(i, row, RowStatus::observed);
    }
    return m;
  };
  std::vector<TransitionMatrix> ms;
  for (int t = 2; t <= 6; ++t) ms.push_back(random_matrix(space, t));
  DelayDistribution v0{space, 1, {0.3, 0.45, 0.25}};

  std::vector<double> paths(3, 0.0);
  for (int code = 0; code < 729; ++code) {  // 3^6 paths s0..s5
    int s[6], c = code;
    for (int& x : s) {
      x = c % 3;
      c /= 3;
    }
    double p = v0.probs[s[0]];
    for (int k = 0; k < 5; ++k) p *= ms[k](s[k], s[k + 1]);
    paths[s[5]] += p;
  }
  const auto v = propagate(v0, ms);
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(v.probs[j] - paths[j]));

  const StateSpace big(15);
  std::uniform_int_distribution<int> steps(1, 10), start(-15, 15);
  double worst_norm = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<TransitionMatrix> chain;
    const int n = steps(rng);
    for (int k = 0; k < n; ++k) chain.push_back(random_matrix(big, k + 2));
    const auto w = propagate(point_delay(start(rng), big), chain);
    double total = 0.0;
    for (double p : w.probs) total += p;
    worst_norm = std::max(worst_norm, std::abs(total - 1.0));
  }
  return {worst <= 1e-12 && worst_norm <= 1e-9,
          fmt("path enumeration max error %.2e; 1000 fuzzed products max |sum - 1| %.2e", worst, worst_norm)};
}

Outcome rwmse_validity() {
  const double hand = rwmse(std::vector<double>{1, 5}, std::vector<double>{0, 3});
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> delay(-15, 15), len(2, 500);
  double worst = 0.0;
  int batches = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    std::vector<double> actual(static_cast<std::size_t>(len(rng)));
    for (auto& d : actual) d = delay(rng) / (rep % 3 == 0 ? 5 : 1);
    const auto w = rwmse_weights(actual);
    if (w.small_count == 0 || w.large_count == 0) continue;
    ++batches;
    double mass = 0.0;
    for (double d : actual) mass += w.weight_for(d);
    worst = std::max(worst, std::abs(mass - 1.0));
  }
  return {std::abs(hand - 1.3416) <= 1e-4 && worst <= 1e-12,
          fmt("hand case %.6f (sqrt(1.8)); %d mixed batches, max |sum w - 1| %.2e", hand, batches, worst)};
}

double cdf_quadrature(double x, int df) {
  // x = u^2 removes the df = 1 singularity; composite Simpson on u.
  const double k = df;
  const double log_norm = (k / 2.0) * std::log(2.0) + std::lgamma(k / 2.0);
  auto g = [&](double u) {
    if (u == 0.0) return df == 1 ? 2.0 * std::exp(-log_norm) : 0.0;
    return 2.0 * std::exp((k - 1.0) * std::log(u) - u * u / 2.0 - log_norm);
  };
  const int n = 4000;
  const double h = std::sqrt(x) / n;
  double sum = g(0.0) + g(std::sqrt(x));
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return sum * h / 3.0;
}

Outcome chi_square_functions() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> p(0.001, 0.999);
  std::uniform_int_distribution<int> df(1, 200);
  double worst_round = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double q = p(rng);
    const int k = df(rng);
    worst_round = std::max(worst_round, std::abs(chi_square_cdf(chi_square_quantile(q, k), k) - q));
  }
  double worst_quad = 0.0;
  for (auto [x, k] : {std::pair{3.841, 1}, {11.070, 5}, {18.307, 10}}) {
    worst_quad = std::max(worst_quad, std::abs(chi_square_cdf(x, k) - cdf_quadrature(x, k)));
  }
  return {worst_round <= 1e-9 && worst_quad <= 1e-3,
          fmt("round trip max error %.2e over 100 draws; quadrature max error %.2e", worst_round, worst_quad)};
}

// synth -> ingest -> test -> train -> evaluate in a fresh directory.
std::map<std::string, std::string> pipeline_run(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "delaychain");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    const int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) throw std::runtime_error("command failed: " + args[1] + ": " + err.str());
  };
  const std::string d = dir.string();
  run({"synth", "--seed", "2024", "--count", "150", "--length", "9", "--out-dir", d + "/raw"});
  run({"ingest", "--timetable", d + "/raw/timetable.csv", "--realization", d + "/raw/realization.csv", "--out",
       d + "/store.json"});
  run({"test", "--store", d + "/store.json", "--out", d + "/test.json", "--csv", d + "/test.csv"});
  run({"train", "--store", d + "/store.json", "--seed", "2024", "--date-to", "2017-12-31", "--out",
       d + "/bundle.json"});
  run({"evaluate", "--store", d + "/store.json", "--bundle", d + "/bundle.json", "--baseline", "naive,marginal",
       "--date-from", "2018-01-01", "--out", d + "/eval.json", "--csv", d + "/eval.csv"});
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = app::read_file(entry.path());
  }
  return files;
}

Outcome end_to_end_determinism() {
  const fs::path base = fs::temp_directory_path() / "delaychain_acceptance";
  const auto first = pipeline_run(base / "run1");
  const auto second = pipeline_run(base / "run2");
  fs::remove_all(base);
  std::size_t bytes = 0;
  for (const auto& [name, content] : first) bytes += content.size();
  return {first == second && !first.empty(),
          fmt("%zu artifacts, %zu bytes, identical: %s", first.size(), bytes, first == second ? "yes" : "no")};
}

}  // namespace

int main() {
  report("score_arithmetic", score_arithmetic);
  report("statistic_fixtures", statistic_fixtures);
  report("order_test_power_size", order_test_power);
  report("kde_convergence", kde_convergence);
  report("recovery_ranking", recovery_ranking);
  report("propagation_oracle", propagation_oracle);
  report("rwmse_validity", rwmse_validity);
  report("chi_square_functions", chi_square_functions);
  report("end_to_end_determinism", end_to_end_determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
