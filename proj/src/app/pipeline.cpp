#include "delaychain/app/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "delaychain/error.hpp"
#include "delaychain/seed.hpp"

namespace delaychain::app {

using nlohmann::json;

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<TrainGroup> select_groups(const SeriesStore& store, const Selection& selection, bool invert_dates) {
  std::vector<TrainGroup> groups;
  for (const auto& journey : store.templates) {
    if (!selection.accepts_template(journey)) continue;
    TrainGroup group{journey, {}};
    for (const auto& s : store.series) {
      if (s.train_id != journey.train_id || s.service_class != journey.service_class) continue;
      if (selection.accepts_date(s.date) != invert_dates) group.series.push_back(s);
    }
    if (!group.series.empty()) groups.push_back(std::move(group));
  }
  std::sort(groups.begin(), groups.end(), [](const TrainGroup& a, const TrainGroup& b) {
    return std::tie(a.journey.train_id, a.journey.service_class) <
           std::tie(b.journey.train_id, b.journey.service_class);
  });
  return groups;
}

namespace {

std::string group_key(const std::string& train_id, const std::string& service_class) {
  return train_id + "/" + service_class;
}

// One unit of per-station work.
struct StationJob {
  std::size_t group = 0;
  int station = 0;
};

std::vector<StationJob> station_jobs(const std::vector<TrainGroup>& groups) {
  std::vector<StationJob> jobs;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int t = 2; t <= static_cast<int>(groups[g].journey.length()); ++t) jobs.push_back({g, t});
  }
  return jobs;
}

json stats_json(const std::optional<OrderStatistics>& s) {
  if (!s) return nullptr;
  return {{"lr", s->lr}, {"q", s->q}, {"df", s->df}};
}

json ladder_json(const LadderVerdicts& v) {
  return {{"order0", to_string(v.order0)}, {"order1", to_string(v.order1)}};
}

json tally_json(const RejectionTally& t) {
  return {{"reject_h0_order0", t.reject_order0},
          {"reject_h0_order1", t.reject_order1},
          {"untestable_order0", t.untestable_order0}};
}

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

}  // namespace

MarkovReport run_markov_tests(const std::vector<TrainGroup>& groups, const RunConfig& config) {
  const StateSpace space = config.space();
  const auto jobs = station_jobs(groups);
  std::vector<StationTestRecord> records(jobs.size());
  parallel_for(jobs.size(), config.worker_count(), [&](std::size_t k) {
    const auto& group = groups[jobs[k].group];
    const CountTensor counts = build_count_tensor(group.series, jobs[k].station, space);
    records[k] = StationTestRecord{group.journey.train_id, group.journey.service_class, counts.series_counted(),
                                   markov_property_test(counts, config.alpha1, config.alpha2, config.statistic)};
  });

  MarkovReport report;
  report.statistic = config.statistic;
  report.alpha1 = config.alpha1;
  report.alpha2 = config.alpha2;
  for (const auto& r : records) report.summary.add(r.report);
  report.stations = std::move(records);
  return report;
}

std::string markov_report_json(const MarkovReport& report) {
  json stations = json::array();
  for (const auto& r : report.stations) {
    stations.push_back({{"train_id", r.train_id},
                        {"service_class", r.service_class},
                        {"t", r.report.station},
                        {"series", r.series_count},
                        {"order0", stats_json(r.report.order0)},
                        {"order1", stats_json(r.report.order1)},
                        {"verdicts", ladder_json(r.report.verdicts())},
                        {"lr_verdicts", ladder_json(r.report.lr_verdicts)},
                        {"q_verdicts", ladder_json(r.report.q_verdicts)}});
  }
  const auto& primary = report.statistic == TestStatistic::q ? report.summary.q : report.summary.lr;
  json aggregate = {{"statistic", to_string(report.statistic)},
                    {"total_stations", report.summary.total_stations},
                    {"reject_h0_order0", primary.reject_order0},
                    {"reject_h0_order1", primary.reject_order1},
                    {"untestable_order0", primary.untestable_order0},
                    {"lr", tally_json(report.summary.lr)},
                    {"q", tally_json(report.summary.q)}};
  json doc = {{"alpha1", report.alpha1}, {"alpha2", report.alpha2}, {"aggregate", aggregate}, {"stations", stations}};
  return doc.dump(2) + "\n";
}

std::string markov_report_csv(const MarkovReport& report) {
  std::ostringstream out;
  out << "train_id,service_class,t,series,lr0,q0,df0,lr1,q1,df1,verdict0,verdict1\n";
  for (const auto& r : report.stations) {
    const auto& o0 = r.report.order0;
    const auto& o1 = r.report.order1;
    out << r.train_id << ',' << r.service_class << ',' << r.report.station << ',' << r.series_count << ','
        << (o0 ? fmt_double(o0->lr) : "") << ',' << (o0 ? fmt_double(o0->q) : "") << ','
        << (o0 ? std::to_string(o0->df) : "") << ',' << (o1 ? fmt_double(o1->lr) : "") << ','
        << (o1 ? fmt_double(o1->q) : "") << ',' << (o1 ? std::to_string(o1->df) : "") << ','
        << to_string(r.report.verdicts().order0) << ',' << to_string(r.report.verdicts().order1) << '\n';
  }
  return out.str();
}

namespace {

RecoveryOptions station_options(const RunConfig& config, const std::string& key, int t) {
  RecoveryOptions options;
  options.strategy = config.strategy;
  options.epsilon = config.epsilon;
  options.regression_std = config.regression_std;
  options.seed = derive_seed(config.seed, key, t);
  return options;
}

struct StationResult {
  std::optional<TransitionMatrix> matrix;
  Warnings warnings;
};

StationResult train_station(const TrainGroup& group, int t, const RunConfig& config) {
  const StateSpace space = config.space();
  const std::string key = group_key(group.journey.train_id, group.journey.service_class);
  const CountTensor counts = build_count_tensor(group.series, t, space);
  const auto observations = transition_observations(group.series, t);
  StationResult result;
  result.matrix = recover_matrix(counts, observations, station_options(config, key, t), &result.warnings);
  return result;
}

TrainedChain assemble_chain(const TrainGroup& group, std::vector<StationResult>& stations) {
  TrainedChain chain;
  chain.train_id = group.journey.train_id;
  chain.service_class = group.journey.service_class;
  chain.series_count = group.series.size();
  for (std::size_t k = 0; k < stations.size(); ++k) {
    for (auto& w : stations[k].warnings) {
      // Recovery warnings may already name the station.
      chain.warnings.push_back(w.rfind("station ", 0) == 0 ? w : "station " + std::to_string(k + 2) + ": " + w);
    }
    chain.matrices.push_back(std::move(*stations[k].matrix));
  }
  return chain;
}

}  // namespace

TrainedChain train_chain(const TrainGroup& group, const RunConfig& config) {
  const int length = static_cast<int>(group.journey.length());
  std::vector<StationResult> stations(static_cast<std::size_t>(std::max(length - 1, 0)));
  parallel_for(stations.size(), config.worker_count(), [&](std::size_t k) {
    stations[k] = train_station(group, static_cast<int>(k) + 2, config);
  });
  return assemble_chain(group, stations);
}

MatrixBundle train_bundle(const std::vector<TrainGroup>& groups, const RunConfig& config) {
  const auto jobs = station_jobs(groups);
  std::vector<StationResult> results(jobs.size());
  parallel_for(jobs.size(), config.worker_count(), [&](std::size_t k) {
    results[k] = train_station(groups[jobs[k].group], jobs[k].station, config);
  });

  MatrixBundle bundle;
  bundle.strategy = config.strategy;
  bundle.seed = config.seed;
  bundle.epsilon = config.epsilon;
  bundle.n_max = config.n_max;
  bundle.regression_std = config.regression_std;
  bundle.service_classes = config.service_classes;
  std::size_t offset = 0;
  for (const auto& group : groups) {
    const std::size_t n = group.journey.length() > 1 ? group.journey.length() - 1 : 0;
    std::vector<StationResult> slice(std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>(offset)),
                                     std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>(offset + n)));
    offset += n;
    bundle.templates.push_back(group.journey);
    bundle.chains.push_back(assemble_chain(group, slice));
  }
  return bundle;
}

CaseSelection build_cases(const std::vector<TrainGroup>& groups, const Selection& selection,
                          const RunConfig& config) {
  CaseSelection out;
  const std::chrono::seconds horizon{config.horizon_minutes * 60};
  for (const auto& group : groups) {
    int origin = selection.window_origin(group.journey);
    if (origin == 0) origin = 1;
    int target = 0;
    try {
      target = select_target_station(group.journey, origin, horizon);
    } catch (const NoTargetError&) {
      out.skipped += group.series.size();
      continue;
    }
    for (const auto& s : group.series) {
      if (static_cast<int>(s.length()) < target) {
        ++out.skipped;
        continue;
      }
      out.cases.push_back(EvaluationCase{s.train_id, s.service_class, s.date, origin, target,
                                         Outcome{s.at_station(origin), s.at_station(target)}});
    }
  }
  return out;
}

Prediction chain_prediction(const MatrixBundle& bundle, const EvaluationCase& c, const RunConfig& config) {
  const TrainedChain* chain = bundle.find_chain(c.train_id, c.service_class);
  if (!chain) throw CoverageError("bundle has no chain for " + group_key(c.train_id, c.service_class));
  const StateSpace space(bundle.n_max);
  const auto matrices = chain->range(c.origin + 1, c.target);
  const DelayDistribution v = propagate(point_delay(c.outcome.current_delay, space, c.origin), matrices);
  return make_prediction(v, c.outcome.current_delay, config.metrics);
}

namespace {

std::vector<Outcome> outcomes_of(const std::vector<EvaluationCase>& cases) {
  std::vector<Outcome> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back(c.outcome);
  return out;
}

Prediction oracle_prediction(const EvaluationCase& c, const StateSpace& space, const MetricConfig& metrics) {
  Prediction p;
  p.distribution = point_delay(c.outcome.realized_delay, space, c.target);
  p.current_delay = c.outcome.current_delay;
  p.trend = actual_trend(c.outcome.current_delay, c.outcome.realized_delay);
  p.jump = actual_jump(c.outcome.current_delay, c.outcome.realized_delay);
  p.minutes = c.outcome.realized_delay;
  p.metrics = metrics;
  return p;
}

}  // namespace

ScoreReport evaluate_bundle(const MatrixBundle& bundle, const std::vector<EvaluationCase>& cases,
                            const RunConfig& config, const std::string& method) {
  std::vector<Prediction> predictions(cases.size());
  parallel_for(cases.size(), config.worker_count(),
               [&](std::size_t k) { predictions[k] = chain_prediction(bundle, cases[k], config); });
  return score_predictions(predictions, outcomes_of(cases), config.rwmse_form, method);
}

ScoreReport evaluate_baseline(const std::string& name, const std::vector<EvaluationCase>& cases,
                              const std::vector<TrainGroup>& training, const RunConfig& config) {
  const StateSpace space = config.space();
  std::vector<Prediction> predictions;
  predictions.reserve(cases.size());
  if (name == "naive") {
    for (const auto& c : cases) predictions.push_back(naive_predictor(c.outcome.current_delay, space));
  } else if (name == "oracle") {
    for (const auto& c : cases) predictions.push_back(oracle_prediction(c, space, config.metrics));
  } else if (name == "marginal") {
    std::map<std::tuple<std::string, std::string, int>, CountTensor> marginals;
    for (const auto& c : cases) {
      const auto key = std::make_tuple(c.train_id, c.service_class, c.target);
      auto it = marginals.find(key);
      if (it == marginals.end()) {
        const auto group = std::find_if(training.begin(), training.end(), [&](const TrainGroup& g) {
          return g.journey.train_id == c.train_id && g.journey.service_class == c.service_class;
        });
        if (group == training.end()) {
          throw CoverageError("no training series for " + group_key(c.train_id, c.service_class));
        }
        it = marginals.emplace(key, build_count_tensor(group->series, c.target, space)).first;
      }
      predictions.push_back(marginal_predictor(it->second, c.outcome.current_delay, config.metrics));
    }
  } else {
    throw DomainError("unknown baseline '" + name + "' (naive, marginal, oracle)");
  }
  return score_predictions(predictions, outcomes_of(cases), config.rwmse_form, name);
}

std::string score_reports_json(const std::vector<ScoreReport>& reports, std::size_t skipped) {
  json methods = json::array();
  for (const auto& r : reports) {
    methods.push_back({{"method", r.method},
                       {"eval_count", r.eval_count},
                       {"F_TR", r.trend.f_tr},
                       {"F_JP", r.jump.f_jp},
                       {"RWMSE", r.rwmse},
                       {"total_score", r.total},
                       {"F_IN", r.trend.f_in},
                       {"F_DE", r.trend.f_de},
                       {"F_EQ", r.trend.f_eq},
                       {"rwmse_form", to_string(r.form)},
                       {"weights",
                        {{"w1", r.weights.small},
                         {"w2", r.weights.large},
                         {"small_count", r.weights.small_count},
                         {"large_count", r.weights.large_count},
                         {"mass", r.weights.mass()}}}});
  }
  json doc = {{"skipped", skipped}, {"methods", methods}};
  return doc.dump(2) + "\n";
}

std::string score_reports_csv(const std::vector<ScoreReport>& reports) {
  std::ostringstream out;
  out << "method,eval_count,F_TR,F_JP,RWMSE,total_score\n";
  for (const auto& r : reports) {
    out << r.method << ',' << r.eval_count << ',' << fmt_double(r.trend.f_tr) << ',' << fmt_double(r.jump.f_jp)
        << ',' << fmt_double(r.rwmse) << ',' << fmt_double(r.total) << '\n';
  }
  return out.str();
}

std::string forecast_json(const ForecastRecord& record) {
  const auto& p = record.prediction;
  json doc = {{"train", record.train_id},
              {"date", record.date},
              {"S", record.origin},
              {"T", record.target},
              {"d_S", p.current_delay},
              {"distribution", p.distribution.probs},
              {"trend", to_string(p.trend)},
              {"jump", p.jump},
              {"minutes", p.minutes},
              {"metrics_used",
               {{"trend", to_string(p.metrics.trend)},
                {"jump", to_string(p.metrics.jump)},
                {"minutes", to_string(p.metrics.minutes)}}}};
  return doc.dump(2) + "\n";
}

}  // namespace delaychain::app
