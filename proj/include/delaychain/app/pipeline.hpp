#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "delaychain/app/config.hpp"
#include "delaychain/app/store.hpp"
#include "delaychain/evaluate.hpp"
#include "delaychain/mctest.hpp"

namespace delaychain::app {

// Runs fn(0..n-1) on up to `workers` threads. Each index must write only to
// its own output slot, which keeps results independent of scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// Series of one (train, service class) that pass a selection.
struct TrainGroup {
  JourneyTemplate journey;
  std::vector<DelaySeries> series;
};

// Groups store series by template. `invert_dates` keeps the series whose
// dates the selection rejects (the training complement of a test window).
std::vector<TrainGroup> select_groups(const SeriesStore& store, const Selection& selection,
                                      bool invert_dates = false);

// --- order tests ---

struct StationTestRecord {
  std::string train_id;
  std::string service_class;
  std::size_t series_count = 0;
  OrderTestReport report;
};

struct MarkovReport {
  TestStatistic statistic = TestStatistic::q;
  double alpha1 = 0.05;
  double alpha2 = 0.05;
  std::vector<StationTestRecord> stations;
  MarkovTestSummary summary;
};

// Tests stations 2..L of every group.
MarkovReport run_markov_tests(const std::vector<TrainGroup>& groups, const RunConfig& config);
std::string markov_report_json(const MarkovReport& report);
std::string markov_report_csv(const MarkovReport& report);

// --- training ---

// Recovers P(2)..P(L) for one group. Station t draws its kernel jitter from
// derive_seed(config.seed, "train/class", t).
TrainedChain train_chain(const TrainGroup& group, const RunConfig& config);
MatrixBundle train_bundle(const std::vector<TrainGroup>& groups, const RunConfig& config);

// --- evaluation ---

struct EvaluationCase {
  std::string train_id;
  std::string service_class;
  std::string date;
  int origin = 1;  // S
  int target = 2;  // T
  Outcome outcome;
};

struct CaseSelection {
  std::vector<EvaluationCase> cases;
  std::size_t skipped = 0;  // S is last, or the series stops before T
};

// S is the first stop at or after the window start (station 1 without a
// time window); T follows from the horizon.
CaseSelection build_cases(const std::vector<TrainGroup>& groups, const Selection& selection,
                          const RunConfig& config);

Prediction chain_prediction(const MatrixBundle& bundle, const EvaluationCase& c, const RunConfig& config);

// Scores the bundle's chains on the cases; CoverageError if a chain is missing.
ScoreReport evaluate_bundle(const MatrixBundle& bundle, const std::vector<EvaluationCase>& cases,
                            const RunConfig& config, const std::string& method);

// Baselines: "naive", "marginal" (target-station marginal of `training`)
// and "oracle" (the realized outcome itself).
ScoreReport evaluate_baseline(const std::string& name, const std::vector<EvaluationCase>& cases,
                              const std::vector<TrainGroup>& training, const RunConfig& config);

std::string score_reports_json(const std::vector<ScoreReport>& reports, std::size_t skipped);
std::string score_reports_csv(const std::vector<ScoreReport>& reports);

// --- forecasting ---

struct ForecastRecord {
  std::string train_id;
  std::string date;
  int origin = 1;
  int target = 2;
  Prediction prediction;
};

std::string forecast_json(const ForecastRecord& record);

}  // namespace delaychain::app
