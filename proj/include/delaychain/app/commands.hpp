#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "delaychain/app/config.hpp"

namespace delaychain::app {

namespace fs = std::filesystem;

// Every command returns an ExitCode and never throws; diagnostics go to `log`.
// An empty output path means standard output.

struct IngestOptions {
  fs::path timetable;
  fs::path realization;
  fs::path out;
  fs::path rejects;  // default: <out>.rejects.csv
};
int cmd_ingest(const IngestOptions& options, const RunConfig& config, std::ostream& log);

struct TestOptions {
  fs::path store;
  Selection selection;
  fs::path out;
  fs::path csv;
};
int cmd_test(const TestOptions& options, const RunConfig& config, std::ostream& log);

struct TrainOptions {
  fs::path store;
  Selection selection;
  fs::path out;
  fs::path dump_dir;  // per-station CSV grids and text heatmaps
};
int cmd_train(const TrainOptions& options, const RunConfig& config, std::ostream& log);

struct ForecastOptions {
  fs::path bundle;
  std::string train_id;
  std::string date;
  int station = 1;  // S, 1-based
  int current_delay = 0;
  fs::path out;
};
int cmd_forecast(const ForecastOptions& options, const RunConfig& config, std::ostream& log);

struct EvaluateOptions {
  fs::path store;
  std::vector<fs::path> bundles;
  std::vector<std::string> baselines;  // naive, marginal, oracle
  Selection window;
  fs::path out;
  fs::path csv;
};
int cmd_evaluate(const EvaluateOptions& options, const RunConfig& config, std::ostream& log);

struct SynthOptions {
  std::string kind = "near_diagonal";  // near_diagonal, order0, order1, order2
  int length = 8;
  std::size_t count = 200;
  double dispersion = 1.0;
  double concentration = 0.5;
  std::string train_id = "synth";
  fs::path out_dir;
};
int cmd_synth(const SynthOptions& options, const RunConfig& config, std::ostream& log);

// Parses argv and dispatches to a subcommand.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace delaychain::app
