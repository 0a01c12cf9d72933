#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaychain/evaluate.hpp"
#include "delaychain/forecast.hpp"
#include "delaychain/ingest.hpp"
#include "delaychain/mctest.hpp"
#include "delaychain/recovery.hpp"

namespace delaychain::app {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitIo = 2,
  kExitEmptySelection = 3,
  kExitCoverageGap = 4,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n_max = StateSpace::kDefaultMaxDelay;
  double alpha1 = 0.05;
  double alpha2 = 0.05;
  TestStatistic statistic = TestStatistic::q;
  double epsilon = 0.1;
  int horizon_minutes = 20;
  MetricConfig metrics;
  RecoveryStrategy strategy = RecoveryStrategy::gaussian_kernel;
  RegressionStd regression_std = RegressionStd::printed;
  RwmseForm rwmse_form = RwmseForm::printed;
  ClipMode clip = ClipMode::saturate;
  std::string service_classes;  // ServicePartition spec; empty = one class
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency

  StateSpace space() const { return StateSpace(n_max); }
  ServicePartition partition() const {
    return service_classes.empty() ? ServicePartition{} : ServicePartition::parse(service_classes);
  }
  unsigned worker_count() const;
};

// Which trains, dates and time-of-day window a command works on.
struct Selection {
  std::vector<std::string> trains;
  std::vector<std::string> dates;
  std::vector<std::string> exclude_dates;
  std::optional<std::string> date_from;
  std::optional<std::string> date_to;
  std::optional<int> time_from;  // seconds from service day start
  std::optional<int> time_to;

  bool accepts_train(const std::string& train_id) const;
  bool accepts_date(const std::string& date) const;
  // A train operates in the window when any planned stop falls inside it.
  bool accepts_template(const JourneyTemplate& journey) const;
  // First 1-based stop at or after time_from; 0 when no time window is set.
  int window_origin(const JourneyTemplate& journey) const;
};

}  // namespace delaychain::app
