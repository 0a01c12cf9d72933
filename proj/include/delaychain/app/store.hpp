#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "delaychain/core.hpp"
#include "delaychain/ingest.hpp"
#include "delaychain/recovery.hpp"

namespace delaychain::app {

// Aligned series plus the templates they were aligned against.
struct SeriesStore {
  int n_max = StateSpace::kDefaultMaxDelay;
  ClipMode clip = ClipMode::saturate;
  std::string service_classes;  // partition spec the series were keyed with
  std::vector<JourneyTemplate> templates;
  std::vector<DelaySeries> series;

  const JourneyTemplate* find_template(const std::string& train_id, const std::string& service_class) const;
};

// Recovered matrices P(2)..P(L) of one (train, service class).
struct TrainedChain {
  std::string train_id;
  std::string service_class = "all";
  std::size_t series_count = 0;
  std::vector<TransitionMatrix> matrices;  // matrices[k] = P(k + 2)
  Warnings warnings;

  // Matrices P(from)..P(to); throws CoverageError when any is missing.
  std::vector<TransitionMatrix> range(int from, int to) const;
};

struct MatrixBundle {
  RecoveryStrategy strategy = RecoveryStrategy::gaussian_kernel;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  int n_max = StateSpace::kDefaultMaxDelay;
  RegressionStd regression_std = RegressionStd::printed;
  std::string service_classes;
  std::vector<JourneyTemplate> templates;
  std::vector<TrainedChain> chains;  // sorted by (train_id, service_class)

  const TrainedChain* find_chain(const std::string& train_id, const std::string& service_class) const;
  const JourneyTemplate* find_template(const std::string& train_id, const std::string& service_class) const;
};

// JSON round trips. Writers produce byte-stable output for equal inputs;
// readers throw IoError for unreadable files and ParseError for bad content.
std::string store_to_json(const SeriesStore& store);
SeriesStore store_from_json(const std::string& text);
std::string bundle_to_json(const MatrixBundle& bundle);
MatrixBundle bundle_from_json(const std::string& text);

void save_store(const std::filesystem::path& path, const SeriesStore& store);
SeriesStore load_store(const std::filesystem::path& path);
void save_bundle(const std::filesystem::path& path, const MatrixBundle& bundle);
MatrixBundle load_bundle(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace delaychain::app
