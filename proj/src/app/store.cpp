#include "delaychain/app/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "delaychain/app/config.hpp"
#include "delaychain/error.hpp"

namespace delaychain::app {

using nlohmann::json;

namespace {

constexpr const char* kStoreFormat = "delaychain-series-store";
constexpr const char* kBundleFormat = "delaychain-matrix-bundle";
constexpr int kFormatVersion = 1;

json template_to_json(const JourneyTemplate& journey) {
  json stops = json::array();
  for (const auto& s : journey.stops) {
    stops.push_back({{"station_code", s.key.station_code},
                     {"activity", to_string(s.key.activity)},
                     {"planned_time", format_clock_seconds(s.planned_seconds)}});
  }
  return {{"train_id", journey.train_id}, {"service_class", journey.service_class}, {"stops", stops}};
}

JourneyTemplate template_from_json(const json& j) {
  JourneyTemplate journey;
  journey.train_id = j.at("train_id").get<std::string>();
  journey.service_class = j.at("service_class").get<std::string>();
  for (const auto& s : j.at("stops")) {
    TemplateStop stop;
    stop.key.station_code = s.at("station_code").get<std::string>();
    stop.key.activity = activity_from_string(s.at("activity").get<std::string>());
    stop.planned_seconds = parse_clock_seconds(s.at("planned_time").get<std::string>());
    journey.stops.push_back(std::move(stop));
  }
  return journey;
}

void check_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", std::string{}) != format) {
    throw ParseError(std::string("not a ") + format + " document");
  }
  if (j.value("version", 0) != kFormatVersion) throw ParseError("unsupported format version");
}

template <typename Fn>
auto parse_guarded(const std::string& text, Fn&& fn) {
  try {
    return fn(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

const JourneyTemplate* find_in(const std::vector<JourneyTemplate>& templates, const std::string& train_id,
                               const std::string& service_class) {
  for (const auto& t : templates) {
    if (t.train_id == train_id && t.service_class == service_class) return &t;
  }
  return nullptr;
}

}  // namespace

const JourneyTemplate* SeriesStore::find_template(const std::string& train_id,
                                                  const std::string& service_class) const {
  return find_in(templates, train_id, service_class);
}

const JourneyTemplate* MatrixBundle::find_template(const std::string& train_id,
                                                   const std::string& service_class) const {
  return find_in(templates, train_id, service_class);
}

const TrainedChain* MatrixBundle::find_chain(const std::string& train_id, const std::string& service_class) const {
  for (const auto& c : chains) {
    if (c.train_id == train_id && c.service_class == service_class) return &c;
  }
  return nullptr;
}

std::vector<TransitionMatrix> TrainedChain::range(int from, int to) const {
  std::vector<TransitionMatrix> out;
  for (int t = from; t <= to; ++t) {
    const auto k = static_cast<std::size_t>(t - 2);
    if (t < 2 || k >= matrices.size()) {
      throw CoverageError("no matrix for station " + std::to_string(t) + " of train " + train_id);
    }
    out.push_back(matrices[k]);
  }
  return out;
}

std::string store_to_json(const SeriesStore& store) {
  json templates = json::array();
  for (const auto& t : store.templates) templates.push_back(template_to_json(t));
  json series = json::array();
  for (const auto& s : store.series) {
    series.push_back({{"train_id", s.train_id},
                      {"service_class", s.service_class},
                      {"date", s.date},
                      {"delays", s.delays},
                      {"clip_count", s.clip_count}});
  }
  json doc = {{"format", kStoreFormat},
              {"version", kFormatVersion},
              {"n_max", store.n_max},
              {"clip_mode", to_string(store.clip)},
              {"service_classes", store.service_classes},
              {"templates", templates},
              {"series", series}};
  return doc.dump(1) + "\n";
}

SeriesStore store_from_json(const std::string& text) {
  return parse_guarded(text, [](const json& j) {
    check_format(j, kStoreFormat);
    SeriesStore store;
    store.n_max = j.at("n_max").get<int>();
    store.clip = clip_mode_from_string(j.at("clip_mode").get<std::string>());
    store.service_classes = j.value("service_classes", std::string{});
    for (const auto& t : j.at("templates")) store.templates.push_back(template_from_json(t));
    for (const auto& s : j.at("series")) {
      DelaySeries d;
      d.train_id = s.at("train_id").get<std::string>();
      d.service_class = s.at("service_class").get<std::string>();
      d.date = s.at("date").get<std::string>();
      d.delays = s.at("delays").get<std::vector<int>>();
      d.clip_count = s.value("clip_count", 0);
      store.series.push_back(std::move(d));
    }
    return store;
  });
}

std::string bundle_to_json(const MatrixBundle& bundle) {
  json templates = json::array();
  for (const auto& t : bundle.templates) templates.push_back(template_to_json(t));
  json chains = json::array();
  for (const auto& c : bundle.chains) {
    json matrices = json::array();
    for (const auto& m : c.matrices) {
      json rows = json::array();
      json status = json::array();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
        status.push_back(to_string(m.status(i)));
      }
      matrices.push_back({{"station", m.station()}, {"rows", rows}, {"row_status", status}});
    }
    chains.push_back({{"train_id", c.train_id},
                      {"service_class", c.service_class},
                      {"series_count", c.series_count},
                      {"warnings", c.warnings},
                      {"matrices", matrices}});
  }
  json doc = {{"format", kBundleFormat},
              {"version", kFormatVersion},
              {"metadata",
               {{"strategy", to_string(bundle.strategy)},
                {"seed", bundle.seed},
                {"epsilon", bundle.epsilon},
                {"n_max", bundle.n_max},
                {"regression_std", to_string(bundle.regression_std)},
                {"service_classes", bundle.service_classes}}},
              {"templates", templates},
              {"trains", chains}};
  return doc.dump(1) + "\n";
}

MatrixBundle bundle_from_json(const std::string& text) {
  return parse_guarded(text, [](const json& j) {
    check_format(j, kBundleFormat);
    MatrixBundle bundle;
    const auto& meta = j.at("metadata");
    bundle.strategy = recovery_strategy_from_string(meta.at("strategy").get<std::string>());
    bundle.seed = meta.at("seed").get<std::uint64_t>();
    bundle.epsilon = meta.at("epsilon").get<double>();
    bundle.n_max = meta.at("n_max").get<int>();
    bundle.regression_std = regression_std_from_string(meta.value("regression_std", std::string("printed")));
    bundle.service_classes = meta.value("service_classes", std::string{});
    const StateSpace space(bundle.n_max);
    for (const auto& t : j.at("templates")) bundle.templates.push_back(template_from_json(t));
    for (const auto& c : j.at("trains")) {
      TrainedChain chain;
      chain.train_id = c.at("train_id").get<std::string>();
      chain.service_class = c.at("service_class").get<std::string>();
      chain.series_count = c.value("series_count", std::size_t{0});
      chain.warnings = c.value("warnings", Warnings{});
      for (const auto& m : c.at("matrices")) {
        TransitionMatrix matrix(space, m.at("station").get<int>());
        const auto& rows = m.at("rows");
        const auto& status = m.at("row_status");
        if (rows.size() != space.cardinality() || status.size() != space.cardinality()) {
          throw ParseError("matrix size does not match n_max");
        }
        for (std::size_t i = 0; i < space.cardinality(); ++i) {
          const auto st = row_status_from_string(status[i].get<std::string>());
          if (st == RowStatus::undefined) continue;
          const auto values = rows[i].get<std::vector<double>>();
          if (values.size() != space.cardinality()) throw ParseError("matrix row has the wrong length");
          matrix.set_row(i, values, st);
        }
        chain.matrices.push_back(std::move(matrix));
      }
      bundle.chains.push_back(std::move(chain));
    }
    return bundle;
  });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

void save_store(const std::filesystem::path& path, const SeriesStore& store) { write_file(path, store_to_json(store)); }
SeriesStore load_store(const std::filesystem::path& path) { return store_from_json(read_file(path)); }
void save_bundle(const std::filesystem::path& path, const MatrixBundle& bundle) {
  write_file(path, bundle_to_json(bundle));
}
MatrixBundle load_bundle(const std::filesystem::path& path) { return bundle_from_json(read_file(path)); }

}  // namespace delaychain::app
