#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "delaychain/app/commands.hpp"
#include "delaychain/app/pipeline.hpp"
#include "delaychain/app/store.hpp"
#include "delaychain/error.hpp"
#include "delaychain/synth.hpp"

using namespace delaychain;
using namespace delaychain::app;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("delaychain_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "delaychain");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // synth -> ingest into `store`.
  void make_store(const std::string& kind, int count, const std::string& store, int length = 6,
                  const std::string& extra_seed = "7") {
    ASSERT_EQ(run({"synth", "--kind", kind, "--count", std::to_string(count), "--length", std::to_string(length),
                   "--seed", extra_seed, "--n-max", kind == "near_diagonal" ? "15" : "1", "--out-dir",
                   path("synth_" + store)}),
              0)
        << err_.str();
    ASSERT_EQ(run({"ingest", "--n-max", kind == "near_diagonal" ? "15" : "1", "--timetable",
                   path("synth_" + store) + "/timetable.csv", "--realization",
                   path("synth_" + store) + "/realization.csv", "--out", path(store)}),
              0)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, IngestWritesStoreAndRejects) {
  make_store("near_diagonal", 20, "store.json");
  const auto store = load_store(path("store.json"));
  EXPECT_EQ(store.series.size(), 20u);
  EXPECT_EQ(store.templates.size(), 1u);
  EXPECT_TRUE(fs::exists(path("store.json.rejects.csv")));
}

TEST_F(CliTest, CorruptRowsLandInRejects) {
  make_store("near_diagonal", 3, "store.json");
  const std::string real = path("synth_store.json") + "/realization.csv";
  std::string text = read_file(real);
  text += "synth,2017-09-04,ST01,Q,2017-09-04T08:00:00,2017-09-04T08:00:00\n";
  text += "synth,not-a-date\n";
  write_file(real, text);
  ASSERT_EQ(run({"ingest", "--timetable", path("synth_store.json") + "/timetable.csv", "--realization", real,
                 "--out", path("s2.json"), "--rejects", path("rej.csv")}),
            0);
  const std::string rejects = read_file(path("rej.csv"));
  EXPECT_NE(rejects.find("unknown activity"), std::string::npos);
  EXPECT_NE(rejects.find("not-a-date"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsIoError) {
  EXPECT_EQ(run({"ingest", "--timetable", path("nope.csv"), "--realization", path("nope2.csv"), "--out",
                 path("x.json")}),
            kExitIo);
  EXPECT_EQ(run({"test", "--store", path("nope.json")}), kExitIo);
}

TEST_F(CliTest, EmptyWindowIsEmptySelection) {
  make_store("near_diagonal", 10, "store.json");
  EXPECT_EQ(run({"test", "--store", path("store.json"), "--dates", "2031-01-01", "--out", path("t.json")}),
            kExitEmptySelection);
  EXPECT_EQ(run({"test", "--store", path("store.json"), "--trains", "nosuch", "--out", path("t.json")}),
            kExitEmptySelection);
  EXPECT_EQ(run({"evaluate", "--store", path("store.json"), "--baseline", "naive", "--window-start", "23:00:00",
                 "--out", path("e.json")}),
            kExitEmptySelection);
}

TEST_F(CliTest, Order1StoreRejectsIndependenceOnly) {
  make_store("order1", 3000, "store.json", 6);
  ASSERT_EQ(run({"test", "--store", path("store.json"), "--out", path("t.json"), "--csv", path("t.csv")}), 0)
      << err_.str();
  const auto report = json::parse(read_file(path("t.json")));
  const auto& agg = report.at("aggregate");
  EXPECT_EQ(agg.at("total_stations"), 5);
  EXPECT_EQ(agg.at("reject_h0_order0"), 5);
  EXPECT_LE(agg.at("reject_h0_order1").get<int>(), 1);
  EXPECT_EQ(report.at("stations").size(), 5u);
  EXPECT_NE(read_file(path("t.csv")).find("train_id,service_class,t,"), std::string::npos);
}

TEST_F(CliTest, Order0StoreRarelyRejects) {
  make_store("order0", 3000, "store.json", 6);
  ASSERT_EQ(run({"test", "--store", path("store.json"), "--out", path("t.json")}), 0);
  const auto agg = json::parse(read_file(path("t.json"))).at("aggregate");
  EXPECT_LE(agg.at("reject_h0_order0").get<int>(), 1);
}

TEST_F(CliTest, DiagonalStrategyOnFullyObservedStoreIsEmpirical) {
  make_store("order1", 2000, "store.json", 4);
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--strategy", "diagonal", "--out", path("b.json")}), 0);
  const auto bundle = load_bundle(path("b.json"));
  const auto store = load_store(path("store.json"));
  ASSERT_EQ(bundle.chains.size(), 1u);
  ASSERT_EQ(bundle.chains[0].matrices.size(), 3u);
  for (int t = 2; t <= 4; ++t) {
    const auto empirical = empirical_matrix(build_count_tensor(store.series, t, StateSpace(1)));
    ASSERT_TRUE(empirical.is_complete());
    const auto& m = bundle.chains[0].matrices[static_cast<std::size_t>(t - 2)];
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), empirical(i, j));
  }
}

TEST_F(CliTest, KernelBundleIsByteStable) {
  make_store("near_diagonal", 40, "store.json");
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--seed", "11", "--threads", "1", "--out", path("a.json")}),
            0);
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--seed", "11", "--threads", "3", "--out", path("b.json")}),
            0);
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--seed", "12", "--out", path("c.json")}), 0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  EXPECT_NE(read_file(path("a.json")), read_file(path("c.json")));
  const auto bundle = load_bundle(path("a.json"));
  EXPECT_EQ(bundle.strategy, RecoveryStrategy::gaussian_kernel);
  EXPECT_EQ(bundle.seed, 11u);
  EXPECT_DOUBLE_EQ(bundle.epsilon, 0.1);
  EXPECT_EQ(bundle.n_max, 15);
  for (const auto& m : bundle.chains.at(0).matrices) EXPECT_TRUE(m.is_complete());
}

TEST_F(CliTest, EveryStrategyYieldsCompleteMatrices) {
  make_store("near_diagonal", 15, "store.json");
  for (const char* strategy : {"diagonal", "uniform", "gaussian_regression", "gaussian_kernel"}) {
    ASSERT_EQ(run({"train", "--store", path("store.json"), "--strategy", strategy, "--out", path("b.json")}), 0);
    for (const auto& m : load_bundle(path("b.json")).chains.at(0).matrices) EXPECT_TRUE(m.is_complete()) << strategy;
  }
}

TEST_F(CliTest, DumpDirWritesGrids) {
  make_store("near_diagonal", 15, "store.json", 3);
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--out", path("b.json"), "--dump-dir", path("dump")}), 0);
  EXPECT_TRUE(fs::exists(path("dump") + "/synth_all_P2.csv"));
  EXPECT_TRUE(fs::exists(path("dump") + "/synth_all_P3.txt"));
}

TEST_F(CliTest, ForecastIdentityBundleKeepsDelay) {
  MatrixBundle bundle;
  bundle.n_max = 15;
  JourneyTemplate journey{"42", "all", {}};
  for (int k = 0; k < 5; ++k) journey.stops.push_back({{"S" + std::to_string(k), Activity::D}, 8 * 3600 + k * 600});
  bundle.templates.push_back(journey);
  TrainedChain chain{"42", "all", 0, {}, {}};
  for (int t = 2; t <= 5; ++t) chain.matrices.push_back(TransitionMatrix::identity(StateSpace(15), t));
  bundle.chains.push_back(chain);
  save_bundle(path("id.json"), bundle);

  ASSERT_EQ(run({"forecast", "--bundle", path("id.json"), "--train", "42", "--date", "2017-10-02", "--station", "2",
                 "--delay", "6", "--out", path("f.json")}),
            0)
      << err_.str();
  const auto f = json::parse(read_file(path("f.json")));
  EXPECT_DOUBLE_EQ(f.at("minutes").get<double>(), 6.0);
  EXPECT_EQ(f.at("S"), 2);
  EXPECT_EQ(f.at("T"), 4);  // 20 minutes at 10-minute spacing
  EXPECT_EQ(f.at("trend"), "equal");
  EXPECT_EQ(f.at("distribution").size(), 31u);
  EXPECT_EQ(f.at("metrics_used").at("trend"), "median");

  EXPECT_EQ(run({"forecast", "--bundle", path("id.json"), "--train", "42", "--date", "2017-10-02", "--station", "5",
                 "--delay", "6"}),
            kExitCoverageGap);
  // Drop the last matrix: S = 3 needs P(4), P(5).
  bundle.chains[0].matrices.pop_back();
  save_bundle(path("gap.json"), bundle);
  EXPECT_EQ(run({"forecast", "--bundle", path("gap.json"), "--train", "42", "--date", "2017-10-02", "--station",
                 "3", "--delay", "0", "--out", path("g.json")}),
            kExitCoverageGap);
}

TEST_F(CliTest, EvaluateOracleScoresFifteenAndNaiveIsComparable) {
  make_store("near_diagonal", 120, "store.json");
  ASSERT_EQ(run({"train", "--store", path("store.json"), "--date-to", "2017-11-30", "--out", path("b.json")}), 0);
  ASSERT_EQ(run({"evaluate", "--store", path("store.json"), "--bundle", path("b.json"), "--baseline",
                 "oracle,naive,marginal", "--date-from", "2017-12-01", "--out", path("e.json"), "--csv",
                 path("e.csv")}),
            0)
      << err_.str();
  const auto report = json::parse(read_file(path("e.json")));
  const auto& methods = report.at("methods");
  ASSERT_EQ(methods.size(), 4u);
  EXPECT_EQ(methods[0].at("method"), "gaussian_kernel");
  EXPECT_EQ(methods[0].at("eval_count"), 32);
  EXPECT_EQ(methods[1].at("method"), "oracle");
  EXPECT_DOUBLE_EQ(methods[1].at("total_score").get<double>(), 15.0);
  EXPECT_NEAR(methods[0].at("weights").at("mass").get<double>(), 1.0, 1e-12);
  EXPECT_NE(read_file(path("e.csv")).find("method,eval_count,F_TR,F_JP,RWMSE,total_score"), std::string::npos);
}

TEST_F(CliTest, ConfigFileWithFlagsWinning) {
  make_store("near_diagonal", 20, "store.json");
  write_file(path("run.ini"), "seed=5\nstrategy=diagonal\n");
  ASSERT_EQ(run({"--config", path("run.ini"), "train", "--store", path("store.json"), "--out", path("a.json")}), 0)
      << err_.str();
  auto bundle = load_bundle(path("a.json"));
  EXPECT_EQ(bundle.seed, 5u);
  EXPECT_EQ(bundle.strategy, RecoveryStrategy::diagonal);
  ASSERT_EQ(run({"--config", path("run.ini"), "train", "--store", path("store.json"), "--seed", "9", "--out",
                 path("b.json")}),
            0);
  bundle = load_bundle(path("b.json"));
  EXPECT_EQ(bundle.seed, 9u);
  EXPECT_EQ(bundle.strategy, RecoveryStrategy::diagonal);
}

TEST_F(CliTest, HelpListsDefaults) {
  EXPECT_EQ(run({"--help"}), 0);
  const std::string help = out_.str();
  for (const char* needle : {"--n-max", "15", "--alpha1", "0.05", "--epsilon", "0.1", "--horizon", "20", "median",
                             "probability", "gaussian_kernel", "saturate", "printed"}) {
    EXPECT_NE(help.find(needle), std::string::npos) << needle;
  }
  EXPECT_NE(run({"train", "--strategy", "magic", "--store", path("x.json")}), 0);
  EXPECT_NE(run({"--minutes-metric", "probability", "train", "--store", path("x.json")}), 0);
}

TEST(Store, JsonRoundTrip) {
  SeriesStore store;
  store.n_max = 4;
  store.service_classes = "wed=w";
  store.templates.push_back({"1", "w", {{{"A", Activity::V}, 100}, {{"B", Activity::KA}, 200}}});
  DelaySeries s;
  s.train_id = "1";
  s.service_class = "w";
  s.date = "2017-10-04";
  s.delays = {1, -4};
  s.clip_count = 1;
  store.series.push_back(s);
  const auto text = store_to_json(store);
  const auto back = store_from_json(text);
  EXPECT_EQ(store_to_json(back), text);
  EXPECT_EQ(back.series[0].delays, s.delays);
  EXPECT_EQ(back.templates[0].stops[1].key.activity, Activity::KA);
  EXPECT_THROW(store_from_json("{\"format\": \"other\"}"), ParseError);
  EXPECT_THROW(store_from_json("not json"), ParseError);
}

TEST(Pipeline, ParallelForCoversEveryIndex) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t k) {
                 if (k == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
