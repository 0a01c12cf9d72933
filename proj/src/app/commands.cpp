#include "delaychain/app/commands.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "delaychain/app/pipeline.hpp"
#include "delaychain/app/store.hpp"
#include "delaychain/error.hpp"
#include "delaychain/synth.hpp"

namespace delaychain::app {

namespace {

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const EmptySelectionError& e) {
    log << "error: " << e.what() << '\n';
    return kExitEmptySelection;
  } catch (const CoverageError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCoverageGap;
  } catch (const NoTargetError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCoverageGap;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

void emit(const fs::path& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void print_warnings(std::ostream& log, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) log << "warning: " << w << '\n';
}

void require_groups(const std::vector<TrainGroup>& groups) {
  if (groups.empty()) throw EmptySelectionError("selection contains no series");
}

std::string safe_name(std::string text) {
  for (auto& c : text) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return text;
}

}  // namespace

int cmd_ingest(const IngestOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    auto timetable_in = open_input(options.timetable);
    auto realization_in = open_input(options.realization);
    const auto timetable = parse_timetable(timetable_in);
    const auto events = parse_events(realization_in);
    print_warnings(log, timetable.warnings);
    print_warnings(log, events.warnings);

    const StateSpace space = config.space();
    auto assembled = assemble_all(events.events, timetable.templates, config.partition(), space, config.clip);

    SeriesStore store;
    store.n_max = config.n_max;
    store.clip = config.clip;
    store.service_classes = config.service_classes;
    store.templates = timetable.templates;
    store.series = std::move(assembled.series);
    emit(options.out, store_to_json(store));

    std::vector<Reject> rejects = events.rejects;
    rejects.insert(rejects.end(), assembled.rejects.begin(), assembled.rejects.end());
    fs::path rejects_path = options.rejects;
    if (rejects_path.empty() && !options.out.empty()) rejects_path = options.out.string() + ".rejects.csv";
    if (!rejects_path.empty()) {
      std::ostringstream buf;
      write_rejects_csv(buf, kRealizationHeader, rejects);
      write_file(rejects_path, buf.str());
      if (!timetable.rejects.empty()) {
        std::ostringstream tbuf;
        write_rejects_csv(tbuf, kTimetableHeader, timetable.rejects);
        write_file(rejects_path.string() + ".timetable.csv", tbuf.str());
      }
    }
    int clipped = 0;
    for (const auto& s : store.series) clipped += s.clip_count;
    log << "ingested " << store.series.size() << " series over " << store.templates.size() << " templates; "
        << rejects.size() + timetable.rejects.size() << " rejected rows, " << clipped << " clipped delays\n";
  });
}

int cmd_test(const TestOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const SeriesStore store = load_store(options.store);
    RunConfig effective = config;
    effective.n_max = store.n_max;
    const auto groups = select_groups(store, options.selection);
    require_groups(groups);
    const MarkovReport report = run_markov_tests(groups, effective);
    emit(options.out, markov_report_json(report));
    if (!options.csv.empty()) write_file(options.csv, markov_report_csv(report));
    const auto& tally = report.statistic == TestStatistic::q ? report.summary.q : report.summary.lr;
    log << "stations " << report.summary.total_stations << ", reject H0(0) " << tally.reject_order0
        << ", reject H0(1) " << tally.reject_order1 << '\n';
  });
}

int cmd_train(const TrainOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const SeriesStore store = load_store(options.store);
    RunConfig effective = config;
    effective.n_max = store.n_max;
    effective.service_classes = store.service_classes;
    const auto groups = select_groups(store, options.selection);
    require_groups(groups);
    const MatrixBundle bundle = train_bundle(groups, effective);
    emit(options.out, bundle_to_json(bundle));
    for (const auto& chain : bundle.chains) print_warnings(log, chain.warnings);

    if (!options.dump_dir.empty()) {
      for (const auto& chain : bundle.chains) {
        const std::string stem = safe_name(chain.train_id) + "_" + safe_name(chain.service_class);
        for (const auto& m : chain.matrices) {
          const std::string name = stem + "_P" + std::to_string(m.station());
          std::ostringstream csv, grid;
          write_matrix_csv(csv, m);
          write_matrix_heatmap(grid, m);
          write_file(options.dump_dir / (name + ".csv"), csv.str());
          write_file(options.dump_dir / (name + ".txt"), grid.str());
        }
      }
    }
    log << "trained " << bundle.chains.size() << " chains with " << to_string(bundle.strategy) << '\n';
  });
}

int cmd_forecast(const ForecastOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const MatrixBundle bundle = load_bundle(options.bundle);
    const ServicePartition partition =
        bundle.service_classes.empty() ? ServicePartition{} : ServicePartition::parse(bundle.service_classes);
    const std::string service_class = partition.class_of_date(options.date);
    const JourneyTemplate* journey = bundle.find_template(options.train_id, service_class);
    if (!journey) {
      throw EmptySelectionError("bundle has no train " + options.train_id + " for class " + service_class);
    }
    if (options.station < 1 || options.station > static_cast<int>(journey->length())) {
      throw DomainError("station index out of range");
    }
    const int target =
        select_target_station(*journey, options.station, std::chrono::seconds{config.horizon_minutes * 60});

    EvaluationCase c{options.train_id, service_class, options.date, options.station, target,
                     Outcome{options.current_delay, 0}};
    ForecastRecord record{options.train_id, options.date, options.station, target, chain_prediction(bundle, c, config)};
    emit(options.out, forecast_json(record));
  });
}

int cmd_evaluate(const EvaluateOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    if (options.bundles.empty() && options.baselines.empty()) {
      throw DomainError("nothing to evaluate: give --bundle and/or --baseline");
    }
    const SeriesStore store = load_store(options.store);
    RunConfig effective = config;
    effective.n_max = store.n_max;
    const auto groups = select_groups(store, options.window);
    const CaseSelection selection = build_cases(groups, options.window, effective);
    if (selection.cases.empty()) throw EmptySelectionError("evaluation window contains no cases");

    std::vector<ScoreReport> reports;
    for (const auto& path : options.bundles) {
      const MatrixBundle bundle = load_bundle(path);
      if (bundle.n_max != store.n_max) throw DomainError("bundle and store disagree on n_max");
      reports.push_back(evaluate_bundle(bundle, selection.cases, effective, to_string(bundle.strategy)));
    }
    if (!options.baselines.empty()) {
      const auto training = select_groups(store, options.window, /*invert_dates=*/true);
      for (const auto& name : options.baselines) {
        reports.push_back(evaluate_baseline(name, selection.cases, training, effective));
      }
    }
    emit(options.out, score_reports_json(reports, selection.skipped));
    if (!options.csv.empty()) write_file(options.csv, score_reports_csv(reports));
    log << "evaluated " << selection.cases.size() << " cases (" << selection.skipped << " skipped)\n";
  });
}

int cmd_synth(const SynthOptions& options, const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const StateSpace space = config.space();
    ChainSpec spec;
    if (options.kind == "near_diagonal") {
      spec = near_diagonal_spec(space, options.length, options.dispersion, config.seed);
    } else if (options.kind == "order0") {
      spec = random_order0_spec(space, options.length, config.seed);
    } else if (options.kind == "order1") {
      spec = random_order1_spec(space, options.length, options.concentration, config.seed);
    } else if (options.kind == "order2") {
      spec = random_order2_spec(space, options.length, options.concentration, config.seed);
    } else {
      throw DomainError("unknown synthetic chain kind '" + options.kind + "'");
    }
    spec.train_id = options.train_id;
    const auto series = sample_series(spec, options.count);
    std::ostringstream timetable, realization;
    write_synthetic_csv(timetable, realization, spec, series);
    write_file(options.out_dir / "timetable.csv", timetable.str());
    write_file(options.out_dir / "realization.csv", realization.str());
    log << "wrote " << series.size() << " synthetic series to " << options.out_dir.string() << '\n';
  });
}

namespace {

// Raw option text; converted to typed RunConfig fields after parsing.
struct ConfigText {
  std::string statistic = "q";
  std::string trend_metric = "median";
  std::string jump_metric = "probability";
  std::string minutes_metric = "mean";
  std::string strategy = "gaussian_kernel";
  std::string regression_std = "printed";
  std::string rwmse_form = "printed";
  std::string clip = "saturate";
};

void add_selection(CLI::App* cmd, Selection& selection, std::string& time_from, std::string& time_to) {
  cmd->add_option("--trains", selection.trains, "Train ids to include (default all)")->delimiter(',');
  cmd->add_option("--dates", selection.dates, "Dates to include, YYYY-MM-DD")->delimiter(',');
  cmd->add_option("--exclude-dates", selection.exclude_dates, "Dates to leave out")->delimiter(',');
  cmd->add_option("--date-from", selection.date_from, "First date (inclusive)");
  cmd->add_option("--date-to", selection.date_to, "Last date (inclusive)");
  cmd->add_option("--window-start", time_from, "Time window start, HH:MM:SS");
  cmd->add_option("--window-end", time_to, "Time window end, HH:MM:SS");
}

void finish_selection(Selection& selection, const std::string& time_from, const std::string& time_to) {
  if (!time_from.empty()) selection.time_from = parse_clock_seconds(time_from);
  if (!time_to.empty()) selection.time_to = parse_clock_seconds(time_to);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov-chain train delay toolkit"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Key-value config file (flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig config;
  ConfigText text;
  app.add_option("--n-max", config.n_max, "Delay bound N; states are -N..N");
  app.add_option("--alpha1", config.alpha1, "Significance level of the order-0 test");
  app.add_option("--alpha2", config.alpha2, "Significance level of the order-1 test");
  app.add_option("--statistic", text.statistic, "Primary test statistic: q or lr");
  app.add_option("--epsilon", config.epsilon, "Kernel jitter half-width");
  app.add_option("--horizon", config.horizon_minutes, "Forecast horizon in minutes");
  app.add_option("--trend-metric", text.trend_metric, "mean, mode, median or probability");
  app.add_option("--jump-metric", text.jump_metric, "mean, mode, median or probability");
  app.add_option("--minutes-metric", text.minutes_metric, "mean, mode or median");
  app.add_option("--strategy", text.strategy, "diagonal, uniform, gaussian_regression or gaussian_kernel");
  app.add_option("--regression-std", text.regression_std, "printed or sqrt");
  app.add_option("--rwmse-form", text.rwmse_form, "printed or squared");
  app.add_option("--clip", text.clip, "Out-of-range delays: saturate or drop");
  app.add_option("--service-classes", config.service_classes, "Weekday classes, e.g. 'mon,tue=a;wed=b'");
  app.add_option("--seed", config.seed, "Run seed");
  app.add_option("--threads", config.threads, "Worker threads (0 = all cores)");

  std::string time_from, time_to;

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Align realization events into a series store");
  c_ingest->add_option("--timetable", ingest.timetable, "Timetable CSV")->required();
  c_ingest->add_option("--realization", ingest.realization, "Realization CSV")->required();
  c_ingest->add_option("--out", ingest.out, "Series store JSON (default stdout)");
  c_ingest->add_option("--rejects", ingest.rejects, "Rejected rows CSV (default <out>.rejects.csv)");

  TestOptions test;
  auto* c_test = app.add_subcommand("test", "Test the Markov property at every station");
  c_test->add_option("--store", test.store, "Series store JSON")->required();
  c_test->add_option("--out", test.out, "Report JSON (default stdout)");
  c_test->add_option("--csv", test.csv, "Per-station CSV mirror");
  add_selection(c_test, test.selection, time_from, time_to);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Recover transition matrices per train and station");
  c_train->add_option("--store", train.store, "Series store JSON")->required();
  c_train->add_option("--out", train.out, "Matrix bundle JSON (default stdout)");
  c_train->add_option("--dump-dir", train.dump_dir, "Write CSV grids and text heatmaps here");
  add_selection(c_train, train.selection, time_from, time_to);

  ForecastOptions forecast;
  auto* c_forecast = app.add_subcommand("forecast", "Forecast the delay distribution at the horizon");
  c_forecast->add_option("--bundle", forecast.bundle, "Matrix bundle JSON")->required();
  c_forecast->add_option("--train", forecast.train_id, "Train id")->required();
  c_forecast->add_option("--date", forecast.date, "Service date YYYY-MM-DD")->required();
  c_forecast->add_option("--station", forecast.station, "Current station index S (1-based)")->required();
  c_forecast->add_option("--delay", forecast.current_delay, "Current delay d(S) in minutes")->required();
  c_forecast->add_option("--out", forecast.out, "Prediction JSON (default stdout)");

  EvaluateOptions evaluate;
  auto* c_evaluate = app.add_subcommand("evaluate", "Score chains and baselines on an evaluation window");
  c_evaluate->add_option("--store", evaluate.store, "Series store JSON")->required();
  c_evaluate->add_option("--bundle", evaluate.bundles, "Matrix bundle(s) to score");
  c_evaluate->add_option("--baseline", evaluate.baselines, "naive, marginal and/or oracle")->delimiter(',');
  c_evaluate->add_option("--out", evaluate.out, "Report JSON (default stdout)");
  c_evaluate->add_option("--csv", evaluate.csv, "Report CSV mirror");
  add_selection(c_evaluate, evaluate.window, time_from, time_to);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Sample a synthetic chain as timetable and realization CSVs");
  c_synth->add_option("--kind", synth.kind, "near_diagonal, order0, order1 or order2");
  c_synth->add_option("--length", synth.length, "Stations per series");
  c_synth->add_option("--count", synth.count, "Number of series (one per date)");
  c_synth->add_option("--dispersion", synth.dispersion, "Row spread of the near-diagonal chain");
  c_synth->add_option("--concentration", synth.concentration, "Dirichlet concentration of random chains");
  c_synth->add_option("--train", synth.train_id, "Train id");
  c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInternal;
  }

  try {
    config.statistic = test_statistic_from_string(text.statistic);
    config.metrics.trend = metric_from_string(text.trend_metric);
    config.metrics.jump = metric_from_string(text.jump_metric);
    config.metrics.minutes = metric_from_string(text.minutes_metric);
    if (config.metrics.minutes == Metric::probability) {
      throw DomainError("the minutes metric cannot be 'probability'");
    }
    config.strategy = recovery_strategy_from_string(text.strategy);
    config.regression_std = regression_std_from_string(text.regression_std);
    config.rwmse_form = rwmse_form_from_string(text.rwmse_form);
    config.clip = clip_mode_from_string(text.clip);
    finish_selection(test.selection, time_from, time_to);
    finish_selection(train.selection, time_from, time_to);
    finish_selection(evaluate.window, time_from, time_to);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }

  if (c_ingest->parsed()) return cmd_ingest(ingest, config, err);
  if (c_test->parsed()) return cmd_test(test, config, err);
  if (c_train->parsed()) return cmd_train(train, config, err);
  if (c_forecast->parsed()) return cmd_forecast(forecast, config, err);
  if (c_evaluate->parsed()) return cmd_evaluate(evaluate, config, err);
  if (c_synth->parsed()) return cmd_synth(synth, config, err);
  return kExitInternal;
}

}  // namespace delaychain::app
