#include "optoskin/cli.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "optoskin/ablate.hpp"
#include "optoskin/config.hpp"
#include "optoskin/error.hpp"
#include "optoskin/ingest.hpp"
#include "optoskin/latency.hpp"
#include "optoskin/pipeline.hpp"
#include "optoskin/random.hpp"
#include "optoskin/synth.hpp"

namespace optoskin {

namespace fs = std::filesystem;

LogLevel parse_log_level(const std::string& name) {
  if (name == "debug") return LogLevel::Debug;
  if (name == "info") return LogLevel::Info;
  if (name == "warn") return LogLevel::Warn;
  if (name == "error") return LogLevel::Error;
  throw ConfigError("unknown log level '" + name + "'");
}

std::vector<std::uint64_t> sweep_seeds(std::uint64_t run_seed, std::size_t n) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(mix_key(run_seed, 0xab1a7e, i));
  return seeds;
}

namespace {

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    case LogLevel::Error: return "error";
  }
  return "info";
}

class Session {
 public:
  Session(const CommandOptions& options, CommandOutcome& outcome)
      : options_(options), outcome_(outcome), start_(std::chrono::steady_clock::now()) {}

  void log(LogLevel level, const std::string& stage, const std::string& message) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (level < options_.log_level) return;
    outcome_.log.push_back({level, stage, message, elapsed});
    if (options_.echo_log) {
      std::fprintf(stderr, "[%8.3fs] %-5s %-10s %s\n", elapsed, level_name(level), stage.c_str(), message.c_str());
    }
  }
  void info(const std::string& stage, const std::string& message) { log(LogLevel::Info, stage, message); }

  fs::path report(const std::string& name) {
    auto p = options_.out_dir / name;
    outcome_.reports.push_back(p);
    return p;
  }

 private:
  const CommandOptions& options_;
  CommandOutcome& outcome_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt_num(double x) { return format_double(x); }

// Runs `body` and maps library errors onto exit codes.
CommandOutcome guarded(const CommandOptions& options, const std::function<void(Session&)>& body) {
  CommandOutcome outcome;
  Session session(options, outcome);
  auto fail = [&](int code, const std::string& what) {
    outcome.exit_code = code;
    outcome.error = what;
    session.log(LogLevel::Error, "error", what);
  };
  try {
    if (options.threads < 1) throw ConfigError("--threads must be >= 1");
    fs::create_directories(options.out_dir);
    body(session);
  } catch (const ConfigError& e) {
    fail(kExitConfig, e.what());
  } catch (const IoError& e) {
    fail(kExitConfig, e.what());
  } catch (const FormatError& e) {
    fail(kExitConfig, e.what());
  } catch (const SyncError& e) {
    fail(kExitSync, e.what());
  } catch (const NoValidPressesError& e) {
    fail(kExitNoValidPresses, e.what());
  } catch (const CalibrationError& e) {
    fail(kExitCalibration, e.what());
  } catch (const fs::filesystem_error& e) {
    fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    fail(kExitOther, e.what());
  }
  if (outcome.exit_code != kExitOk) outcome.reports.clear();
  return outcome;
}

RunConfig load_config(const CommandOptions& options, Session& s) {
  if (options.config.empty()) throw ConfigError("--config is required");
  auto rc = load_run_config(options.config);
  if (options.seed) rc.seed = *options.seed;
  if (options.models) {
    rc.camera_models = camera_pair_from_json(read_json_file(*options.models));
    for (const auto& m : rc.camera_models) m.validate(rc.layout.side_mm);
    s.info("config", "camera models from " + options.models->string());
  }
  s.info("config", "seed " + std::to_string(rc.seed));
  return rc;
}

PipelineRun load_run(const RunConfig& rc, Session& s) {
  std::array<EventStream, 2> streams;
  for (int c = 0; c < 2; ++c) {
    const auto cam = c == 0 ? CameraId::Cam1 : CameraId::Cam2;
    ReadReport rr;
    streams[c] = read_events(rc.camera_files[c], cam, &rr);
    s.info("ingest", std::string(to_string(cam)) + ": " + std::to_string(streams[c].size()) + " events, " +
                         std::to_string(rr.malformed) + " malformed lines");
    for (const auto& w : rr.warnings) s.log(LogLevel::Warn, "ingest", w);
  }
  auto run = prepare_run(streams[0], streams[1], rc.schedule, rc.sync, rc.pipeline, rc.camera_models, rc.layout);
  s.info("sync", "cam2 offset " + std::to_string(run.aligned.offset_us) + " us");
  std::size_t missing = 0;
  for (const auto& t : run.trials) missing += t.missing;
  s.info("segment", std::to_string(run.trials.size()) + " trials, " + std::to_string(missing) + " missing");
  if (missing > 0) s.log(LogLevel::Warn, "segment", std::to_string(missing) + " trials outside the recording");
  return run;
}

std::size_t count_valid(std::span<const LocalizationResult> results) {
  std::size_t n = 0;
  for (const auto& r : results) n += r.valid();
  return n;
}

EvaluationReport evaluate_results(std::span<const LocalizationResult> results, const RunConfig& rc,
                                  std::optional<int> holdout) {
  const auto inputs = evaluation_inputs(results, holdout);
  return evaluate(inputs, rc.layout, std::numeric_limits<double>::quiet_NaN(), rc.taxel_convention);
}

}  // namespace

CommandOutcome cmd_simulate(const CommandOptions& options) {
  return guarded(options, [&](Session& s) {
    if (options.config.empty()) throw ConfigError("--config is required");
    auto cfg = simulate_config_from_json(read_json_file(options.config));
    if (options.seed) cfg.synth.seed = *options.seed;
    s.info("config", "seed " + std::to_string(cfg.synth.seed));
    const auto out = generate(cfg.synth, options.threads);
    s.info("synth", "generated " + std::to_string(out.cam1.size()) + " + " + std::to_string(out.cam2.size()) +
                        " events");

    const char* ext = cfg.event_format == EventFormat::Bin ? ".bin" : ".csv";
    const auto cam1_path = s.report(std::string("cam1") + ext);
    const auto cam2_path = s.report(std::string("cam2") + ext);
    write_events(out.cam1, cam1_path, cfg.event_format);
    write_events(out.cam2, cam2_path, cfg.event_format);
    write_json_file(to_json(out.truth), s.report("truth.json"));

    Json run = cfg.run_overrides;
    run["schema_version"] = kSchemaVersion;
    run["camera_files"] = Json::array({cam1_path.filename().string(), cam2_path.filename().string()});
    run["layout"] = to_json(cfg.synth.layout);
    run["sync"] = to_json(cfg.synth.sync);
    run["schedule"] = to_json(cfg.synth.effective_schedule());
    if (!run.contains("camera_models")) run["camera_models"] = to_json(cfg.synth.models);
    if (!run.contains("seed")) run["seed"] = cfg.synth.seed;
    if (!run.contains("pipeline")) {
      PipelineParams p;
      p.roi = cfg.synth.roi;
      run["pipeline"] = to_json(p);
    }
    // Validates the overrides before writing.
    const auto rc = run_config_from_json(run, options.out_dir);
    write_json_file(to_json(rc, options.out_dir), s.report("run.json"));
  });
}

CommandOutcome cmd_localize(const CommandOptions& options) {
  return guarded(options, [&](Session& s) {
    const auto rc = load_config(options, s);
    const auto run = load_run(rc, s);
    const auto results = localize_trials(run.trials, run.models, run.params, {}, options.threads);
    const auto n_valid = count_valid(results);
    s.info("localize", std::to_string(n_valid) + " of " + std::to_string(results.size()) + " presses localized");

    write_json_file(trial_manifest_json(run.trials), s.report("trials.json"));
    write_localization_csv(results, s.report("localization.csv"));
    if (n_valid == 0) throw NoValidPressesError("localize: every press was excluded");
    const auto report = evaluate_results(results, rc, run.holdout_repetition);
    if (report.n_valid == 0) throw NoValidPressesError("localize: no valid presses in the evaluation set");
    write_json_file(to_json(report), s.report("evaluation.json"));
    write_per_press_csv(report, s.report("per_press_errors.csv"));
    s.info("evaluate", "rmse " + fmt_num(report.rmse_mm) + " mm, pass rate " + fmt_num(report.pass_rate_percent) + "%");
  });
}

CommandOutcome cmd_calibrate(const CommandOptions& options) {
  return guarded(options, [&](Session& s) {
    const auto rc = load_config(options, s);
    auto run = load_run(rc, s);
    const int train = rc.calibration.train_repetition;
    if (train < 0 || train >= rc.layout.repetitions) throw ConfigError("calibration.train_repetition out of range");

    std::vector<PressTrial> train_trials;
    for (const auto& t : run.trials) {
      if (t.repetition == train) train_trials.push_back(t);
    }
    const auto initial = localize_trials(train_trials, rc.camera_models, rc.pipeline, {}, options.threads);
    const auto obs = calibration_observations(initial, train, rc.calibration.excluded_trials);
    s.info("calibrate", std::to_string(obs.size()) + " observations from repetition " + std::to_string(train));
    if (obs.size() < rc.calibration.options.min_observations) {
      throw CalibrationError("calibrate: only " + std::to_string(obs.size()) + " usable observations");
    }
    const auto fit = calibrate(rc.camera_models, obs, rc.calibration.options);
    s.info("calibrate", "rmse " + fmt_num(fit.initial_rmse_mm) + " -> " + fmt_num(fit.rmse_mm) + " mm in " +
                            std::to_string(fit.iterations) + " iterations");
    write_json_file(calibration_report_json(fit, rc.camera_models, obs.size()), s.report("calibrated_models.json"));

    // Held-out evaluation with the fitted models.
    std::optional<int> holdout;
    if (rc.layout.repetitions > 1) holdout = train;
    const auto results = localize_trials(run.trials, fit.models, rc.pipeline, {}, options.threads);
    const auto report = evaluate_results(results, rc, holdout);
    if (report.n_valid == 0) throw NoValidPressesError("calibrate: no valid held-out presses");
    write_json_file(to_json(report), s.report("evaluation.json"));
    write_per_press_csv(report, s.report("per_press_errors.csv"));
    s.info("evaluate", "held-out rmse " + fmt_num(report.rmse_mm) + " mm");
  });
}

CommandOutcome cmd_ablate(const CommandOptions& options) {
  return guarded(options, [&](Session& s) {
    const auto rc = load_config(options, s);
    const auto run = load_run(rc, s);
    SweepOptions so;
    so.factors = options.factors ? *options.factors : rc.ablation.factors;
    so.seeds = sweep_seeds(rc.seed, options.n_seeds ? *options.n_seeds : rc.ablation.n_seeds);
    so.per_k_reference = rc.ablation.per_k_reference;
    so.threads = options.threads;
    for (const auto k : so.factors) {
      if (k < 1) throw ConfigError("--factors must be >= 1");
    }
    if (so.seeds.empty()) throw ConfigError("--seeds must be >= 1");
    const auto sweep = run_sweep(run, so);
    for (const auto& c : sweep.curve) {
      s.info("ablate", "k=" + std::to_string(c.k) + " pass " + fmt_num(c.mean_pass_rate) + "% rmse " +
                           fmt_num(c.mean_rmse_mm) + " mm");
    }
    write_sweep_csv(sweep, s.report("sweep.csv"));
    write_curve_csv(sweep, s.report("curve.csv"));
    write_json_file(to_json(sweep), s.report("ablation.json"));
  });
}

CommandOutcome cmd_latency(const CommandOptions& options) {
  return guarded(options, [&](Session& s) {
    const auto rc = load_config(options, s);
    const auto run = load_run(rc, s);
    if (options.h && options.tune) throw ConfigError("--h and --tune are mutually exclusive");
    LatencyTrialOptions lto;
    lto.pre_roll_s = rc.latency.pre_roll_s;
    lto.idle_offset_s = rc.latency.idle_offset_s;
    lto.thin_k = rc.latency.thin_k;
    lto.thin_seed = rc.seed;
    const auto trials = build_latency_trials(run.aligned.cam1, run.aligned.cam2, run.trials, rc.latency.cusum, lto);
    s.info("latency", std::to_string(trials.presses.size()) + " press and " +
                          std::to_string(trials.background.size()) + " background snippets");

    std::optional<double> h = options.h;
    if (!h && !options.tune) h = rc.latency.h;
    std::vector<RocPoint> roc;
    if (h) {
      roc = roc_curve(trials.presses, trials.background, rc.latency.cusum);
    } else {
      try {
        auto tuned = tune_threshold(trials.presses, trials.background, rc.latency.cusum);
        h = tuned.h;
        roc = std::move(tuned.roc);
        s.info("latency", "tuned h " + fmt_num(*h) + " (tpr " + fmt_num(tuned.tpr) + ")");
      } catch (const TuningError& e) {
        throw ConfigError(e.what());
      }
    }
    const auto report = latency_report(trials.presses, trials.background, *h, rc.latency.cusum);
    s.info("latency", "width " + fmt_num(report.latency_width_ms) + " ms, tpr " + fmt_num(report.tpr) +
                          ", false alarms " + fmt_num(report.false_alarm_rate_per_s) + "/s");
    write_json_file(to_json(report), s.report("latency.json"));
    write_onsets_csv(report, s.report("onsets.csv"));
    write_roc_csv(roc, s.report("roc.csv"));
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Event-based opto-tactile localization"};
  app.require_subcommand(1);
  app.fallthrough();

  CommandOptions opts;
  std::string log_level = "info";
  std::uint64_t seed = 0;
  double h = 0.0;
  std::size_t n_seeds = 0;
  std::vector<std::uint32_t> factors;
  std::string models;

  app.add_option("--config", opts.config, "Configuration JSON")->required();
  app.add_option("--out", opts.out_dir, "Output directory");
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--log-level", log_level, "debug|info|warn|error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic recording");
  auto* loc = app.add_subcommand("localize", "Localize every press and evaluate");
  auto* cal = app.add_subcommand("calibrate", "Fit camera models on the training repetition");
  auto* abl = app.add_subcommand("ablate", "Data-reduction sweep");
  auto* lat = app.add_subcommand("latency", "Detection latency analysis");
  auto* models_opt = app.add_option("--models", models, "Camera models JSON (calibrate output)");
  auto* factors_opt = abl->add_option("--factors", factors, "Reduction factors")->delimiter(',');
  auto* seeds_opt = abl->add_option("--seeds", n_seeds, "Number of thinning seeds")->check(CLI::PositiveNumber);
  lat->set_help_flag("--help", "Print this help message and exit");
  auto* h_opt = lat->add_option("--h", h, "Fixed CUSUM threshold");
  auto* tune_flag = lat->add_flag("--tune", opts.tune, "Tune the threshold by ROC");
  h_opt->excludes(tune_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    opts.log_level = parse_log_level(log_level);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  }
  opts.echo_log = true;
  if (*seed_opt) opts.seed = seed;
  if (*models_opt) opts.models = models;
  if (*factors_opt) opts.factors = factors;
  if (*seeds_opt) opts.n_seeds = n_seeds;
  if (*h_opt) opts.h = h;

  CommandOutcome outcome;
  if (*sim) outcome = cmd_simulate(opts);
  else if (*loc) outcome = cmd_localize(opts);
  else if (*cal) outcome = cmd_calibrate(opts);
  else if (*abl) outcome = cmd_ablate(opts);
  else if (*lat) outcome = cmd_latency(opts);

  for (const auto& p : outcome.reports) std::printf("%s\n", p.string().c_str());
  return outcome.exit_code;
}

}  // namespace optoskin
