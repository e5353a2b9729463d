#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "optoskin/ablate.hpp"
#include "optoskin/geometry.hpp"
#include "optoskin/ingest.hpp"
#include "optoskin/latency.hpp"
#include "optoskin/metrics.hpp"
#include "optoskin/pipeline.hpp"
#include "optoskin/synth.hpp"

namespace optoskin {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct CalibrationSettings {
  CalibrationOptions options;
  int train_repetition{0};
  std::vector<std::size_t> excluded_trials;
};

struct AblationSettings {
  std::vector<std::uint32_t> factors = SweepOptions{}.factors;
  std::size_t n_seeds{5};
  bool per_k_reference{false};
};

struct LatencySettings {
  CusumParams cusum;
  /// Fixed threshold; tuned by ROC when absent.
  std::optional<double> h;
  double pre_roll_s{0.05};
  double idle_offset_s{1.0};
  std::uint32_t thin_k{1};
};

struct RunConfig {
  std::array<std::filesystem::path, 2> camera_files;
  SensorLayout layout = SensorLayout::meander();
  SyncSpec sync;
  PressSchedule schedule;
  CameraPair camera_models = CameraModel::default_pair();
  PipelineParams pipeline;
  TaxelConvention taxel_convention{TaxelConvention::CircleArea};
  CalibrationSettings calibration;
  AblationSettings ablation;
  LatencySettings latency;
  std::uint64_t seed{1};

  /// Throws ConfigError on inconsistent fields.
  void validate() const;
};

/// Parses a JSON file; syntax errors become ConfigError with line and column.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& doc, const std::filesystem::path& path);

Json to_json(const CameraModel& m);
CameraModel camera_model_from_json(const Json& j);
Json to_json(const CameraPair& models);
CameraPair camera_pair_from_json(const Json& j);
Json to_json(const SensorLayout& layout);
SensorLayout layout_from_json(const Json& j);
Json to_json(const SyncSpec& sync);
SyncSpec sync_from_json(const Json& j);
Json to_json(const PressSchedule& schedule);
PressSchedule schedule_from_json(const Json& j, const SensorLayout& layout, const SyncSpec& sync);
Json to_json(const PipelineParams& params);
PipelineParams pipeline_from_json(const Json& j);
Json to_json(const CusumParams& params);
CusumParams cusum_from_json(const Json& j);

/// Relative camera paths resolve against `base_dir`.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir);
/// Camera paths are written relative to `base_dir` when they lie below it.
Json to_json(const RunConfig& config, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Synthetic recording description plus simulate-only options.
struct SimulateConfig {
  SynthSpec synth;
  EventFormat event_format{EventFormat::Csv};
  /// Run settings merged into the generated run configuration.
  Json run_overrides = Json::object();
};
SimulateConfig simulate_config_from_json(const Json& j);
Json to_json(const SynthSpec& spec);
Json to_json(const TruthManifest& truth);

Json to_json(const EvaluationReport& report);
Json calibration_report_json(const CalibrationResult& fit, const CameraPair& initial, std::size_t n_observations);
Json to_json(const LatencyReport& report);
Json trial_manifest_json(std::span<const PressTrial> trials);
Json to_json(const AblationSweep& sweep);

/// CSV tables; every writer emits a header line even with no rows.
void write_per_press_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_localization_csv(std::span<const LocalizationResult> results, const std::filesystem::path& path);
void write_sweep_csv(const AblationSweep& sweep, const std::filesystem::path& path);
void write_curve_csv(const AblationSweep& sweep, const std::filesystem::path& path);
void write_onsets_csv(const LatencyReport& report, const std::filesystem::path& path);
void write_roc_csv(std::span<const RocPoint> roc, const std::filesystem::path& path);

/// Shortest decimal that round-trips; "nan"/"inf" spelled out.
std::string format_double(double x);

}  // namespace optoskin
