#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optoskin/cluster.hpp"
#include "optoskin/geometry.hpp"
#include "optoskin/ingest.hpp"
#include "optoskin/metrics.hpp"
#include "optoskin/segment.hpp"

namespace optoskin {

struct PipelineParams {
  RoiBand roi;
  DbscanParams dbscan;
  double baseline_s{0.3};
  bool refine_onsets{false};
  RefineOptions refine;
};

struct CameraObservation {
  bool valid{false};
  std::size_t n_events{0};  // after ROI crop (and thinning)
  std::size_t n_clusters{0};
  std::size_t cluster_size{0};
  double centroid_u{0.0};
  double centroid_v{0.0};
};

enum class PressStatus { Localized, Excluded, Degenerate, Missing };
const char* to_string(PressStatus s);

struct LocalizationResult {
  std::size_t trial_index{0};
  int press_index{0};
  int repetition{0};
  Point2 ground_truth;
  std::array<CameraObservation, 2> cams{};
  PressStatus status{PressStatus::Missing};
  std::string reason;
  std::optional<Triangulation> triangulation;
  double error_mm{0.0};  // NaN unless localized

  bool valid() const { return status == PressStatus::Localized; }
};

struct Thinning {
  std::uint32_t k{1};
  std::uint64_t seed{0};
};

/// Crop, (optionally thin), cluster and triangulate each trial. Trials are
/// processed in parallel over `threads` workers; results are in trial order.
std::vector<LocalizationResult> localize_trials(std::span<const PressTrial> trials, const CameraPair& models,
                                                const PipelineParams& params, Thinning thinning = {},
                                                int threads = 1);

/// Synchronized, segmented recording plus the models used to localize it.
struct PipelineRun {
  AlignedPair aligned;
  std::vector<PressTrial> trials;
  CameraPair models;
  PipelineParams params;
  SensorLayout layout;
  /// Repetition reserved for calibration and left out of evaluation.
  std::optional<int> holdout_repetition;
};

/// Align, segment and (optionally) refine onsets. Throws SyncError.
PipelineRun prepare_run(const EventStream& cam1, const EventStream& cam2, const PressSchedule& schedule,
                        const SyncSpec& sync, const PipelineParams& params, const CameraPair& models,
                        const SensorLayout& layout);

/// Evaluation rows for the trials that count toward accuracy statistics.
std::vector<EvaluationInput> evaluation_inputs(std::span<const LocalizationResult> results,
                                               std::optional<int> holdout_repetition);

/// Calibration observations from one repetition's localized presses, minus
/// any manually excluded trial indices.
std::vector<CalibrationObservation> calibration_observations(std::span<const LocalizationResult> results,
                                                             int repetition,
                                                             std::span<const std::size_t> excluded_trials = {});

double mean_cluster_size(std::span<const LocalizationResult> results);

}  // namespace optoskin
