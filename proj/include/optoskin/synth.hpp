#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "optoskin/events.hpp"
#include "optoskin/geometry.hpp"
#include "optoskin/ingest.hpp"

namespace optoskin {

/// Shape of a burst's event intensity over the press window: linear rise,
/// flat plateau, linear fall (fractions of the window, summing to one).
struct RateProfile {
  double rise{0.05};
  double plateau{0.75};
  double fall{0.20};
};

struct SynthSpec {
  SensorLayout layout = SensorLayout::meander();
  CameraPair models = CameraModel::default_pair();
  /// Explicit schedule; when absent, PressSchedule::regular(layout, sync, press_period_s).
  std::optional<PressSchedule> schedule;
  double press_period_s{3.7};
  SyncSpec sync;
  double tap_start_s{2.0};
  double tail_s{1.0};
  double camera2_offset_s{0.0};

  double burst_events_per_press_per_camera{15000.0};
  double sigma_u_px{3.0};
  /// 0 draws v uniformly over the ROI band; otherwise a rounded normal
  /// around v_center_px clamped to the band.
  double sigma_v_px{0.0};
  double v_center_px{280.0};
  /// Per press and camera displacement of the burst center (pixels); Student-t
  /// with center_jitter_dof degrees of freedom, or normal when dof is 0.
  double center_jitter_px{0.0};
  double center_jitter_dof{0.0};
  /// Actual burst onsets lag the nominal schedule by U[0, onset_jitter_s).
  double onset_jitter_s{0.0};
  RateProfile profile;
  double background_rate_per_camera{4550.0};
  RoiBand roi;
  /// Optional per schedule entry multiplier of the burst mean count.
  std::vector<double> press_count_scale;
  /// Optional position-dependent multiplier of the burst mean count.
  std::function<double(Point2, CameraId)> count_scale;
  std::uint64_t seed{1};

  PressSchedule effective_schedule() const;
  void validate() const;
};

inline constexpr std::int32_t kBackgroundSource = -1;
/// Tap i is recorded as source -2 - i.
inline constexpr std::int32_t tap_source(int i) { return -2 - i; }

struct PressTruth {
  std::size_t trial_index{0};
  int press_index{0};
  int repetition{0};
  Point2 ground_truth;
  double onset_s{0.0};  // actual burst onset, cam1 clock
  std::array<std::optional<double>, 2> u_ideal{};  // projection of the ground truth
  std::array<double, 2> u_center{};                // burst center after jitter
  std::array<std::size_t, 2> n_events{};
  bool in_view{true};
};

struct TruthManifest {
  std::uint64_t seed{0};
  double camera2_offset_s{0.0};
  std::vector<double> tap_onsets_s;  // cam1 clock
  std::vector<PressTruth> presses;
  /// Generating source of every event, parallel to each stream's events:
  /// trial index, kBackgroundSource, or tap_source(i).
  std::array<std::vector<std::int32_t>, 2> sources;
};

struct SynthOutput {
  EventStream cam1;
  EventStream cam2;
  TruthManifest truth;
};

/// Deterministic in (spec, seed): every burst and background chunk draws from
/// its own keyed generator, so the thread count never changes the output.
SynthOutput generate(const SynthSpec& spec, int threads = 1);

/// Events of the synchronization taps for one camera (cam1 clock, unsorted).
std::vector<Event> generate_sync_taps(const SynthSpec& spec, CameraId camera);

}  // namespace optoskin
