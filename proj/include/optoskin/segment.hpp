#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "optoskin/events.hpp"
#include "optoskin/ingest.hpp"

namespace optoskin {

/// Half-open interval of aligned time in microseconds.
struct TimeWindow {
  std::int64_t t0_us{0};
  std::int64_t t1_us{0};

  double duration_s() const { return us_to_seconds(t1_us - t0_us); }
};

struct PressTrial {
  std::size_t trial_index{0};
  int press_index{0};
  int repetition{0};
  TimeWindow window;
  TimeWindow baseline_window;
  EventSlice cam1;
  EventSlice cam2;
  Point2 ground_truth;
  bool missing{false};

  const EventSlice& slice(CameraId c) const { return c == CameraId::Cam1 ? cam1 : cam2; }
};

/// One trial per schedule entry, windows placed at origin + onset. Baselines
/// span `baseline_s` before the onset, clipped at the previous press window.
/// Entries whose window is not covered by the recordings are flagged missing.
std::vector<PressTrial> segment_by_schedule(const EventStream& cam1, const EventStream& cam2,
                                            const PressSchedule& schedule, std::int64_t origin_us,
                                            double baseline_s = 0.3);

struct RefineOptions {
  double bin_s{0.01};
  double search_s{0.5};
  double threshold_factor{3.0};
};

/// Snaps the trial onset to the first bin within +-search_s of the nominal
/// onset whose combined-camera rate exceeds threshold_factor times the trial's
/// baseline mean rate. Returns the nominal onset when nothing qualifies.
std::int64_t refine_onset(const PressTrial& trial, const EventStream& cam1, const EventStream& cam2,
                          const RefineOptions& options = {});

/// The trial re-sliced so its window starts at `t0_us` (same duration).
PressTrial reslice(const PressTrial& trial, const EventStream& cam1, const EventStream& cam2, std::int64_t t0_us);

}  // namespace optoskin
