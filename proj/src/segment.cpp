#include "optoskin/segment.hpp"

#include <algorithm>
#include <limits>

namespace optoskin {
namespace {

struct Extent {
  bool known{false};
  std::int64_t first{0};
  std::int64_t last{0};
};

Extent extent_of(const EventStream& a, const EventStream& b) {
  Extent ext;
  for (const auto* s : {&a, &b}) {
    if (s->empty()) continue;
    const auto first = s->aligned_time(0), last = s->aligned_time(s->size() - 1);
    if (!ext.known) {
      ext = {true, first, last};
    } else {
      ext.first = std::min(ext.first, first);
      ext.last = std::max(ext.last, last);
    }
  }
  return ext;
}

EventSlice slice_of(const EventStream& s, TimeWindow w) {
  const auto [lo, hi] = s.index_range(w.t0_us, w.t1_us);
  return EventSlice(s, lo, hi);
}

}  // namespace

std::vector<PressTrial> segment_by_schedule(const EventStream& cam1, const EventStream& cam2,
                                            const PressSchedule& schedule, std::int64_t origin_us,
                                            double baseline_s) {
  schedule.validate();
  const auto extent = extent_of(cam1, cam2);
  const auto duration_us = seconds_to_us(schedule.press_duration_s);
  const auto baseline_us = seconds_to_us(baseline_s);

  std::vector<PressTrial> trials;
  trials.reserve(schedule.presses.size());
  std::int64_t prev_end = std::numeric_limits<std::int64_t>::min();
  for (std::size_t i = 0; i < schedule.presses.size(); ++i) {
    const auto& p = schedule.presses[i];
    PressTrial trial;
    trial.trial_index = i;
    trial.press_index = p.press_index;
    trial.repetition = p.repetition;
    trial.ground_truth = p.ground_truth;
    trial.window.t0_us = origin_us + seconds_to_us(p.onset_s);
    trial.window.t1_us = trial.window.t0_us + duration_us;
    trial.baseline_window = {std::max(trial.window.t0_us - baseline_us, prev_end), trial.window.t0_us};
    prev_end = trial.window.t1_us;

    trial.missing = extent.known && (trial.window.t0_us < extent.first || trial.window.t1_us > extent.last + 1);
    if (!trial.missing) {
      trial.cam1 = slice_of(cam1, trial.window);
      trial.cam2 = slice_of(cam2, trial.window);
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

std::int64_t refine_onset(const PressTrial& trial, const EventStream& cam1, const EventStream& cam2,
                          const RefineOptions& options) {
  const auto bin_us = bin_width_us(options.bin_s);
  const auto nominal = trial.window.t0_us;
  const auto search_us = seconds_to_us(options.search_s);

  auto count_in = [&](std::int64_t a, std::int64_t b) {
    const auto [l1, h1] = cam1.index_range(a, b);
    const auto [l2, h2] = cam2.index_range(a, b);
    return static_cast<double>((h1 - l1) + (h2 - l2));
  };

  const auto& bw = trial.baseline_window;
  if (bw.t1_us <= bw.t0_us) return nominal;
  const double baseline_rate = count_in(bw.t0_us, bw.t1_us) / bw.duration_s();
  const double threshold = options.threshold_factor * baseline_rate;
  const double bin_s = us_to_seconds(bin_us);

  for (std::int64_t t = nominal - search_us; t < nominal + search_us; t += bin_us) {
    if (count_in(t, t + bin_us) / bin_s > threshold) return t;
  }
  return nominal;
}

PressTrial reslice(const PressTrial& trial, const EventStream& cam1, const EventStream& cam2, std::int64_t t0_us) {
  PressTrial out = trial;
  const auto duration = trial.window.t1_us - trial.window.t0_us;
  out.window = {t0_us, t0_us + duration};
  out.baseline_window.t1_us = std::min(out.baseline_window.t1_us, t0_us);
  out.baseline_window.t0_us = std::min(out.baseline_window.t0_us, out.baseline_window.t1_us);
  if (!out.missing) {
    out.cam1 = slice_of(cam1, out.window);
    out.cam2 = slice_of(cam2, out.window);
  }
  return out;
}

}  // namespace optoskin
