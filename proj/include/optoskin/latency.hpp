#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "optoskin/events.hpp"
#include "optoskin/segment.hpp"

namespace optoskin {

struct CusumParams {
  double bin_s{0.0002};
  double sigma_s{0.0005};
  double rate_multiplier{4.0};
  int min_consecutive_bins{3};
  double h{1.0};
  double detect_window_s{0.1};
  double cooldown_s{0.031};
  /// Tuning target for background alarms (per second).
  double false_alarm_budget_per_s{0.13};

  void validate() const;
};

/// Merged (both cameras) aligned timestamps around one analysis window.
/// `times_us` may extend past the window so smoothing sees its neighbors.
struct RateWindow {
  std::vector<std::int64_t> times_us;
  TimeWindow window;
};

struct LatencyTrial {
  RateWindow baseline;
  RateWindow stimulus;
};

/// Normalized Gaussian taps truncated at +-4 sigma (a single tap when sigma
/// is below half a bin).
std::vector<double> gaussian_kernel(double sigma_s, double bin_s);

/// Histogram of `times_us` over `window` at `bin_s`, in events/s, convolved
/// with gaussian_kernel. Events outside the window contribute to edge bins.
RateSeries smoothed_rate(std::span<const std::int64_t> times_us, TimeWindow window, double bin_s, double sigma_s);

struct BaselineStats {
  double mu0{0.0};
  double sigma0{0.0};
};

/// Mean rate and per-bin sd of the smoothed baseline. An empty baseline is
/// floored to one event per window; a zero sd is replaced by the Poisson sd
/// of the smoothed series at mu0.
BaselineStats estimate_baseline(const RateWindow& baseline, const CusumParams& params);

/// One-sided CUSUM S_t = max(0, S_{t-1} + x_t - (mu0 + mu1) / 2) with
/// mu1 = rate_multiplier * mu0. An onset (seconds, series time) is the first
/// bin of min_consecutive_bins bins with S_t > h * sigma0; S then resets and
/// no alarm is raised for cooldown_s.
std::vector<double> cusum_onsets(const RateSeries& rate, double mu0, double sigma0, const CusumParams& params);

/// The CUSUM statistic without alarms or resets.
std::vector<double> cusum_statistic(const RateSeries& rate, double mu0, const CusumParams& params);

struct RocPoint {
  double h{0.0};
  double tpr{0.0};
  double false_alarm_rate_per_s{0.0};
};

struct TuningResult {
  double h{0.0};
  double tpr{0.0};
  double false_alarm_rate_per_s{0.0};
  std::vector<RocPoint> roc;
};

/// 61 log-spaced thresholds from 1e-2 to 1e4.
std::vector<double> default_h_grid();

/// TPR and background false-alarm rate at every threshold of `grid` (the
/// default grid when empty).
std::vector<RocPoint> roc_curve(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background,
                                const CusumParams& params, std::span<const double> grid = {});

/// Picks h from `grid` so that >= 95% of press trials have their first onset
/// within detect_window_s of the population median onset. Among those, the
/// smallest h within false_alarm_budget_per_s wins; when none is within
/// budget, the lowest false-alarm rate, then the higher TPR, then the smaller
/// h. Throws TuningError when no grid value reaches 95%.
TuningResult tune_threshold(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background,
                            const CusumParams& params, std::span<const double> grid = {});

struct LatencyReport {
  std::vector<std::optional<double>> onsets_s;  // first onset per trial, relative to the median
  std::vector<bool> true_positive;
  double median_onset_s{0.0};  // relative to the stimulus window start
  double tpr{0.0};
  double latency_width_ms{0.0};
  double false_alarm_rate_per_s{0.0};
  double cooldown_s{0.0};
  double h_used{0.0};
};

/// Throws UndefinedMetricError when no trial is a true positive. The
/// false-alarm cooldown is the measured latency width.
LatencyReport latency_report(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background, double h,
                             const CusumParams& params);

struct LatencyTrials {
  std::vector<LatencyTrial> presses;
  std::vector<LatencyTrial> background;
};

struct LatencyTrialOptions {
  /// Stimulus windows open this long before the scheduled onset, with the
  /// baseline shifted along, so a late schedule still shows the rise.
  double pre_roll_s{0.05};
  /// Idle snippets start this long after each press window ends.
  double idle_offset_s{1.0};
  std::uint32_t thin_k{1};
  std::uint64_t thin_seed{0};
};

/// Press trials and matching idle snippets cut from aligned recordings, both
/// cameras merged.
LatencyTrials build_latency_trials(const EventStream& cam1, const EventStream& cam2,
                                   std::span<const PressTrial> trials, const CusumParams& params,
                                   const LatencyTrialOptions& options = {});

}  // namespace optoskin
