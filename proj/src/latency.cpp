#include "optoskin/latency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "optoskin/ablate.hpp"
#include "optoskin/error.hpp"
#include "optoskin/metrics.hpp"

namespace optoskin {

void CusumParams::validate() const {
  if (!(bin_s > 0) || !(sigma_s >= 0) || !(rate_multiplier > 1) || min_consecutive_bins < 1 ||
      !(detect_window_s > 0) || !(cooldown_s >= 0) || !(h >= 0) || !(false_alarm_budget_per_s >= 0)) {
    throw ConfigError("cusum parameters out of range");
  }
}

std::vector<double> gaussian_kernel(double sigma_s, double bin_s) {
  const double sigma_bins = sigma_s / bin_s;
  if (!(sigma_bins >= 0.5)) return {1.0};
  const auto radius = static_cast<int>(std::ceil(4.0 * sigma_bins - 1e-9));  // immune to bin_s rounding
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i / sigma_bins) * (i / sigma_bins));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (auto& w : k) w /= total;
  return k;
}

RateSeries smoothed_rate(std::span<const std::int64_t> times_us, TimeWindow window, double bin_s, double sigma_s) {
  const auto bin_us = bin_width_us(bin_s);
  const auto kernel = gaussian_kernel(sigma_s, us_to_seconds(bin_us));
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  const auto n_bins = static_cast<std::size_t>(std::max<std::int64_t>(0, (window.t1_us - window.t0_us) / bin_us));

  RateSeries out;
  out.start_s = us_to_seconds(window.t0_us);
  out.bin_s = us_to_seconds(bin_us);
  out.values.assign(n_bins, 0.0);
  if (n_bins == 0) return out;

  const auto padded = n_bins + 2 * static_cast<std::size_t>(radius);
  const auto counts = bin_counts(times_us, window.t0_us - radius * bin_us, bin_us, padded);
  for (std::size_t i = 0; i < n_bins; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kernel.size(); ++j) acc += kernel[j] * static_cast<double>(counts[i + j]);
    out.values[i] = acc / out.bin_s;
  }
  return out;
}

BaselineStats estimate_baseline(const RateWindow& baseline, const CusumParams& params) {
  const double duration = baseline.window.duration_s();
  BaselineStats stats;
  if (!(duration > 0)) {
    stats.mu0 = 1.0 / std::max(params.bin_s, 1e-9);
  } else {
    std::size_t inside = 0;
    for (auto t : baseline.times_us) inside += (t >= baseline.window.t0_us && t < baseline.window.t1_us) ? 1 : 0;
    stats.mu0 = static_cast<double>(std::max<std::size_t>(inside, 1)) / duration;
    const auto series = smoothed_rate(baseline.times_us, baseline.window, params.bin_s, params.sigma_s);
    if (series.size() > 1) {
      double mean = 0.0;
      for (double x : series.values) mean += x;
      mean /= double(series.size());
      double ss = 0.0;
      for (double x : series.values) ss += (x - mean) * (x - mean);
      stats.sigma0 = std::sqrt(ss / double(series.size() - 1));
    }
  }
  if (!(stats.sigma0 > 0)) {
    const auto kernel = gaussian_kernel(params.sigma_s, params.bin_s);
    double w2 = 0.0;
    for (double w : kernel) w2 += w * w;
    stats.sigma0 = std::sqrt(stats.mu0 / params.bin_s * w2);
  }
  return stats;
}

std::vector<double> cusum_statistic(const RateSeries& rate, double mu0, const CusumParams& params) {
  const double drift = 0.5 * (mu0 + params.rate_multiplier * mu0);
  std::vector<double> s(rate.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    acc = std::max(0.0, acc + rate.values[i] - drift);
    s[i] = acc;
  }
  return s;
}

std::vector<double> cusum_onsets(const RateSeries& rate, double mu0, double sigma0, const CusumParams& params) {
  const double drift = 0.5 * (mu0 + params.rate_multiplier * mu0);
  const double threshold = params.h * sigma0;
  std::vector<double> onsets;
  double s = 0.0;
  int run = 0;
  std::size_t run_start = 0;
  double quiet_until = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rate.size(); ++i) {
    const double t = rate.bin_start(i);
    if (t < quiet_until) {
      s = 0.0;
      run = 0;
      continue;
    }
    s = std::max(0.0, s + rate.values[i] - drift);
    if (s > threshold) {
      if (run++ == 0) run_start = i;
      if (run >= params.min_consecutive_bins) {
        const double onset = rate.bin_start(run_start);
        onsets.push_back(onset);
        s = 0.0;
        run = 0;
        quiet_until = onset + params.cooldown_s;
      }
    } else {
      run = 0;
    }
  }
  return onsets;
}

namespace {

struct Prepared {
  RateSeries rate;
  BaselineStats baseline;
  double window_start_s{0.0};
  double duration_s{0.0};
};

std::vector<Prepared> prepare(std::span<const LatencyTrial> trials, const CusumParams& params) {
  std::vector<Prepared> out;
  out.reserve(trials.size());
  for (const auto& tr : trials) {
    Prepared p;
    p.rate = smoothed_rate(tr.stimulus.times_us, tr.stimulus.window, params.bin_s, params.sigma_s);
    p.baseline = estimate_baseline(tr.baseline, params);
    p.window_start_s = us_to_seconds(tr.stimulus.window.t0_us);
    p.duration_s = tr.stimulus.window.duration_s();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::optional<double>> first_onsets(const std::vector<Prepared>& trials, const CusumParams& params) {
  std::vector<std::optional<double>> onsets(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto all = cusum_onsets(trials[i].rate, trials[i].baseline.mu0, trials[i].baseline.sigma0, params);
    if (!all.empty()) onsets[i] = all.front() - trials[i].window_start_s;
  }
  return onsets;
}

struct Detection {
  double median{0.0};
  double tpr{0.0};
  std::vector<bool> true_positive;
};

Detection classify(const std::vector<std::optional<double>>& onsets, double window_s) {
  Detection d;
  d.true_positive.assign(onsets.size(), false);
  std::vector<double> found;
  for (const auto& o : onsets) {
    if (o) found.push_back(*o);
  }
  if (found.empty() || onsets.empty()) return d;
  d.median = percentile(found, 50.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (onsets[i] && std::abs(*onsets[i] - d.median) <= window_s) {
      d.true_positive[i] = true;
      ++hits;
    }
  }
  d.tpr = double(hits) / double(onsets.size());
  return d;
}

double false_alarm_rate(const std::vector<Prepared>& background, const CusumParams& params) {
  double duration = 0.0;
  std::size_t alarms = 0;
  for (const auto& b : background) {
    alarms += cusum_onsets(b.rate, b.baseline.mu0, b.baseline.sigma0, params).size();
    duration += b.duration_s;
  }
  return duration > 0 ? double(alarms) / duration : 0.0;
}

}  // namespace

std::vector<double> default_h_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(std::pow(10.0, -2.0 + i / 10.0));
  return grid;
}

std::vector<RocPoint> roc_curve(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background,
                                const CusumParams& params, std::span<const double> grid) {
  const auto h_grid = grid.empty() ? default_h_grid() : std::vector<double>(grid.begin(), grid.end());
  const auto press = prepare(trials, params);
  const auto idle = prepare(background, params);
  std::vector<RocPoint> roc;
  for (double h : h_grid) {
    CusumParams p = params;
    p.h = h;
    p.validate();
    roc.push_back({h, classify(first_onsets(press, p), p.detect_window_s).tpr, false_alarm_rate(idle, p)});
  }
  return roc;
}

TuningResult tune_threshold(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background,
                            const CusumParams& params, std::span<const double> grid) {
  params.validate();
  if (trials.size() < 20) throw TuningError("tune_threshold: need at least 20 press trials", 0.0);

  TuningResult result;
  result.roc = roc_curve(trials, background, params, grid);
  std::optional<RocPoint> best;
  double best_tpr = 0.0;
  bool best_in_budget = false;
  for (const auto& point : result.roc) {
    best_tpr = std::max(best_tpr, point.tpr);
    if (point.tpr < 0.95) continue;
    const bool in_budget = point.false_alarm_rate_per_s <= params.false_alarm_budget_per_s;
    bool better = !best;
    if (best && in_budget != best_in_budget) {
      better = in_budget;
    } else if (best && in_budget) {
      better = point.h < best->h;
    } else if (best) {
      better = point.false_alarm_rate_per_s < best->false_alarm_rate_per_s ||
               (point.false_alarm_rate_per_s == best->false_alarm_rate_per_s &&
                (point.tpr > best->tpr || (point.tpr == best->tpr && point.h < best->h)));
    }
    if (better) {
      best = point;
      best_in_budget = in_budget;
    }
  }
  if (!best) {
    throw TuningError("tune_threshold: no threshold reaches 95% TPR (best " + std::to_string(best_tpr) + ")", best_tpr);
  }
  result.h = best->h;
  result.tpr = best->tpr;
  result.false_alarm_rate_per_s = best->false_alarm_rate_per_s;
  return result;
}

LatencyReport latency_report(std::span<const LatencyTrial> trials, std::span<const LatencyTrial> background, double h,
                             const CusumParams& params) {
  CusumParams p = params;
  p.h = h;
  p.validate();
  const auto press = prepare(trials, p);
  const auto onsets = first_onsets(press, p);
  const auto det = classify(onsets, p.detect_window_s);

  LatencyReport rep;
  rep.h_used = h;
  rep.median_onset_s = det.median;
  rep.tpr = det.tpr;
  rep.true_positive = det.true_positive;
  std::vector<double> tp;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (onsets[i]) rep.onsets_s.push_back(*onsets[i] - det.median);
    else rep.onsets_s.push_back(std::nullopt);
    if (det.true_positive[i]) tp.push_back(*onsets[i]);
  }
  if (tp.empty()) throw UndefinedMetricError("latency_report: no true-positive detections");
  rep.latency_width_ms = 1000.0 * (percentile(tp, 95.0) - percentile(tp, 5.0));

  rep.cooldown_s = rep.latency_width_ms / 1000.0;
  CusumParams fa = p;
  fa.cooldown_s = rep.cooldown_s;
  rep.false_alarm_rate_per_s = false_alarm_rate(prepare(background, fa), fa);
  return rep;
}

LatencyTrials build_latency_trials(const EventStream& cam1, const EventStream& cam2,
                                   std::span<const PressTrial> trials, const CusumParams& params,
                                   const LatencyTrialOptions& options) {
  if (!(options.pre_roll_s >= 0) || !(options.idle_offset_s >= 0) || options.thin_k < 1) {
    throw ConfigError("latency trial options out of range");
  }
  const auto margin = seconds_to_us(4.0 * params.sigma_s + 2.0 * params.bin_s);

  auto merged = [&](TimeWindow w) {
    RateWindow rw;
    rw.window = w;
    for (const auto* s : {&cam1, &cam2}) {
      const auto [lo, hi] = s->index_range(w.t0_us - margin, w.t1_us + margin);
      const auto ev = s->events();
      for (std::size_t i = lo; i < hi; ++i) {
        if (options.thin_k > 1 && !keep_event(s->camera(), ev[i].ordinal, options.thin_k, options.thin_seed)) continue;
        rw.times_us.push_back(s->aligned_time(i));
      }
    }
    std::sort(rw.times_us.begin(), rw.times_us.end());
    return rw;
  };

  const auto pre = seconds_to_us(options.pre_roll_s);
  LatencyTrials out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& tr = trials[i];
    if (tr.missing || tr.baseline_window.t1_us <= tr.baseline_window.t0_us) continue;
    const TimeWindow base{tr.baseline_window.t0_us - pre, tr.baseline_window.t1_us - pre};
    const TimeWindow stim{tr.window.t0_us - pre, tr.window.t1_us};
    out.presses.push_back({merged(base), merged(stim)});

    // Idle snippet of the same length, preceded by its own baseline, between
    // this press and the next one's baseline.
    const auto b0 = tr.window.t1_us + seconds_to_us(options.idle_offset_s);
    const TimeWindow idle_base{b0, b0 + (base.t1_us - base.t0_us)};
    const TimeWindow idle{idle_base.t1_us, idle_base.t1_us + (stim.t1_us - stim.t0_us)};
    const bool fits = i + 1 < trials.size() && idle.t1_us <= trials[i + 1].baseline_window.t0_us - pre;
    if (fits) out.background.push_back({merged(idle_base), merged(idle)});
  }
  return out;
}

}  // namespace optoskin
