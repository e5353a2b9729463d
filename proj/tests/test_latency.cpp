#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "optoskin/error.hpp"
#include "optoskin/latency.hpp"
#include "optoskin/segment.hpp"
#include "optoskin/synth.hpp"
#include "support.hpp"

namespace optoskin {
namespace {

constexpr double kIdleRate = 9100.0;

/// Poisson arrivals at `rate` over [t0, t1) seconds, in microseconds.
void poisson(std::vector<std::int64_t>& out, double rate, double t0, double t1, std::mt19937_64& rng) {
  std::exponential_distribution<double> gap(rate);
  for (double t = t0 + gap(rng); t < t1; t += gap(rng)) out.push_back(seconds_to_us(t));
}

/// Baseline [0, 0.3) s, stimulus [0.3, 0.85) s with a step to `factor`
/// times the idle rate at `step_s` (absolute seconds).
LatencyTrial step_trial(double factor, double step_s, std::mt19937_64& rng) {
  std::vector<std::int64_t> t;
  poisson(t, kIdleRate, 0.0, step_s, rng);
  poisson(t, factor * kIdleRate, step_s, 0.9, rng);
  std::sort(t.begin(), t.end());
  LatencyTrial tr;
  tr.baseline = {t, {0, 300000}};
  tr.stimulus = {t, {300000, 850000}};
  return tr;
}

std::vector<LatencyTrial> idle_trials(std::size_t n, std::mt19937_64& rng) {
  std::vector<LatencyTrial> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(step_trial(1.0, 0.9, rng));
  return out;
}

TEST(GaussianKernel, NormalizedAndTruncated) {
  const auto k = gaussian_kernel(0.0005, 0.0002);
  EXPECT_EQ(k.size(), 2 * 10 + 1u);
  EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(gaussian_kernel(0.00009, 0.0002).size(), 1u);
}

TEST(SmoothedRate, ImpulseResponseHasUnitIntegral) {
  const std::vector<std::int64_t> one{50000};
  const auto r = smoothed_rate(one, {0, 100000}, 0.0002, 0.0005);
  double integral = 0;
  for (double v : r.values) integral += v * r.bin_s;
  EXPECT_NEAR(integral, 1.0, 1e-9);
  const auto peak = std::max_element(r.values.begin(), r.values.end()) - r.values.begin();
  EXPECT_EQ(peak, 250);
  const auto k = gaussian_kernel(0.0005, 0.0002);
  for (std::size_t j = 0; j < k.size(); ++j) EXPECT_NEAR(r.values[240 + j] * r.bin_s, k[j], 1e-12);
}

TEST(SmoothedRate, ZeroSigmaIsRawHistogram) {
  std::mt19937_64 rng(1);
  std::vector<std::int64_t> t;
  poisson(t, 5000, 0.0, 1.0, rng);
  const auto r = smoothed_rate(t, {0, 1000000}, 0.0002, 0.0);
  const auto counts = bin_counts(t, 0, 200, 5000);
  for (std::size_t i = 0; i < counts.size(); ++i) EXPECT_DOUBLE_EQ(r.values[i], counts[i] / 0.0002);
}

TEST(SmoothedRate, VarianceReducedByKernelFactor) {
  std::mt19937_64 rng(2);
  std::vector<std::int64_t> t;
  poisson(t, 20000, 0.0, 20.0, rng);
  const TimeWindow w{0, 20000000};
  const auto raw = smoothed_rate(t, w, 0.0002, 0.0);
  const auto smooth = smoothed_rate(t, w, 0.0002, 0.0005);
  auto var = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / double(v.size() - 1);
  };
  const auto k = gaussian_kernel(0.0005, 0.0002);
  double factor = 0;
  for (double x : k) factor += x * x;
  EXPECT_NEAR(var(smooth.values) / var(raw.values), factor, 0.05 * factor);
  const double mass_raw = std::accumulate(raw.values.begin(), raw.values.end(), 0.0);
  const double mass_smooth = std::accumulate(smooth.values.begin(), smooth.values.end(), 0.0);
  EXPECT_NEAR(mass_smooth / mass_raw, 1.0, 1e-3);
}

TEST(EstimateBaseline, PoissonScaleAndEmptyFloor) {
  std::mt19937_64 rng(3);
  const auto tr = step_trial(1.0, 0.9, rng);
  CusumParams p;
  const auto b = estimate_baseline(tr.baseline, p);
  EXPECT_NEAR(b.mu0, kIdleRate, 4 * std::sqrt(kIdleRate * 0.3) / 0.3);
  const auto k = gaussian_kernel(p.sigma_s, p.bin_s);
  double w2 = 0;
  for (double x : k) w2 += x * x;
  EXPECT_NEAR(b.sigma0, std::sqrt(kIdleRate / p.bin_s * w2), 0.1 * std::sqrt(kIdleRate / p.bin_s * w2));

  const RateWindow empty{{}, {0, 300000}};
  const auto e = estimate_baseline(empty, p);
  EXPECT_DOUBLE_EQ(e.mu0, 1.0 / 0.3);
  EXPECT_GT(e.sigma0, 0.0);
}

TEST(Cusum, StepDetectedWithinFiveMs) {
  std::mt19937_64 rng(4);
  CusumParams p;
  std::uniform_real_distribution<double> when(0.35, 0.7);
  for (int i = 0; i < 100; ++i) {
    const double step = when(rng);
    const auto tr = step_trial(4.0, step, rng);
    const auto b = estimate_baseline(tr.baseline, p);
    const auto rate = smoothed_rate(tr.stimulus.times_us, tr.stimulus.window, p.bin_s, p.sigma_s);
    const auto onsets = cusum_onsets(rate, b.mu0, b.sigma0, p);
    ASSERT_FALSE(onsets.empty());
    EXPECT_NEAR(onsets.front(), step, 0.005);
  }
}

TEST(Cusum, ZeroRateHasNoOnsets) {
  RateSeries r;
  r.bin_s = 0.0002;
  r.values.assign(5000, 0.0);
  EXPECT_TRUE(cusum_onsets(r, 100.0, 10.0, CusumParams{}).empty());
}

TEST(Cusum, StatisticNonNegativeAndOnsetsSpaced) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0, 1);
  CusumParams p;
  p.h = 0.5;
  p.cooldown_s = 0.004;
  for (int trial = 0; trial < 20; ++trial) {
    RateSeries r;
    r.bin_s = 0.0002;
    for (int i = 0; i < 20000; ++i) r.values.push_back(100.0 + 200.0 * std::abs(z(rng)) * (i % 700 < 100 ? 3 : 1));
    for (double s : cusum_statistic(r, 100.0, p)) EXPECT_GE(s, 0.0);
    const auto onsets = cusum_onsets(r, 100.0, 50.0, p);
    EXPECT_GT(onsets.size(), 5u);
    for (std::size_t i = 1; i < onsets.size(); ++i) EXPECT_GE(onsets[i] - onsets[i - 1], p.cooldown_s - 1e-12);
  }
}

TEST(Cusum, ScaleCovariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 600);
  RateSeries r;
  r.bin_s = 0.0002;
  for (int i = 0; i < 10000; ++i) r.values.push_back(u(rng) * (i > 4000 && i < 4500 ? 4 : 1));
  CusumParams p;
  p.h = 2.0;
  const auto base = cusum_onsets(r, 150.0, 80.0, p);
  ASSERT_FALSE(base.empty());
  for (double c : {0.25, 8.0, 1024.0}) {
    RateSeries scaled = r;
    for (auto& v : scaled.values) v *= c;
    EXPECT_EQ(cusum_onsets(scaled, 150.0 * c, 80.0 * c, p), base);
  }
}

TEST(Tuning, SeparatedClassesGiveFullTprNoAlarms) {
  std::mt19937_64 rng(7);
  std::vector<LatencyTrial> presses;
  for (int i = 0; i < 40; ++i) presses.push_back(step_trial(20.0, 0.32, rng));
  const auto idle = idle_trials(40, rng);
  const auto res = tune_threshold(presses, idle, CusumParams{});
  EXPECT_EQ(res.tpr, 1.0);
  EXPECT_EQ(res.false_alarm_rate_per_s, 0.0);
  const auto grid = default_h_grid();
  EXPECT_NE(std::find(grid.begin(), grid.end(), res.h), grid.end());
  ASSERT_EQ(res.roc.size(), grid.size());
  // Smallest in-budget grid point reaching 95%.
  for (const auto& pt : res.roc) {
    if (pt.h < res.h) {
      EXPECT_FALSE(pt.tpr >= 0.95 && pt.false_alarm_rate_per_s <= 0.13);
    }
    if (pt.h == res.h) {
      EXPECT_EQ(pt.tpr, res.tpr);
    }
  }
}

TEST(Tuning, IndistinguishableClassesFail) {
  std::mt19937_64 rng(8);
  const auto a = idle_trials(30, rng);
  const auto b = idle_trials(30, rng);
  try {
    tune_threshold(a, b, CusumParams{});
    FAIL() << "expected TuningError";
  } catch (const TuningError& e) {
    EXPECT_LT(e.best_tpr(), 0.95);
  }
}

TEST(Tuning, NeedsTwentyTrials) {
  std::mt19937_64 rng(9);
  std::vector<LatencyTrial> few;
  for (int i = 0; i < 19; ++i) few.push_back(step_trial(20.0, 0.32, rng));
  EXPECT_THROW(tune_threshold(few, few, CusumParams{}), TuningError);
}

TEST(Tuning, FalseAlarmsOverLongBaselineWithinBudget) {
  std::mt19937_64 rng(10);
  std::vector<LatencyTrial> presses;
  for (int i = 0; i < 40; ++i) presses.push_back(step_trial(4.0, 0.32, rng));
  const auto tuned = tune_threshold(presses, idle_trials(40, rng), CusumParams{});
  // 1,900 snippets of 0.55 s each: ~1,045 s of fresh background.
  const auto idle = idle_trials(1900, rng);
  const auto roc = roc_curve(presses, idle, CusumParams{}, std::vector<double>{tuned.h});
  EXPECT_LE(roc[0].false_alarm_rate_per_s, CusumParams{}.false_alarm_budget_per_s);
}

TEST(LatencyReport, UniformJitterWidth) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jitter(0.0, 0.030);
  std::vector<LatencyTrial> presses;
  for (int i = 0; i < 400; ++i) presses.push_back(step_trial(20.0, 0.34 + jitter(rng), rng));
  const auto rep = latency_report(presses, idle_trials(20, rng), 1.0, CusumParams{});
  EXPECT_EQ(rep.tpr, 1.0);
  EXPECT_GE(rep.latency_width_ms, 24.0);
  EXPECT_LE(rep.latency_width_ms, 30.0);
  EXPECT_DOUBLE_EQ(rep.cooldown_s, rep.latency_width_ms / 1000.0);
  EXPECT_NEAR(rep.median_onset_s, 0.055, 0.005);
}

TEST(LatencyReport, IdenticalOnsetsGiveZeroWidth) {
  std::mt19937_64 rng(12);
  const auto one = step_trial(10.0, 0.4, rng);
  const std::vector<LatencyTrial> same(25, one);
  const auto rep = latency_report(same, {}, 1.0, CusumParams{});
  EXPECT_EQ(rep.latency_width_ms, 0.0);
  EXPECT_EQ(rep.tpr, 1.0);
  for (const auto& o : rep.onsets_s) EXPECT_EQ(*o, 0.0);
  EXPECT_EQ(rep.false_alarm_rate_per_s, 0.0);
}

TEST(LatencyReport, NoDetectionsIsUndefined) {
  std::mt19937_64 rng(13);
  EXPECT_THROW(latency_report(idle_trials(5, rng), {}, 1e4, CusumParams{}), UndefinedMetricError);
}

TEST(BuildLatencyTrials, WindowsAndIdleSnippets) {
  auto spec = test::small_spec(6, 1, 14);
  const auto out = generate(spec);
  const auto trials =
      segment_by_schedule(out.cam1, out.cam2, spec.effective_schedule(), seconds_to_us(out.truth.tap_onsets_s[0]));
  LatencyTrialOptions opt;
  const auto lt = build_latency_trials(out.cam1, out.cam2, trials, CusumParams{}, opt);
  ASSERT_EQ(lt.presses.size(), trials.size());
  EXPECT_EQ(lt.background.size(), trials.size() - 1);
  const auto pre = seconds_to_us(opt.pre_roll_s);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& p = lt.presses[i];
    EXPECT_EQ(p.stimulus.window.t0_us, trials[i].window.t0_us - pre);
    EXPECT_EQ(p.stimulus.window.t1_us, trials[i].window.t1_us);
    EXPECT_EQ(p.baseline.window.t1_us, p.stimulus.window.t0_us);
    EXPECT_TRUE(std::is_sorted(p.stimulus.times_us.begin(), p.stimulus.times_us.end()));
  }
  for (std::size_t i = 0; i < lt.background.size(); ++i) {
    const auto& b = lt.background[i];
    EXPECT_EQ(b.stimulus.window.duration_s(), lt.presses[i].stimulus.window.duration_s());
    EXPECT_EQ(b.baseline.window.duration_s(), lt.presses[i].baseline.window.duration_s());
    EXPECT_GE(b.baseline.window.t0_us, trials[i].window.t1_us);
    EXPECT_LE(b.stimulus.window.t1_us, trials[i + 1].baseline_window.t0_us - pre);
  }
  opt.thin_k = 8;
  opt.thin_seed = 3;
  const auto thinned = build_latency_trials(out.cam1, out.cam2, trials, CusumParams{}, opt);
  const double ratio =
      double(thinned.presses[0].stimulus.times_us.size()) / double(lt.presses[0].stimulus.times_us.size());
  EXPECT_NEAR(ratio, 1.0 / 8, 0.03);
}

TEST(BuildLatencyTrials, SimulatedRobotJitterGivesTensOfMs) {
  // Press about 28,600 ev/s against 9,100 ev/s idle, both cameras combined,
  // with the burst onset spread over 30 ms.
  auto spec = test::small_spec(40, 1, 15);
  spec.background_rate_per_camera = 4550;
  spec.burst_events_per_press_per_camera = (28600.0 - 9100.0) / 2 * 0.55;
  spec.onset_jitter_s = 0.03;
  const auto out = generate(spec);
  const auto trials =
      segment_by_schedule(out.cam1, out.cam2, spec.effective_schedule(), seconds_to_us(out.truth.tap_onsets_s[0]));
  const auto lt = build_latency_trials(out.cam1, out.cam2, trials, CusumParams{});
  const auto tuned = tune_threshold(lt.presses, lt.background, CusumParams{});
  const auto rep = latency_report(lt.presses, lt.background, tuned.h, CusumParams{});
  EXPECT_GE(rep.tpr, 0.95);
  EXPECT_GE(rep.latency_width_ms, 10.0);
  EXPECT_LE(rep.latency_width_ms, 100.0);
}

}  // namespace
}  // namespace optoskin
