#include "optoskin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "optoskin/error.hpp"
#include "optoskin/parallel.hpp"
#include "optoskin/random.hpp"

namespace optoskin {

PressSchedule SynthSpec::effective_schedule() const {
  return schedule ? *schedule : PressSchedule::regular(layout, sync, press_period_s);
}

void SynthSpec::validate() const {
  layout.validate();
  sync.validate();
  for (const auto& m : models) m.validate(layout.side_mm);
  const double sum = profile.rise + profile.plateau + profile.fall;
  if (profile.rise < 0 || profile.plateau < 0 || profile.fall < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("synth: rise + plateau + fall must equal 1");
  }
  if (burst_events_per_press_per_camera < 0 || background_rate_per_camera < 0 || sigma_u_px < 0 || sigma_v_px < 0 ||
      center_jitter_px < 0 || center_jitter_dof < 0 || onset_jitter_s < 0) {
    throw ConfigError("synth: counts, rates and spreads must be non-negative");
  }
  if (!(roi.v_lo >= 0 && roi.v_lo < roi.v_hi && roi.v_hi < kSensorHeight)) throw ConfigError("synth: invalid roi band");
  effective_schedule().validate();
  if (!press_count_scale.empty() && press_count_scale.size() != effective_schedule().presses.size()) {
    throw ConfigError("synth: press_count_scale must have one entry per scheduled press");
  }
}

namespace {

struct Tagged {
  Event event;
  std::int32_t source;
};

// Key namespaces for the per-burst generators.
constexpr std::uint64_t kTapKey = 1ULL << 40;
constexpr std::uint64_t kBackgroundKey = 2ULL << 40;
constexpr std::uint64_t kJitterKey = 3ULL << 40;

std::mt19937_64 keyed_rng(std::uint64_t seed, CameraId cam, std::uint64_t item) {
  return std::mt19937_64(mix_key(seed, static_cast<std::uint64_t>(index_of(cam)) + 1, item));
}

// Position within the window, as a fraction, and the profile segment it fell in.
struct ProfileSample {
  double fraction;
  int segment;  // 0 rise, 1 plateau, 2 fall
};

ProfileSample sample_profile(const RateProfile& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double area_rise = 0.5 * p.rise, area_plateau = p.plateau, area_fall = 0.5 * p.fall;
  const double total = area_rise + area_plateau + area_fall;
  const double pick = unit(rng) * total;
  const double w = unit(rng);
  if (pick < area_rise) return {p.rise * std::sqrt(w), 0};
  if (pick < area_rise + area_plateau) return {p.rise + p.plateau * w, 1};
  return {1.0 - p.fall * std::sqrt(w), 2};
}

std::uint16_t clamp_pixel(double x, int hi) {
  return static_cast<std::uint16_t>(std::clamp<long>(std::lround(x), 0, hi));
}

// One press or tap burst for one camera.
std::vector<Tagged> burst(const SynthSpec& spec, std::mt19937_64& rng, double mean_count, double u_center,
                          double onset_s, double duration_s, std::int32_t source) {
  std::vector<Tagged> out;
  if (!(mean_count > 0)) return out;
  std::poisson_distribution<long> count_dist(mean_count);
  const auto n = static_cast<std::size_t>(count_dist(rng));
  out.reserve(n);
  std::normal_distribution<double> u_dist(u_center, spec.sigma_u_px > 0 ? spec.sigma_u_px : 1.0);
  std::normal_distribution<double> v_dist(spec.v_center_px, spec.sigma_v_px > 0 ? spec.sigma_v_px : 1.0);
  std::uniform_int_distribution<int> v_band(spec.roi.v_lo, spec.roi.v_hi);
  std::bernoulli_distribution coin(0.5);

  // A zero-width shadow straddling two pixel columns lights them in
  // proportion to its overlap with each.
  const double base = std::floor(u_center);
  const auto upper = static_cast<std::size_t>(std::llround((u_center - base) * static_cast<double>(n)));

  for (std::size_t j = 0; j < n; ++j) {
    Tagged ev{};
    ev.source = source;
    const double u = spec.sigma_u_px > 0 ? u_dist(rng) : base + (j < upper ? 1.0 : 0.0);
    ev.event.u = clamp_pixel(u, kSensorWidth - 1);
    if (spec.sigma_v_px > 0) {
      ev.event.v = static_cast<std::uint16_t>(std::clamp<long>(std::lround(v_dist(rng)), spec.roi.v_lo, spec.roi.v_hi));
    } else {
      ev.event.v = static_cast<std::uint16_t>(v_band(rng));
    }
    const auto sample = sample_profile(spec.profile, rng);
    ev.event.t_us = seconds_to_us(onset_s + sample.fraction * duration_s);
    ev.event.polarity = sample.segment == 0   ? Polarity::On
                        : sample.segment == 2 ? Polarity::Off
                                              : (coin(rng) ? Polarity::On : Polarity::Off);
    out.push_back(ev);
  }
  return out;
}

double jitter_offset(const SynthSpec& spec, CameraId cam, std::size_t trial) {
  if (!(spec.center_jitter_px > 0)) return 0.0;
  auto rng = keyed_rng(spec.seed, cam, kJitterKey + trial);
  if (spec.center_jitter_dof > 0) {
    std::student_t_distribution<double> t(spec.center_jitter_dof);
    return spec.center_jitter_px * t(rng);
  }
  std::normal_distribution<double> z(0.0, 1.0);
  return spec.center_jitter_px * z(rng);
}

double recording_end_s(const SynthSpec& spec, const PressSchedule& schedule) {
  double last = spec.tap_start_s + (spec.sync.n_taps - 1) * spec.sync.tap_interval_s + schedule.press_duration_s;
  if (!schedule.presses.empty()) {
    last = std::max(last, spec.tap_start_s + schedule.presses.back().onset_s + spec.onset_jitter_s +
                              schedule.press_duration_s);
  }
  return last + spec.tail_s;
}

}  // namespace

std::vector<Event> generate_sync_taps(const SynthSpec& spec, CameraId camera) {
  std::vector<Event> events;
  const auto center = spec.layout.center();
  const auto u = project_point(spec.models[index_of(camera)], center);
  if (!u) return events;
  for (int i = 0; i < spec.sync.n_taps; ++i) {
    auto rng = keyed_rng(spec.seed, camera, kTapKey + static_cast<std::uint64_t>(i));
    const double onset = spec.tap_start_s + i * spec.sync.tap_interval_s;
    for (const auto& t : burst(spec, rng, spec.burst_events_per_press_per_camera, *u, onset,
                               spec.effective_schedule().press_duration_s, tap_source(i))) {
      events.push_back(t.event);
    }
  }
  return events;
}

SynthOutput generate(const SynthSpec& spec, int threads) {
  spec.validate();
  const auto schedule = spec.effective_schedule();
  const auto n_press = schedule.presses.size();
  const double end_s = recording_end_s(spec, schedule);

  TruthManifest truth;
  truth.seed = spec.seed;
  truth.camera2_offset_s = spec.camera2_offset_s;
  for (int i = 0; i < spec.sync.n_taps; ++i) truth.tap_onsets_s.push_back(spec.tap_start_s + i * spec.sync.tap_interval_s);
  truth.presses.resize(n_press);

  // Work items: taps, presses, then one-second background chunks.
  const auto n_taps = static_cast<std::size_t>(spec.sync.n_taps);
  const auto n_chunks = static_cast<std::size_t>(std::ceil(end_s));
  const std::size_t n_items = n_taps + n_press + n_chunks;

  std::vector<double> onset_jitter(n_press, 0.0);
  if (spec.onset_jitter_s > 0) {
    for (std::size_t i = 0; i < n_press; ++i) {
      auto rng = keyed_rng(spec.seed, CameraId::Cam1, kJitterKey + (1ULL << 32) + i);
      onset_jitter[i] = std::uniform_real_distribution<double>(0.0, spec.onset_jitter_s)(rng);
    }
  }

  const auto center = spec.layout.center();
  const auto offset_us = seconds_to_us(spec.camera2_offset_s);
  std::array<EventStream, 2> streams;
  // One camera at a time bounds peak memory.
  for (int c = 0; c < 2; ++c) {
    const auto cam = c == 0 ? CameraId::Cam1 : CameraId::Cam2;
    std::vector<std::vector<Tagged>> parts(n_items);
    parallel_for(n_items, threads, [&](std::size_t item) {
      const auto& model = spec.models[index_of(cam)];
      auto& out = parts[item];
      if (item < n_taps) {
        const auto u = project_point(model, center);
        if (!u) return;
        auto rng = keyed_rng(spec.seed, cam, kTapKey + item);
        out = burst(spec, rng, spec.burst_events_per_press_per_camera, *u, truth.tap_onsets_s[item],
                    schedule.press_duration_s, tap_source(static_cast<int>(item)));
      } else if (item < n_taps + n_press) {
        const auto p = item - n_taps;
        const auto& press = schedule.presses[p];
        auto& pt = truth.presses[p];
        pt.u_ideal[c] = project_point(model, press.ground_truth);
        if (!pt.u_ideal[c]) return;
        pt.u_center[c] = *pt.u_ideal[c] + jitter_offset(spec, cam, p);
        double mean = spec.burst_events_per_press_per_camera;
        if (!spec.press_count_scale.empty()) mean *= spec.press_count_scale[p];
        if (spec.count_scale) mean *= spec.count_scale(press.ground_truth, cam);
        auto rng = keyed_rng(spec.seed, cam, p);
        out = burst(spec, rng, mean, pt.u_center[c], spec.tap_start_s + press.onset_s + onset_jitter[p],
                    schedule.press_duration_s, static_cast<std::int32_t>(p));
        pt.n_events[c] = out.size();
      } else {
        const auto chunk = item - n_taps - n_press;
        const double t0 = static_cast<double>(chunk);
        const double len = std::min(1.0, end_s - t0);
        if (!(len > 0) || !(spec.background_rate_per_camera > 0)) return;
        auto rng = keyed_rng(spec.seed, cam, kBackgroundKey + chunk);
        const auto n = std::poisson_distribution<long>(spec.background_rate_per_camera * len)(rng);
        std::uniform_real_distribution<double> when(t0, t0 + len);
        std::uniform_int_distribution<int> uu(0, kSensorWidth - 1), vv(0, kSensorHeight - 1);
        std::bernoulli_distribution coin(0.5);
        out.reserve(static_cast<std::size_t>(n));
        for (long j = 0; j < n; ++j) {
          Tagged ev{};
          ev.source = kBackgroundSource;
          ev.event.t_us = std::min(seconds_to_us(when(rng)), seconds_to_us(t0 + len) - 1);
          ev.event.u = static_cast<std::uint16_t>(uu(rng));
          ev.event.v = static_cast<std::uint16_t>(vv(rng));
          ev.event.polarity = coin(rng) ? Polarity::On : Polarity::Off;
          out.push_back(ev);
        }
      }
    });

    std::size_t total = 0;
    for (const auto& part : parts) total += part.size();
    std::vector<Tagged> all;
    all.reserve(total);
    for (auto& part : parts) {
      all.insert(all.end(), part.begin(), part.end());
      std::vector<Tagged>().swap(part);
    }
    if (c == 1 && offset_us != 0) {
      for (auto& t : all) t.event.t_us += offset_us;
      std::erase_if(all, [](const Tagged& t) { return t.event.t_us < 0; });
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Tagged& a, const Tagged& b) { return a.event.t_us < b.event.t_us; });
    std::vector<Event> events(all.size());
    auto& sources = truth.sources[c];
    sources.resize(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      events[i] = all[i].event;
      events[i].ordinal = static_cast<std::uint32_t>(i);
      sources[i] = all[i].source;
    }
    streams[c] = EventStream(cam, std::move(events), spec.roi);
  }

  for (std::size_t p = 0; p < n_press; ++p) {
    const auto& press = schedule.presses[p];
    auto& pt = truth.presses[p];
    pt.trial_index = p;
    pt.press_index = press.press_index;
    pt.repetition = press.repetition;
    pt.ground_truth = press.ground_truth;
    pt.onset_s = spec.tap_start_s + press.onset_s + onset_jitter[p];
    pt.in_view = pt.u_ideal[0].has_value() && pt.u_ideal[1].has_value();
  }

  return {streams[0], streams[1], std::move(truth)};
}

}  // namespace optoskin
