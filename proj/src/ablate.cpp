#include "optoskin/ablate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "optoskin/pipeline.hpp"
#include "optoskin/random.hpp"

namespace optoskin {

bool keep_event(CameraId camera, std::uint32_t ordinal, std::uint32_t k, std::uint64_t seed) {
  if (k <= 1) return true;
  const auto key = mix_key(seed, static_cast<std::uint64_t>(index_of(camera)) + 1, ordinal);
  return unit_double(key) * k < 1.0;
}

std::vector<Event> thin_events(std::span<const Event> events, CameraId camera, std::uint32_t k, std::uint64_t seed) {
  std::vector<Event> out;
  if (k <= 1) return {events.begin(), events.end()};
  out.reserve(events.size() / k + 16);
  for (const auto& e : events) {
    if (keep_event(camera, e.ordinal, k, seed)) out.push_back(e);
  }
  return out;
}

EventStream thin(const EventStream& stream, std::uint32_t k, std::uint64_t seed) {
  if (k <= 1) return stream;
  return EventStream(stream.camera(), thin_events(stream.events(), stream.camera(), k, seed), stream.roi(),
                     stream.time_offset_us());
}

AblationSweep run_sweep(const PipelineRun& run, const SweepOptions& options) {
  AblationSweep sweep;
  sweep.factors = options.factors;
  sweep.seeds = options.seeds;
  sweep.per_k_reference = options.per_k_reference;

  const auto baseline = localize_trials(run.trials, run.models, run.params, {}, options.threads);
  const auto baseline_inputs = evaluation_inputs(baseline, run.holdout_repetition);
  const auto baseline_report = evaluate(baseline_inputs, run.layout, std::nan(""));
  sweep.reference_p95_mm = baseline_report.reference_p95_mm;
  const double reference = options.per_k_reference ? std::nan("") : sweep.reference_p95_mm;

  for (const auto k : options.factors) {
    CurvePoint point;
    point.k = k;
    std::vector<double> pass, rmse_values, sizes;
    for (const auto seed : options.seeds) {
      SweepCell cell;
      cell.k = k;
      cell.seed = seed;
      if (k <= 1) {
        cell.report = options.per_k_reference ? baseline_report : evaluate(baseline_inputs, run.layout, reference);
        cell.mean_cluster_size = mean_cluster_size(baseline);
      } else {
        const auto results = localize_trials(run.trials, run.models, run.params, {k, seed}, options.threads);
        cell.report = evaluate(evaluation_inputs(results, run.holdout_repetition), run.layout, reference);
        cell.mean_cluster_size = mean_cluster_size(results);
      }
      pass.push_back(cell.report.pass_rate_percent);
      if (!std::isnan(cell.report.rmse_mm)) rmse_values.push_back(cell.report.rmse_mm);
      sizes.push_back(cell.mean_cluster_size);
      sweep.cells.push_back(std::move(cell));
    }
    auto mean = [](const std::vector<double>& v) {
      if (v.empty()) return std::nan("");
      double s = 0.0;
      for (double x : v) s += x;
      return s / double(v.size());
    };
    point.mean_pass_rate = mean(pass);
    double ss = 0.0;
    for (double x : pass) ss += (x - point.mean_pass_rate) * (x - point.mean_pass_rate);
    point.sd_pass_rate = pass.size() > 1 ? std::sqrt(ss / double(pass.size() - 1)) : 0.0;
    point.mean_rmse_mm = mean(rmse_values);
    point.mean_cluster_size = mean(sizes);
    sweep.curve.push_back(point);
  }
  return sweep;
}

}  // namespace optoskin
