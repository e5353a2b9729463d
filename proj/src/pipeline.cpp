#include "optoskin/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "optoskin/ablate.hpp"
#include "optoskin/error.hpp"
#include "optoskin/parallel.hpp"

namespace optoskin {

const char* to_string(PressStatus s) {
  switch (s) {
    case PressStatus::Localized: return "localized";
    case PressStatus::Excluded: return "excluded";
    case PressStatus::Degenerate: return "degenerate";
    case PressStatus::Missing: return "missing";
  }
  return "unknown";
}

namespace {

CameraObservation observe(const PressTrial& trial, CameraId cam, const PipelineParams& params, Thinning thinning,
                          ClusterResult& cluster) {
  auto events = crop_events(trial.slice(cam).events(), params.roi);
  if (thinning.k > 1) events = thin_events(events, cam, thinning.k, thinning.seed);
  cluster = extract_centroid(events, params.dbscan);
  CameraObservation obs;
  obs.valid = cluster.valid;
  obs.n_events = events.size();
  obs.n_clusters = cluster.n_clusters;
  obs.cluster_size = cluster.largest_cluster_size;
  obs.centroid_u = cluster.centroid_u;
  obs.centroid_v = cluster.centroid_v;
  return obs;
}

LocalizationResult localize_one(const PressTrial& trial, const CameraPair& models, const PipelineParams& params,
                                Thinning thinning) {
  LocalizationResult res;
  res.trial_index = trial.trial_index;
  res.press_index = trial.press_index;
  res.repetition = trial.repetition;
  res.ground_truth = trial.ground_truth;
  res.error_mm = std::nan("");
  if (trial.missing) {
    res.status = PressStatus::Missing;
    res.reason = "window outside recording";
    return res;
  }
  ClusterResult c1, c2;
  res.cams[0] = observe(trial, CameraId::Cam1, params, thinning, c1);
  res.cams[1] = observe(trial, CameraId::Cam2, params, thinning, c2);
  const auto verdict = exclude_press(c1, c2);
  if (!verdict.pass) {
    res.status = PressStatus::Excluded;
    res.reason = verdict.reason;
    return res;
  }
  try {
    res.triangulation = triangulate(models[0], c1.centroid_u, models[1], c2.centroid_u);
  } catch (const DegenerateGeometryError& e) {
    res.status = PressStatus::Degenerate;
    res.reason = e.what();
    return res;
  }
  res.status = PressStatus::Localized;
  const auto& est = res.triangulation->estimate;
  res.error_mm = std::hypot(est.x - trial.ground_truth.x, est.y - trial.ground_truth.y);
  if (res.triangulation->out_of_bounds) res.reason = "estimate out of bounds";
  return res;
}

}  // namespace

std::vector<LocalizationResult> localize_trials(std::span<const PressTrial> trials, const CameraPair& models,
                                                const PipelineParams& params, Thinning thinning, int threads) {
  std::vector<LocalizationResult> results(trials.size());
  parallel_for(trials.size(), threads,
               [&](std::size_t i) { results[i] = localize_one(trials[i], models, params, thinning); });
  return results;
}

PipelineRun prepare_run(const EventStream& cam1, const EventStream& cam2, const PressSchedule& schedule,
                        const SyncSpec& sync, const PipelineParams& params, const CameraPair& models,
                        const SensorLayout& layout) {
  PipelineRun run;
  run.aligned = align_streams(cam1, cam2, sync);
  run.trials = segment_by_schedule(run.aligned.cam1, run.aligned.cam2, schedule, run.aligned.origin_us(),
                                   params.baseline_s);
  if (params.refine_onsets) {
    for (auto& trial : run.trials) {
      if (trial.missing) continue;
      const auto t0 = refine_onset(trial, run.aligned.cam1, run.aligned.cam2, params.refine);
      if (t0 != trial.window.t0_us) trial = reslice(trial, run.aligned.cam1, run.aligned.cam2, t0);
    }
  }
  run.models = models;
  run.params = params;
  run.layout = layout;
  if (layout.repetitions > 1) run.holdout_repetition = 0;
  return run;
}

std::vector<EvaluationInput> evaluation_inputs(std::span<const LocalizationResult> results,
                                               std::optional<int> holdout_repetition) {
  std::vector<EvaluationInput> inputs;
  for (const auto& r : results) {
    if (holdout_repetition && r.repetition == *holdout_repetition) continue;
    EvaluationInput in;
    in.trial_index = r.trial_index;
    in.press_index = r.press_index;
    in.repetition = r.repetition;
    in.valid = r.valid();
    in.ground_truth = r.ground_truth;
    if (r.triangulation) in.estimate = r.triangulation->estimate;
    inputs.push_back(in);
  }
  return inputs;
}

std::vector<CalibrationObservation> calibration_observations(std::span<const LocalizationResult> results,
                                                             int repetition,
                                                             std::span<const std::size_t> excluded_trials) {
  std::vector<CalibrationObservation> obs;
  for (const auto& r : results) {
    if (r.repetition != repetition || !r.cams[0].valid || !r.cams[1].valid) continue;
    if (std::find(excluded_trials.begin(), excluded_trials.end(), r.trial_index) != excluded_trials.end()) continue;
    obs.push_back({r.cams[0].centroid_u, r.cams[1].centroid_u, r.ground_truth});
  }
  return obs;
}

double mean_cluster_size(std::span<const LocalizationResult> results) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (r.status == PressStatus::Missing) continue;
    total += double(r.cams[0].cluster_size) + double(r.cams[1].cluster_size);
    n += 2;
  }
  return n == 0 ? 0.0 : total / double(n);
}

}  // namespace optoskin
