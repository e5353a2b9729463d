#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optoskin/events.hpp"
#include "optoskin/metrics.hpp"

namespace optoskin {

struct PipelineRun;

/// Keeps each event with probability 1/k. The draw for an event depends only
/// on (seed, camera, event ordinal), so thinning commutes with cropping and
/// slicing and is independent of processing order. k == 1 keeps everything.
EventStream thin(const EventStream& stream, std::uint32_t k, std::uint64_t seed);
std::vector<Event> thin_events(std::span<const Event> events, CameraId camera, std::uint32_t k, std::uint64_t seed);
bool keep_event(CameraId camera, std::uint32_t ordinal, std::uint32_t k, std::uint64_t seed);

struct SweepCell {
  std::uint32_t k{1};
  std::uint64_t seed{0};
  EvaluationReport report;
  double mean_cluster_size{0.0};
};

struct CurvePoint {
  std::uint32_t k{1};
  double mean_pass_rate{0.0};
  double sd_pass_rate{0.0};
  double mean_rmse_mm{0.0};
  double mean_cluster_size{0.0};
};

struct AblationSweep {
  std::vector<std::uint32_t> factors;
  std::vector<std::uint64_t> seeds;
  double reference_p95_mm{0.0};
  bool per_k_reference{false};
  std::vector<SweepCell> cells;  // factor-major, seed-minor
  std::vector<CurvePoint> curve;
};

struct SweepOptions {
  std::vector<std::uint32_t> factors{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool per_k_reference{false};
  int threads{1};
};

/// Re-evaluates a localized run for every (k, seed) with the run's fixed
/// camera models and the k = 1 p95 error as the pass reference.
AblationSweep run_sweep(const PipelineRun& run, const SweepOptions& options);

}  // namespace optoskin
