#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "optoskin/events.hpp"

namespace optoskin {

struct RmseTriple {
  double euclidean{0.0};
  double x{0.0};
  double y{0.0};
};

/// Throws UndefinedMetricError for empty or mismatched input.
RmseTriple rmse(std::span<const Point2> estimates, std::span<const Point2> ground_truths);

/// RMSE as a percentage of `diagonal_mm`.
double cmre(std::span<const Point2> estimates, std::span<const Point2> ground_truths, double diagonal_mm);

/// Linear-interpolation percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

/// A press passes when it is valid and its error is strictly below
/// `reference_p95`. Invalid presses count as failures. Returns a percentage.
double pass_rate(std::span<const double> errors_mm, double reference_p95, std::span<const bool> validity);

enum class TaxelConvention { CircleArea, SquareTile };
const char* to_string(TaxelConvention c);

/// floor(area / pi r^2) for CircleArea, floor(area / (2r)^2) for SquareTile.
long effective_taxels(double rmse_mm, double area_mm2, TaxelConvention convention);

struct PressEstimate {
  int press_index{0};
  Point2 estimate;
};

/// Mean over presses (with >= 2 repetitions) of sqrt(var_x + var_y), using
/// sample variance. Throws UndefinedMetricError when no press qualifies.
double repeatability(std::span<const PressEstimate> estimates);

struct PressError {
  std::size_t trial_index{0};
  int press_index{0};
  int repetition{0};
  double error_mm{0.0};  // NaN when the press has no estimate
  bool valid{false};
  bool pass{false};
};

struct EvaluationReport {
  double rmse_mm{0.0};
  double rmse_x_mm{0.0};
  double rmse_y_mm{0.0};
  double mean_trial_std_mm{0.0};
  double cmre_percent{0.0};
  double pass_rate_percent{0.0};
  double reference_p95_mm{0.0};
  long effective_taxels_probed{0};
  long effective_taxels_full{0};
  TaxelConvention taxel_convention{TaxelConvention::CircleArea};
  std::size_t n_presses{0};
  std::size_t n_valid{0};
  std::vector<PressError> per_press_errors;
};

struct EvaluationInput {
  std::size_t trial_index{0};
  int press_index{0};
  int repetition{0};
  bool valid{false};
  Point2 estimate;
  Point2 ground_truth;
};

/// Aggregates per-press results. Undefined statistics (no valid press, no
/// repeated press) are reported as NaN rather than thrown. When
/// `reference_p95` is NaN the p95 of this evaluation's own valid errors is used.
EvaluationReport evaluate(std::span<const EvaluationInput> presses, const SensorLayout& layout, double reference_p95,
                          TaxelConvention convention = TaxelConvention::CircleArea);

}  // namespace optoskin
