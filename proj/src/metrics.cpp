#include "optoskin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "optoskin/error.hpp"

namespace optoskin {

RmseTriple rmse(std::span<const Point2> estimates, std::span<const Point2> ground_truths) {
  if (estimates.empty()) throw UndefinedMetricError("rmse: no presses");
  if (estimates.size() != ground_truths.size()) throw UndefinedMetricError("rmse: length mismatch");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double dx = estimates[i].x - ground_truths[i].x;
    const double dy = estimates[i].y - ground_truths[i].y;
    sx += dx * dx;
    sy += dy * dy;
  }
  const double n = static_cast<double>(estimates.size());
  return {std::sqrt((sx + sy) / n), std::sqrt(sx / n), std::sqrt(sy / n)};
}

double cmre(std::span<const Point2> estimates, std::span<const Point2> ground_truths, double diagonal_mm) {
  if (!(diagonal_mm > 0)) throw UndefinedMetricError("cmre: diagonal must be positive");
  return 100.0 * rmse(estimates, ground_truths).euclidean / diagonal_mm;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw UndefinedMetricError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double pass_rate(std::span<const double> errors_mm, double reference_p95, std::span<const bool> validity) {
  if (errors_mm.size() != validity.size()) throw UndefinedMetricError("pass_rate: length mismatch");
  if (errors_mm.empty()) return 0.0;
  std::size_t passes = 0;
  for (std::size_t i = 0; i < errors_mm.size(); ++i) {
    if (validity[i] && errors_mm[i] < reference_p95) ++passes;
  }
  return 100.0 * static_cast<double>(passes) / static_cast<double>(errors_mm.size());
}

const char* to_string(TaxelConvention c) {
  return c == TaxelConvention::CircleArea ? "circle_area" : "square_tile";
}

long effective_taxels(double rmse_mm, double area_mm2, TaxelConvention convention) {
  if (!(rmse_mm > 0)) throw UndefinedMetricError("effective_taxels: rmse must be positive");
  const double cell = convention == TaxelConvention::CircleArea ? std::numbers::pi * rmse_mm * rmse_mm
                                                                : 4.0 * rmse_mm * rmse_mm;
  // Tolerate round-off when the area is an exact multiple of the cell.
  return static_cast<long>(std::floor(area_mm2 / cell + 1e-9));
}

double repeatability(std::span<const PressEstimate> estimates) {
  std::map<int, std::vector<Point2>> groups;
  for (const auto& e : estimates) groups[e.press_index].push_back(e.estimate);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [index, pts] : groups) {
    if (pts.size() < 2) continue;
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
      mx += p.x;
      my += p.y;
    }
    mx /= double(pts.size());
    my /= double(pts.size());
    double vx = 0.0, vy = 0.0;
    for (const auto& p : pts) {
      vx += (p.x - mx) * (p.x - mx);
      vy += (p.y - my) * (p.y - my);
    }
    const double denom = double(pts.size() - 1);
    total += std::sqrt(vx / denom + vy / denom);
    ++n;
  }
  if (n == 0) throw UndefinedMetricError("repeatability: no press with two or more repetitions");
  return total / double(n);
}

EvaluationReport evaluate(std::span<const EvaluationInput> presses, const SensorLayout& layout, double reference_p95,
                          TaxelConvention convention) {
  const double nan = std::nan("");
  EvaluationReport rep;
  rep.taxel_convention = convention;
  rep.n_presses = presses.size();

  std::vector<Point2> est, gt;
  std::vector<PressEstimate> grouped;
  std::vector<double> valid_errors;
  for (const auto& p : presses) {
    PressError pe{p.trial_index, p.press_index, p.repetition, nan, p.valid, false};
    if (p.valid) {
      pe.error_mm = std::hypot(p.estimate.x - p.ground_truth.x, p.estimate.y - p.ground_truth.y);
      est.push_back(p.estimate);
      gt.push_back(p.ground_truth);
      grouped.push_back({p.press_index, p.estimate});
      valid_errors.push_back(pe.error_mm);
    }
    rep.per_press_errors.push_back(pe);
  }
  rep.n_valid = est.size();

  if (std::isnan(reference_p95)) reference_p95 = valid_errors.empty() ? nan : percentile(valid_errors, 95.0);
  rep.reference_p95_mm = reference_p95;

  std::size_t passes = 0;
  for (auto& pe : rep.per_press_errors) {
    pe.pass = pe.valid && pe.error_mm < reference_p95;
    passes += pe.pass ? 1 : 0;
  }
  rep.pass_rate_percent = presses.empty() ? nan : 100.0 * double(passes) / double(presses.size());

  if (est.empty()) {
    rep.rmse_mm = rep.rmse_x_mm = rep.rmse_y_mm = rep.cmre_percent = nan;
    rep.mean_trial_std_mm = nan;
    rep.effective_taxels_full = rep.effective_taxels_probed = 0;
    return rep;
  }
  const auto r = rmse(est, gt);
  rep.rmse_mm = r.euclidean;
  rep.rmse_x_mm = r.x;
  rep.rmse_y_mm = r.y;
  rep.cmre_percent = 100.0 * r.euclidean / layout.diagonal_mm();
  try {
    rep.mean_trial_std_mm = repeatability(grouped);
  } catch (const UndefinedMetricError&) {
    rep.mean_trial_std_mm = nan;
  }
  if (r.euclidean > 0) {
    rep.effective_taxels_probed = effective_taxels(r.euclidean, layout.probed_area_mm2, convention);
    rep.effective_taxels_full = effective_taxels(r.euclidean, layout.skin_area_mm2, convention);
  }
  return rep;
}

}  // namespace optoskin
