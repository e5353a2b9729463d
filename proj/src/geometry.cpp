#include "optoskin/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "optoskin/error.hpp"

namespace optoskin {
namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace

CameraPair CameraModel::default_pair(double side_mm, double focal_px) {
  CameraModel cam1;
  cam1.position = {0.0, 0.0};
  cam1.orientation_rad = std::atan2(side_mm / 2.0, side_mm / 2.0);
  cam1.focal_px = focal_px;
  CameraModel cam2 = cam1;
  cam2.position = {side_mm, 0.0};
  cam2.orientation_rad = std::atan2(side_mm / 2.0, -side_mm / 2.0);
  return {cam1, cam2};
}

double CameraModel::max_normalized_u() const {
  return std::max(u_center, (kSensorWidth - 1) - u_center) / focal_px;
}

double CameraModel::distance_to(Point2 p) const { return std::hypot(p.x - position.x, p.y - position.y); }

bool CameraModel::is_valid(double side_mm) const {
  if (!(focal_px > 0) || !std::isfinite(focal_px)) return false;
  if (!(std::abs(skew_rad) < std::numbers::pi / 4)) return false;
  if (!std::isfinite(orientation_rad) || !std::isfinite(k1) || !std::isfinite(u_center)) return false;
  const double margin = 50.0;
  if (!(position.x >= -margin && position.x <= side_mm + margin && position.y >= -margin &&
        position.y <= side_mm + margin)) {
    return false;
  }
  // pixel_to_bearing stays strictly monotone only while |k1 u_n^2| < 1/3.
  const double un = max_normalized_u();
  return std::abs(k1) * un * un < 1.0 / 3.0;
}

void CameraModel::validate(double side_mm) const {
  if (!is_valid(side_mm)) {
    throw ConfigError("camera model out of range (focal_px > 0, |skew| < pi/4, position within 50 mm of the "
                      "sensor, |k1 u_n^2| < 1/3)");
  }
}

double pixel_to_bearing(const CameraModel& model, double u) {
  const double un = (u - model.u_center) / model.focal_px;
  const double ud = un * (1.0 + model.k1 * un * un);
  return model.orientation_rad + model.skew_rad + std::atan(ud);
}

std::optional<double> project_point(const CameraModel& model, Point2 p) {
  const double dx = p.x - model.position.x;
  const double dy = p.y - model.position.y;
  if (dx == 0.0 && dy == 0.0) return std::nullopt;
  const double theta = wrap_angle(std::atan2(dy, dx) - model.orientation_rad - model.skew_rad);
  if (std::abs(theta) >= std::numbers::pi / 2) return std::nullopt;
  const double ud = std::tan(theta);

  // Solve un + k1 un^3 = ud by Newton iteration.
  double un = ud;
  if (model.k1 != 0.0) {
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      const double g = un + model.k1 * un * un * un - ud;
      const double dg = 1.0 + 3.0 * model.k1 * un * un;
      if (dg <= 0.0) return std::nullopt;
      const double step = g / dg;
      un -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(un))) {
        converged = true;
        break;
      }
    }
    if (!converged || std::abs(model.k1) * un * un >= 1.0 / 3.0) return std::nullopt;
  }
  const double u = model.u_center + model.focal_px * un;
  if (!(u >= 0.0 && u < kSensorWidth)) return std::nullopt;
  return u;
}

Triangulation triangulate(const CameraModel& m1, double u1, const CameraModel& m2, double u2) {
  Triangulation tri;
  tri.theta1_rad = pixel_to_bearing(m1, u1);
  tri.theta2_rad = pixel_to_bearing(m2, u2);
  const double c1 = std::cos(tri.theta1_rad), s1 = std::sin(tri.theta1_rad);
  const double c2 = std::cos(tri.theta2_rad), s2 = std::sin(tri.theta2_rad);
  const double cross = c1 * s2 - s1 * c2;  // sin(theta2 - theta1)
  tri.condition = std::abs(cross);
  if (!(tri.condition >= kDegenerateCondition)) {
    throw DegenerateGeometryError("triangulate: near-parallel rays (condition " + std::to_string(tri.condition) + ")");
  }
  const double bx = m2.position.x - m1.position.x;
  const double by = m2.position.y - m1.position.y;
  const double s = (bx * s2 - by * c2) / cross;
  const double t = (bx * s1 - by * c1) / cross;
  // Average the two (algebraically identical) ray points so the estimate does
  // not depend on which camera is passed first.
  tri.estimate = {0.5 * ((m1.position.x + s * c1) + (m2.position.x + t * c2)),
                  0.5 * ((m1.position.y + s * s1) + (m2.position.y + t * s2))};
  tri.out_of_bounds =
      tri.estimate.x < -10.0 || tri.estimate.x > 110.0 || tri.estimate.y < -10.0 || tri.estimate.y > 110.0;
  return tri;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

enum class Field { X, Y, Skew, K1, Focal };

struct FreeParam {
  int camera;
  Field field;
  double scale;
};

double& field_ref(CameraPair& models, const FreeParam& p) {
  auto& m = models[p.camera];
  switch (p.field) {
    case Field::X: return m.position.x;
    case Field::Y: return m.position.y;
    case Field::Skew: return m.skew_rad;
    case Field::K1: return m.k1;
    case Field::Focal: return m.focal_px;
  }
  return m.k1;
}

std::vector<FreeParam> free_params(const CalibrationOptions& options) {
  std::vector<FreeParam> params;
  for (int c = 0; c < 2; ++c) {
    const auto& mask = options.free[c];
    if (mask.position) {
      params.push_back({c, Field::X, 1.0});
      params.push_back({c, Field::Y, 1.0});
    }
    if (mask.skew) params.push_back({c, Field::Skew, 1.0});
    if (mask.k1) params.push_back({c, Field::K1, 1.0});
    if (mask.focal) params.push_back({c, Field::Focal, 100.0});
  }
  return params;
}

struct Evaluation {
  Eigen::VectorXd residuals;
  double cost{0.0};
  std::size_t degenerate{0};
};

Evaluation evaluate(const CameraPair& models, std::span<const CalibrationObservation> obs) {
  Evaluation ev;
  ev.residuals = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    try {
      const auto tri = triangulate(models[0], obs[i].u1, models[1], obs[i].u2);
      ev.residuals[2 * i] = tri.estimate.x - obs[i].ground_truth.x;
      ev.residuals[2 * i + 1] = tri.estimate.y - obs[i].ground_truth.y;
    } catch (const DegenerateGeometryError&) {
      ++ev.degenerate;
    }
  }
  ev.cost = ev.residuals.squaredNorm();
  return ev;
}

double rmse_from(const Evaluation& ev, std::size_t n_obs) {
  const std::size_t used = n_obs - ev.degenerate;
  return used == 0 ? 0.0 : std::sqrt(ev.cost / static_cast<double>(used));
}

}  // namespace

CalibrationResult calibrate(const CameraPair& initial, std::span<const CalibrationObservation> observations,
                            const CalibrationOptions& options) {
  if (observations.size() < options.min_observations) {
    throw CalibrationError("calibrate: need at least " + std::to_string(options.min_observations) +
                           " observations, got " + std::to_string(observations.size()));
  }
  for (const auto& m : initial) m.validate();

  const auto params = free_params(options);
  const auto n_par = static_cast<Eigen::Index>(params.size());

  CalibrationResult result;
  result.models = initial;
  Evaluation current = evaluate(initial, observations);
  if (!std::isfinite(current.cost)) throw CalibrationError("calibrate: non-finite initial cost");
  result.initial_rmse_mm = rmse_from(current, observations.size());
  result.cost_history.push_back(current.cost);

  constexpr double kAbsoluteCostFloor = 1e-20;
  double lambda = options.initial_lambda;
  bool converged = current.cost <= kAbsoluteCostFloor || n_par == 0;

  while (!converged && result.iterations < options.max_iterations) {
    const auto n_res = current.residuals.size();
    Eigen::MatrixXd jac(n_res, n_par);
    for (Eigen::Index j = 0; j < n_par; ++j) {
      CameraPair probe = result.models;
      double& value = field_ref(probe, params[j]);
      const double h = 1e-7 * std::max(std::abs(value), params[j].scale);
      value += h;
      const auto shifted = evaluate(probe, observations);
      jac.col(j) = (shifted.residuals - current.residuals) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * current.residuals;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index j = 0; j < n_par; ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      CameraPair trial = result.models;
      for (Eigen::Index j = 0; j < n_par; ++j) field_ref(trial, params[j]) += delta[j];

      bool ok = delta.allFinite();
      for (const auto& m : trial) ok = ok && m.is_valid();
      if (ok) {
        auto candidate = evaluate(trial, observations);
        if (!std::isfinite(candidate.cost)) throw CalibrationError("calibrate: non-finite cost");
        if (candidate.cost < current.cost) {
          const double rel = (current.cost - candidate.cost) / current.cost;
          result.models = trial;
          current = std::move(candidate);
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          ++result.iterations;
          result.cost_history.push_back(current.cost);
          if (rel < options.relative_tolerance || current.cost <= kAbsoluteCostFloor) converged = true;
          break;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e16) {
        // No improving step exists at working precision.
        converged = true;
        break;
      }
    }
  }

  result.converged = converged;
  result.final_cost = current.cost;
  result.degenerate_count = current.degenerate;
  result.rmse_mm = rmse_from(current, observations.size());
  result.residuals_mm.resize(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    try {
      const auto tri = triangulate(result.models[0], observations[i].u1, result.models[1], observations[i].u2);
      result.residuals_mm[i] = std::hypot(tri.estimate.x - observations[i].ground_truth.x,
                                          tri.estimate.y - observations[i].ground_truth.y);
    } catch (const DegenerateGeometryError&) {
      result.residuals_mm[i] = std::nullopt;
    }
  }
  return result;
}

}  // namespace optoskin
