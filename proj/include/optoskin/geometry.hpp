#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "optoskin/events.hpp"

namespace optoskin {

/// Horizontal-plane camera model: pinhole with a single cubic radial term.
///
/// Frame convention: skin frame, origin at Cam1's corner, x along the camera
/// baseline, y into the sensor. Bearings are world-frame angles measured from
/// +x, counter-clockwise, and increase with u.
struct CameraModel {
  Point2 position;
  double orientation_rad{0.0};
  double skew_rad{0.0};
  double focal_px{300.0};
  double u_center{319.5};
  double k1{0.0};

  /// Cameras at two corners of the baseline edge, facing the skin center.
  static std::array<CameraModel, 2> default_pair(double side_mm = 100.0, double focal_px = 300.0);

  /// Largest |u_n| reachable on the sensor.
  double max_normalized_u() const;
  /// Distance from the camera to `p` (d1/d2 when `p` is the skin center).
  double distance_to(Point2 p) const;
  /// Throws ConfigError when focal, skew, position or distortion are out of range.
  void validate(double side_mm = 100.0) const;
  bool is_valid(double side_mm = 100.0) const;
};

using CameraPair = std::array<CameraModel, 2>;

double pixel_to_bearing(const CameraModel& model, double u);

/// Inverse of pixel_to_bearing; nullopt when `p` is behind the camera or maps
/// outside [0, 640).
std::optional<double> project_point(const CameraModel& model, Point2 p);

struct Triangulation {
  Point2 estimate;
  double theta1_rad{0.0};
  double theta2_rad{0.0};
  double condition{0.0};  // |sin(theta1 - theta2)|
  bool out_of_bounds{false};
};

inline constexpr double kDegenerateCondition = 1e-6;

/// Throws DegenerateGeometryError for near-parallel rays.
Triangulation triangulate(const CameraModel& m1, double u1, const CameraModel& m2, double u2);

struct CalibrationObservation {
  double u1{0.0};
  double u2{0.0};
  Point2 ground_truth;
};

struct ParamMask {
  bool position{true};
  bool skew{true};
  bool k1{true};
  bool focal{false};
};

struct CalibrationOptions {
  std::array<ParamMask, 2> free{};
  int max_iterations{200};
  double relative_tolerance{1e-10};
  double initial_lambda{1e-3};
  std::size_t min_observations{10};
};

struct CalibrationResult {
  CameraPair models;
  std::vector<std::optional<double>> residuals_mm;  // nullopt for degenerate triangulations
  double initial_rmse_mm{0.0};
  double rmse_mm{0.0};
  double final_cost{0.0};
  int iterations{0};
  std::size_t degenerate_count{0};
  bool converged{false};
  std::vector<double> cost_history;
};

/// Levenberg-Marquardt fit of the free camera parameters minimizing the summed
/// squared triangulation error against ground truth.
CalibrationResult calibrate(const CameraPair& initial, std::span<const CalibrationObservation> observations,
                            const CalibrationOptions& options = {});

}  // namespace optoskin
