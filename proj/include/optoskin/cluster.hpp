#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "optoskin/events.hpp"

namespace optoskin {

inline constexpr int kNoise = -1;

struct PixelPoint {
  double u{0.0};
  double v{0.0};
};

struct DbscanParams {
  double eps{10.0};
  std::size_t min_samples{10};
  std::size_t min_cluster_points{10};

  void validate() const;
};

/// DBSCAN with a Euclidean eps-neighborhood. A point is core when at least
/// `min_samples` points, itself included, lie within `eps`.
///
/// Points are visited in lexicographic (u, v) order, so the labelling does not
/// depend on input order: cluster ids follow the order in which their first
/// core point is met, and a border point reachable from several clusters joins
/// the one formed first. Coincident points are handled as one weighted point.
std::vector<int> dbscan(std::span<const PixelPoint> points, const DbscanParams& params);

struct ClusterResult {
  std::vector<int> labels;
  std::size_t n_clusters{0};
  std::size_t largest_cluster_size{0};
  int largest_label{kNoise};
  double centroid_u{0.0};
  double centroid_v{0.0};
  bool valid{false};
};

/// Dominant cluster of one camera's (already cropped) press events. Ties in
/// cluster size go to the cluster with the lower mean u.
ClusterResult extract_centroid(std::span<const Event> events, const DbscanParams& params);

struct PressVerdict {
  bool pass{false};
  bool cam1_failed{false};
  bool cam2_failed{false};
  std::string reason;
};

PressVerdict exclude_press(const ClusterResult& cam1, const ClusterResult& cam2);

}  // namespace optoskin
