#include "optoskin/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace optoskin {

void DbscanParams::validate() const {
  if (!(eps > 0)) throw std::invalid_argument("dbscan: eps must be positive");
  if (min_samples < 1) throw std::invalid_argument("dbscan: min_samples must be >= 1");
}

namespace {

struct UniquePoint {
  double u;
  double v;
  std::size_t weight;
};

// Uniform grid of cell size eps; a neighborhood query scans the 3x3 block.
class CellGrid {
 public:
  CellGrid(const std::vector<UniquePoint>& pts, double eps) : pts_(pts), eps_(eps) {
    cells_.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(cell(pts[i].u), cell(pts[i].v))].push_back(i);
  }

  template <typename Fn>
  void for_each_neighbor(std::size_t i, Fn&& fn) const {
    const auto& p = pts_[i];
    const auto cu = cell(p.u), cv = cell(p.v);
    const double eps2 = eps_ * eps_;
    for (std::int64_t du = -1; du <= 1; ++du) {
      for (std::int64_t dv = -1; dv <= 1; ++dv) {
        auto it = cells_.find(key(cu + du, cv + dv));
        if (it == cells_.end()) continue;
        for (auto j : it->second) {
          const double a = pts_[j].u - p.u, b = pts_[j].v - p.v;
          if (a * a + b * b <= eps2) fn(j);
        }
      }
    }
  }

 private:
  std::int64_t cell(double x) const { return static_cast<std::int64_t>(std::floor(x / eps_)); }
  static std::uint64_t key(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) << 32) ^ (static_cast<std::uint64_t>(b) & 0xffffffffULL);
  }

  const std::vector<UniquePoint>& pts_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<int> dbscan(std::span<const PixelPoint> points, const DbscanParams& params) {
  params.validate();
  std::vector<int> labels(points.size(), kNoise);
  if (points.empty()) return labels;

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].u != points[b].u) return points[a].u < points[b].u;
    if (points[a].v != points[b].v) return points[a].v < points[b].v;
    return a < b;
  });

  // Collapse coincident points; owner[k] maps sorted position to unique index.
  std::vector<UniquePoint> uniq;
  std::vector<std::size_t> owner(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& p = points[order[k]];
    if (uniq.empty() || uniq.back().u != p.u || uniq.back().v != p.v) uniq.push_back({p.u, p.v, 0});
    ++uniq.back().weight;
    owner[k] = uniq.size() - 1;
  }

  const CellGrid grid(uniq, params.eps);
  std::vector<std::size_t> neighbor_weight(uniq.size(), 0);
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    std::size_t w = 0;
    grid.for_each_neighbor(i, [&](std::size_t j) { w += uniq[j].weight; });
    neighbor_weight[i] = w;
  }
  auto is_core = [&](std::size_t i) { return neighbor_weight[i] >= params.min_samples; };

  std::vector<int> ulabel(uniq.size(), kNoise);
  std::deque<std::size_t> frontier;
  int next = 0;
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    if (ulabel[i] != kNoise || !is_core(i)) continue;
    const int id = next++;
    ulabel[i] = id;
    frontier.push_back(i);
    while (!frontier.empty()) {
      const auto c = frontier.front();
      frontier.pop_front();
      grid.for_each_neighbor(c, [&](std::size_t j) {
        if (ulabel[j] != kNoise) return;
        ulabel[j] = id;
        if (is_core(j)) frontier.push_back(j);
      });
    }
  }

  for (std::size_t k = 0; k < order.size(); ++k) labels[order[k]] = ulabel[owner[k]];
  return labels;
}

ClusterResult extract_centroid(std::span<const Event> events, const DbscanParams& params) {
  std::vector<PixelPoint> pts(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) pts[i] = {double(events[i].u), double(events[i].v)};

  ClusterResult res;
  res.labels = dbscan(pts, params);
  const int n = res.labels.empty() ? 0 : *std::max_element(res.labels.begin(), res.labels.end()) + 1;
  res.n_clusters = static_cast<std::size_t>(std::max(n, 0));
  res.centroid_u = res.centroid_v = std::nan("");
  if (n <= 0) return res;

  std::vector<std::size_t> count(res.n_clusters, 0);
  std::vector<double> sum_u(res.n_clusters, 0.0), sum_v(res.n_clusters, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int l = res.labels[i];
    if (l == kNoise) continue;
    ++count[l];
    sum_u[l] += pts[i].u;
    sum_v[l] += pts[i].v;
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < res.n_clusters; ++l) {
    if (count[l] > count[best]) {
      best = l;
    } else if (count[l] == count[best] && sum_u[l] / double(count[l]) < sum_u[best] / double(count[best])) {
      best = l;
    }
  }
  res.largest_label = static_cast<int>(best);
  res.largest_cluster_size = count[best];
  res.centroid_u = sum_u[best] / double(count[best]);
  res.centroid_v = sum_v[best] / double(count[best]);
  res.valid = res.largest_cluster_size >= params.min_cluster_points;
  if (!res.valid) res.centroid_u = res.centroid_v = std::nan("");
  return res;
}

PressVerdict exclude_press(const ClusterResult& cam1, const ClusterResult& cam2) {
  PressVerdict verdict;
  verdict.cam1_failed = !cam1.valid;
  verdict.cam2_failed = !cam2.valid;
  verdict.pass = !verdict.cam1_failed && !verdict.cam2_failed;
  if (verdict.cam1_failed && verdict.cam2_failed) {
    verdict.reason = "no prominent cluster in cam1, cam2";
  } else if (verdict.cam1_failed) {
    verdict.reason = "no prominent cluster in cam1";
  } else if (verdict.cam2_failed) {
    verdict.reason = "no prominent cluster in cam2";
  }
  return verdict;
}

}  // namespace optoskin
