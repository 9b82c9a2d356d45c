#include "hsmc/experiments/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hsmc {

std::vector<SourceSample> source_samples_from_snapshot(const Snapshot& snapshot,
                                                       std::size_t location_offset, double scale) {
  std::vector<SourceSample> out;
  out.reserve(snapshot.weights.size());
  for (std::size_t n = 0; n < snapshot.weights.size(); ++n) {
    const auto& coords = snapshot.states[n];
    SourceSample s;
    s.weight = scale * snapshot.weights[n];
    const int d = static_cast<int>(std::lround(coords.at(0)));
    for (int i = 0; i < d; ++i) {
      s.locations.push_back(static_cast<int>(std::lround(coords.at(location_offset + static_cast<std::size_t>(i)))));
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct WeightedPoint {
  Eigen::Vector3d pos;
  int voxel;
  double weight;
};

/// Weighted k-means with farthest-point seeding: first center at the heaviest
/// point, each next center at the point farthest from all chosen centers.
/// Ties break to the lower sample index, so the result is deterministic.
std::vector<int> kmeans_assign(const std::vector<WeightedPoint>& pts, int k) {
  std::vector<Eigen::Vector3d> centers;
  std::size_t first = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].weight > pts[first].weight) first = i;
  }
  centers.push_back(pts[first].pos);
  while (static_cast<int>(centers.size()) < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) dmin = std::min(dmin, (pts[i].pos - c).norm());
      if (dmin > far_d) {
        far_d = dmin;
        far = i;
      }
    }
    centers.push_back(pts[far].pos);
  }

  std::vector<int> assign(pts.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int best = 0;
      double best_d = (pts[i].pos - centers[0]).norm();
      for (int c = 1; c < k; ++c) {
        const double d = (pts[i].pos - centers[static_cast<std::size_t>(c)]).norm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      double wsum = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (assign[i] == c) {
          mean += pts[i].weight * pts[i].pos;
          wsum += pts[i].weight;
        }
      }
      if (wsum > 0.0) centers[static_cast<std::size_t>(c)] = mean / wsum;
    }
  }
  return assign;
}

}  // namespace

DipoleEstimate dipole_estimators(const std::vector<SourceSample>& samples, const VoxelGrid& grid) {
  std::map<int, double> pmf;
  for (const auto& s : samples) pmf[static_cast<int>(s.locations.size())] += s.weight;
  if (pmf.empty()) throw std::invalid_argument("dipole_estimators: empty sample");

  // argmax with ties resolved to the smaller d (map iteration is ascending)
  int d_hat = pmf.begin()->first;
  double best = pmf.begin()->second;
  for (const auto& [d, w] : pmf) {
    if (w > best) {
      best = w;
      d_hat = d;
    }
  }

  DipoleEstimate est;
  est.d_hat = d_hat;
  if (d_hat == 0) return est;

  std::vector<WeightedPoint> pts;
  double wmax = 0.0;
  for (const auto& s : samples) {
    if (static_cast<int>(s.locations.size()) != d_hat) continue;
    wmax = std::max(wmax, s.weight);
  }
  for (const auto& s : samples) {
    if (static_cast<int>(s.locations.size()) != d_hat) continue;
    if (s.weight <= wmax * 1e-14) continue;  // drop numerically-zero mass
    for (int loc : s.locations) {
      pts.push_back({grid.voxel_position(loc), loc, s.weight});
    }
  }
  if (pts.empty()) throw std::invalid_argument("dipole_estimators: no mass at the modal d");

  const auto assign = kmeans_assign(pts, d_hat);
  for (int c = 0; c < d_hat; ++c) {
    std::map<int, double> mass;  // ascending voxel id: ties to the smaller
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (assign[i] == c) mass[pts[i].voxel] += pts[i].weight;
    }
    if (mass.empty()) continue;
    int best_voxel = mass.begin()->first;
    double best_mass = mass.begin()->second;
    for (const auto& [voxel, w] : mass) {
      if (w > best_mass) {
        best_mass = w;
        best_voxel = voxel;
      }
    }
    est.voxels.push_back(best_voxel);
    est.positions.push_back(grid.voxel_position(best_voxel));
  }
  est.d_hat = static_cast<int>(est.voxels.size());
  return est;
}

}  // namespace hsmc
