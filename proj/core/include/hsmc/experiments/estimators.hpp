#ifndef HSMC_EXPERIMENTS_ESTIMATORS_HPP
#define HSMC_EXPERIMENTS_ESTIMATORS_HPP

#include <vector>

#include "hsmc/models/clg.hpp"
#include "hsmc/trace.hpp"

namespace hsmc {

/// One weighted draw of the source configuration.
struct SourceSample {
  std::vector<int> locations;
  double weight = 0.0;
};

struct DipoleEstimate {
  int d_hat = 0;
  std::vector<int> voxels;
  std::vector<Eigen::Vector3d> positions;
};

/// d_hat = argmax of the weighted pmf p(d | y) (ties to the smaller d); the
/// location samples conditioned on d = d_hat are split into d_hat clusters by
/// weighted k-means with deterministic farthest-point seeding, and each
/// cluster reports its highest-posterior-mass voxel.
DipoleEstimate dipole_estimators(const std::vector<SourceSample>& samples, const VoxelGrid& grid);

/// Extracts weighted SourceSamples from snapshot coordinates laid out as
/// [d, ..., locations...] with `location_offset` leading scalars.
std::vector<SourceSample> source_samples_from_snapshot(const Snapshot& snapshot,
                                                       std::size_t location_offset,
                                                       double scale = 1.0);

}  // namespace hsmc

#endif
