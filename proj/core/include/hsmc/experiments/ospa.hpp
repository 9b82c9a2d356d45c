#ifndef HSMC_EXPERIMENTS_OSPA_HPP
#define HSMC_EXPERIMENTS_OSPA_HPP

#include <vector>

#include <Eigen/Dense>

namespace hsmc {

/// Optimal sub-pattern assignment distance: min over assignments of the
/// smaller point set into the larger of the summed Euclidean distances over
/// the min(|est|, |truth|) matched pairs. No cardinality penalty, no cutoff;
/// 0 when either set is empty. Exact (bitmask dynamic program).
double ospa(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& truth);

}  // namespace hsmc

#endif
