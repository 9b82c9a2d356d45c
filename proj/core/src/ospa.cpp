#include "hsmc/experiments/ospa.hpp"

#include <limits>
#include <stdexcept>

namespace hsmc {

double ospa(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& truth) {
  const auto& small = est.size() <= truth.size() ? est : truth;
  const auto& large = est.size() <= truth.size() ? truth : est;
  const std::size_t m = small.size(), big = large.size();
  if (m == 0) return 0.0;
  if (big > 20) throw std::invalid_argument("ospa: point sets larger than 20 are not supported");

  std::vector<std::vector<double>> cost(m, std::vector<double>(big));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < big; ++j) cost[i][j] = (small[i] - large[j]).norm();
  }

  // dp[mask]: cheapest assignment of the first popcount(mask) small points
  // to the large points in mask
  const std::size_t n_masks = std::size_t{1} << big;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(n_masks, inf);
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    if (dp[mask] == inf) continue;
    const std::size_t i = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (i >= m) continue;
    for (std::size_t j = 0; j < big; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      dp[next] = std::min(dp[next], dp[mask] + cost[i][j]);
    }
  }
  double best = inf;
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) == m) best = std::min(best, dp[mask]);
  }
  return best;
}

}  // namespace hsmc
