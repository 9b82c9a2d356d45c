#ifndef HSMC_RESAMPLE_HPP
#define HSMC_RESAMPLE_HPP

#include <span>
#include <stdexcept>
#include <vector>

namespace hsmc {

/// Systematic resampling with a single uniform draw u in [0,1).
/// Stratum positions are (i+u)/N against the cumulative weights; the output
/// index list is non-decreasing, and each index i appears floor(N*W_i) or
/// ceil(N*W_i) times.
inline std::vector<std::size_t> systematic_resample(std::span<const double> normalized, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("systematic_resample: u must be in [0,1)");
  const std::size_t n = normalized.size();
  std::vector<std::size_t> out;
  out.reserve(n);
  double cum = 0.0;
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pos = (static_cast<double>(k) + u) / static_cast<double>(n);
    while (i + 1 < n && cum + normalized[i] <= pos) cum += normalized[i++];
    out.push_back(i);
  }
  return out;
}

}  // namespace hsmc

#endif
