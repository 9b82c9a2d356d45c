#ifndef HSMC_WEIGHTS_HPP
#define HSMC_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hsmc/errors.hpp"

namespace hsmc {

/// ESS = 1 / sum W_i^2 of normalized weights; in [1, N].
inline double ess(std::span<const double> normalized) {
  double s = 0.0;
  for (double w : normalized) s += w * w;
  if (s <= 0.0) throw DegeneratePopulationError("ess: all weights are zero");
  return 1.0 / s;
}

/// Importance weights kept in the log domain (unnormalized weights underflow
/// otherwise once many tempering increments accumulate). `log_unnorm` holds
/// the weight accumulated since the last resampling time, which is exactly
/// the quantity the evidence product needs.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::size_t n) { reset_uniform(n); }

  void reset_uniform(std::size_t n) {
    log_unnorm_.assign(n, 0.0);
    normalized_.assign(n, 1.0 / static_cast<double>(n));
  }

  /// Eq. 7a/7b step: multiply unnormalized weights by exp(log_ratio) and
  /// renormalize with a max shift.
  void apply_log_ratio(std::span<const double> log_ratio) {
    for (std::size_t i = 0; i < log_unnorm_.size(); ++i) log_unnorm_[i] += log_ratio[i];
    renormalize();
  }

  void renormalize() {
    const double mx = *std::max_element(log_unnorm_.begin(), log_unnorm_.end());
    if (!std::isfinite(mx)) {
      throw DegeneratePopulationError("weight update: all unnormalized weights vanished");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < log_unnorm_.size(); ++i) {
      normalized_[i] = std::exp(log_unnorm_[i] - mx);
      sum += normalized_[i];
    }
    for (double& w : normalized_) w /= sum;
  }

  /// log( (1/N) sum_n w_n ) of the weights accumulated since the last resample.
  double log_mean_accumulated() const {
    const double mx = *std::max_element(log_unnorm_.begin(), log_unnorm_.end());
    if (!std::isfinite(mx)) {
      throw DegeneratePopulationError("evidence update: all unnormalized weights vanished");
    }
    double sum = 0.0;
    for (double lw : log_unnorm_) sum += std::exp(lw - mx);
    return mx + std::log(sum / static_cast<double>(log_unnorm_.size()));
  }

  double ess() const { return hsmc::ess(normalized_); }

  double max_log_spread() const {
    const auto [lo, hi] = std::minmax_element(log_unnorm_.begin(), log_unnorm_.end());
    return *hi - *lo;
  }

  std::size_t size() const { return normalized_.size(); }
  const std::vector<double>& normalized() const { return normalized_; }
  const std::vector<double>& log_unnormalized() const { return log_unnorm_; }

 private:
  std::vector<double> log_unnorm_;
  std::vector<double> normalized_;
};

}  // namespace hsmc

#endif
