#ifndef HSMC_PARTICLE_SYSTEM_HPP
#define HSMC_PARTICLE_SYSTEM_HPP

#include <span>
#include <vector>

#include "hsmc/weights.hpp"

namespace hsmc {

/// Weighted particle population with evidence bookkeeping. The population
/// size is fixed for the whole run. `log_evidence_completed` accumulates
/// log of the average weight over completed resampling epochs, so the
/// current evidence estimate (Eq. 9, adaptive-resampling form) is always
/// completed epochs plus the running epoch's log-average.
template <class State>
struct ParticleSystem {
  std::vector<State> states;
  WeightVector weights;
  int t = 0;
  double log_evidence_completed = 0.0;

  std::size_t size() const { return states.size(); }

  double log_evidence() const { return log_evidence_completed + weights.log_mean_accumulated(); }

  /// Eq. 7a/7b: multiply unnormalized weights by exp(log_ratio), renormalize.
  void update_weights(std::span<const double> log_ratio) { weights.apply_log_ratio(log_ratio); }

  /// Finalizes the running epoch and replaces the population by `indices`.
  void resample_to(const std::vector<std::size_t>& indices) {
    log_evidence_completed = log_evidence();
    std::vector<State> next;
    next.reserve(states.size());
    for (std::size_t i : indices) next.push_back(states[i]);
    states = std::move(next);
    weights.reset_uniform(states.size());
  }
};

}  // namespace hsmc

#endif
