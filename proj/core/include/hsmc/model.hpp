#ifndef HSMC_MODEL_HPP
#define HSMC_MODEL_HPP

#include <atomic>
#include <concepts>
#include <cstdint>
#include <memory>
#include <vector>

#include "hsmc/random.hpp"

namespace hsmc {

/// Counts full (data-touching) likelihood evaluations. Copies share the
/// counter so a model can be passed around by value inside a study.
class EvalCounter {
 public:
  EvalCounter() : n_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}
  void bump() const { n_->fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t count() const { return n_->load(std::memory_order_relaxed); }
  void reset() const { n_->store(0, std::memory_order_relaxed); }

 private:
  std::shared_ptr<std::atomic<std::uint64_t>> n_;
};

/// What the generic sampler needs from a model.
///
/// `tempered_log_lik(s, alpha)` is the log of the likelihood factor of the
/// intermediate density p_alpha (the prior factor is `log_prior`); it must be
/// 0 at alpha == 0. For models whose ladder is a hyper-parameter grid it is
/// the exact likelihood at theta(alpha), so the evidence product estimates
/// p^{theta(t)}(y) directly. `theta_of(alpha)` is NaN for models without that
/// interpretation. `lik_summary` returns per-particle statistics from which
/// `log_lik_from_summary` can evaluate the likelihood at any theta without
/// touching the data (empty when unsupported).
template <class M>
concept SmcModel = requires(const M& m, const typename M::State& s, RngStream& rng, double alpha) {
  typename M::State;
  { m.sample_prior(rng) } -> std::same_as<typename M::State>;
  { m.log_prior(s) } -> std::convertible_to<double>;
  { m.tempered_log_lik(s, alpha) } -> std::convertible_to<double>;
  { m.theta_of(alpha) } -> std::convertible_to<double>;
  { m.mcmc_sweep(s, alpha, rng) } -> std::same_as<typename M::State>;
  { m.coords(s) } -> std::same_as<std::vector<double>>;
  { m.lik_summary(s) } -> std::same_as<std::vector<double>>;
  { m.eval_count() } -> std::convertible_to<std::uint64_t>;
};

}  // namespace hsmc

#endif
