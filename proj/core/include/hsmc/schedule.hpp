#ifndef HSMC_SCHEDULE_HPP
#define HSMC_SCHEDULE_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsmc/weights.hpp"

namespace hsmc {

/// Ladder of tempering exponents 0 = alpha_0 < alpha_1 < ... < alpha_T = 1.
struct TemperingSchedule {
  enum class Mode { FixedGeometric, Adaptive };

  Mode mode = Mode::FixedGeometric;
  /// Full ladder including alpha_0 = 0 (fixed mode only).
  std::vector<double> exponents;
  /// Adaptive mode: target ESS(incremental) = fraction * current ESS.
  double ess_target_fraction = 0.9;
  /// Adaptive mode: hard cap on the number of iterations.
  int max_iterations = 10000;
  double alpha1 = 1e-5;

  /// alpha_t = alpha1 * (1/alpha1)^((t-1)/(T-1)) for t = 1..T, alpha_0 = 0.
  /// Consecutive ratios alpha_{t+1}/alpha_t are constant for t >= 1.
  static TemperingSchedule fixed_geometric(double alpha1, int n_iterations) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw std::invalid_argument("fixed_geometric: alpha1 must be in (0,1)");
    if (n_iterations < 1) throw std::invalid_argument("fixed_geometric: need at least one iteration");
    TemperingSchedule s;
    s.mode = Mode::FixedGeometric;
    s.alpha1 = alpha1;
    s.exponents.resize(static_cast<std::size_t>(n_iterations) + 1);
    s.exponents[0] = 0.0;
    if (n_iterations == 1) {
      s.exponents[1] = 1.0;
      return s;
    }
    const double log_a1 = std::log(alpha1);
    for (int t = 1; t <= n_iterations; ++t) {
      const double frac = static_cast<double>(t - 1) / static_cast<double>(n_iterations - 1);
      s.exponents[static_cast<std::size_t>(t)] = std::exp(log_a1 * (1.0 - frac));
    }
    s.exponents.back() = 1.0;
    s.validate();
    return s;
  }

  static TemperingSchedule adaptive(double ess_target_fraction, int max_iterations) {
    if (!(ess_target_fraction > 0.0 && ess_target_fraction < 1.0)) {
      throw std::invalid_argument("adaptive: ess_target_fraction must be in (0,1)");
    }
    TemperingSchedule s;
    s.mode = Mode::Adaptive;
    s.ess_target_fraction = ess_target_fraction;
    s.max_iterations = max_iterations;
    return s;
  }

  void validate() const {
    if (mode != Mode::FixedGeometric) return;
    if (exponents.size() < 2 || exponents.front() != 0.0 || exponents.back() != 1.0) {
      throw std::invalid_argument("schedule: ladder must run 0 = alpha_0 < ... < alpha_T = 1");
    }
    for (std::size_t t = 1; t < exponents.size(); ++t) {
      if (!(exponents[t] > exponents[t - 1])) {
        throw std::invalid_argument("schedule: exponents must be strictly increasing");
      }
    }
  }
};

/// Bisection for the next exponent: finds alpha' in (alpha, 1] such that the
/// ESS of the would-be updated weights equals ess_target_fraction times the
/// current ESS; clamps to 1 when even the full step keeps that much ESS.
/// `incremental_logw(alpha_prime, out)` must fill per-particle log-weight
/// increments for the step alpha -> alpha_prime.
template <class IncFn>
double next_exponent_adaptive(std::span<const double> current_normalized, IncFn&& incremental_logw,
                              double alpha, double ess_target_fraction) {
  if (!(alpha < 1.0)) throw std::invalid_argument("next_exponent_adaptive: alpha must be < 1");
  const std::size_t n = current_normalized.size();
  const double target = ess_target_fraction * ess(current_normalized);

  std::vector<double> inc(n), w(n);
  auto ess_at = [&](double a_prime) {
    incremental_logw(a_prime, std::span<double>(inc));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::log(current_normalized[i]) + inc[i];
      mx = std::max(mx, w[i]);
    }
    if (!std::isfinite(mx)) return 0.0;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::exp(w[i] - mx);
      sum += v;
      sum2 += v * v;
    }
    return sum * sum / sum2;
  };

  if (ess_at(1.0) >= target) return 1.0;

  double lo = alpha, hi = 1.0;
  for (int it = 0; it < 50 && hi - lo > 1e-8; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ess_at(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace hsmc

#endif
