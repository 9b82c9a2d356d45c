#ifndef HSMC_SAMPLER_HPP
#define HSMC_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "hsmc/errors.hpp"
#include "hsmc/model.hpp"
#include "hsmc/parallel.hpp"
#include "hsmc/particle_system.hpp"
#include "hsmc/random.hpp"
#include "hsmc/resample.hpp"
#include "hsmc/schedule.hpp"
#include "hsmc/trace.hpp"

namespace hsmc {

struct SamplerSettings {
  int n_particles = 100;
  double resample_threshold_fraction = 0.5;
  int mcmc_sweeps = 1;
  SnapshotPolicy snapshots = SnapshotPolicy::All;
  std::uint64_t seed = 0;
  int threads = 1;
};

namespace detail {

template <SmcModel M>
Snapshot take_snapshot(const M& model, const ParticleSystem<typename M::State>& sys) {
  Snapshot snap;
  snap.states.reserve(sys.size());
  snap.loglik_stats.reserve(sys.size());
  for (const auto& s : sys.states) {
    snap.states.push_back(model.coords(s));
    snap.loglik_stats.push_back(model.lik_summary(s));
  }
  snap.weights = sys.weights.normalized();
  return snap;
}

}  // namespace detail

/// One SMC sampler run: per iteration, importance-weight update from
/// p_{t-1} to p_t (weights depend only on previous-step particles, which is
/// what lets the update precede the moves), ESS-triggered systematic
/// resampling, then MCMC sweeps invariant for p_t. Snapshots are taken at
/// the end of the iteration so they carry the moved, diversified population.
template <SmcModel M>
RunTrace run_sampler(const M& model, const TemperingSchedule& schedule, const SamplerSettings& settings) {
  const std::size_t n = static_cast<std::size_t>(settings.n_particles);
  if (n < 2) throw ConfigError("run_sampler: need at least 2 particles");
  if (!(settings.resample_threshold_fraction >= 0.0 && settings.resample_threshold_fraction <= 1.0)) {
    throw ConfigError("run_sampler: resample threshold fraction must be in [0,1]");
  }
  schedule.validate();

  ParticleSystem<typename M::State> sys;
  sys.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = particle_stream(settings.seed, i, 0);
    sys.states.push_back(model.sample_prior(rng));
  }
  sys.weights.reset_uniform(n);

  const bool adaptive = schedule.mode == TemperingSchedule::Mode::Adaptive;
  const int t_max = adaptive ? schedule.max_iterations : static_cast<int>(schedule.exponents.size()) - 1;

  RunTrace trace;
  trace.settings.n_particles = static_cast<int>(n);
  trace.settings.seed = settings.seed;
  trace.settings.resample_threshold_fraction = settings.resample_threshold_fraction;
  trace.settings.mcmc_sweeps = settings.mcmc_sweeps;
  trace.settings.threads = settings.threads;

  std::vector<double> inc(n);
  double prev_alpha = 0.0;

  for (int t = 1; t <= t_max; ++t) {
    double alpha = 0.0;
    if (adaptive) {
      auto inc_at = [&](double a_prime, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
          out[i] = model.tempered_log_lik(sys.states[i], a_prime) -
                   model.tempered_log_lik(sys.states[i], prev_alpha);
        }
      };
      alpha = next_exponent_adaptive(sys.weights.normalized(), inc_at, prev_alpha,
                                     schedule.ess_target_fraction);
      if (t == t_max) alpha = 1.0;  // hard cap
    } else {
      alpha = schedule.exponents[static_cast<std::size_t>(t)];
    }

    parallel_for(n, settings.threads, [&](std::size_t i) {
      inc[i] = model.tempered_log_lik(sys.states[i], alpha) -
               model.tempered_log_lik(sys.states[i], prev_alpha);
      if (std::isnan(inc[i])) throw ModelEvaluationError("tempered log-density returned NaN");
    });

    IterationRecord rec;
    rec.t = t;
    rec.alpha = alpha;
    rec.theta = model.theta_of(alpha);
    try {
      sys.update_weights(inc);
      rec.ess = sys.weights.ess();
      rec.log_evidence = sys.log_evidence();
    } catch (const DegeneratePopulationError&) {
      const auto [lo, hi] = std::minmax_element(inc.begin(), inc.end());
      std::ostringstream msg;
      msg << "degenerate population at iteration " << t << ", alpha " << alpha
          << ", incremental log-weight spread " << (*hi - *lo)
          << " (tempering step too large)";
      throw DegeneratePopulationError(msg.str());
    }

    rec.resampled = rec.ess < settings.resample_threshold_fraction * static_cast<double>(n);
    if (rec.resampled) {
      const double u = population_stream(settings.seed, static_cast<std::uint64_t>(t)).uniform();
      sys.resample_to(systematic_resample(sys.weights.normalized(), u));
    }

    parallel_for(n, settings.threads, [&](std::size_t i) {
      auto rng = particle_stream(settings.seed, i, static_cast<std::uint64_t>(t));
      for (int sweep = 0; sweep < settings.mcmc_sweeps; ++sweep) {
        sys.states[i] = model.mcmc_sweep(sys.states[i], alpha, rng);
      }
    });
    sys.t = t;

    if (settings.snapshots == SnapshotPolicy::All) {
      rec.snapshot = detail::take_snapshot(model, sys);
    }
    trace.records.push_back(std::move(rec));

    prev_alpha = alpha;
    if (adaptive && alpha >= 1.0) break;
  }

  if (settings.snapshots == SnapshotPolicy::Final && !trace.records.empty()) {
    trace.records.back().snapshot = detail::take_snapshot(model, sys);
  }
  trace.settings.n_iterations = static_cast<int>(trace.records.size());
  return trace;
}

}  // namespace hsmc

#endif
