#ifndef HSMC_CONFIG_HPP
#define HSMC_CONFIG_HPP

#include <cstdint>
#include <string>

#include "hsmc/hyper/hyper.hpp"
#include "hsmc/models/clg.hpp"
#include "hsmc/models/toy.hpp"

namespace hsmc {

/// Everything a sampler run depends on. `finalize()` fills model-dependent
/// defaults (theta_star, hyper prior, alpha1) so the effective configuration
/// is always fully serializable.
struct RunConfig {
  std::string model = "toy";  // "toy" | "clg"
  int n_particles = 100;
  int n_iterations = 0;  // 0 = model default (toy 500, clg 100)
  std::string schedule_mode = "fixed-geometric";  // | "adaptive"
  double alpha1 = 0.0;  // 0 = (theta_star / prior support hi)^2
  double ess_target_fraction = 0.9;
  double resample_threshold_fraction = 0.5;
  double theta_star = 0.0;  // 0 = half the smallest generated theta_true
  bool has_hyper_prior = false;
  HyperPrior hyper_prior;
  std::uint64_t seed = 1;
  int mcmc_sweeps = 0;  // 0 = model default (toy 1, clg 8)
  std::string snapshot_policy = "all";  // "none" | "final" | "all"
  int threads = 1;

  ToyGenParams toy_gen;
  double toy_proposal_sd = 0.5;
  double toy_theta_walk_log_sd = 0.3;

  ClgGenParams clg_gen;
  double clg_log_lambda_lo = -3.0, clg_log_lambda_hi = 3.0;
  int clg_window_lo = 40, clg_window_hi = 60;
  double clg_lambda_walk_sd = 0.4;
  double clg_theta_walk_log_sd = 0.3;
  double clg_neighbor_radius = 2.0;

  void finalize();
  void validate() const;
  SnapshotPolicy snapshot_policy_enum() const;
  TemperingSchedule make_schedule() const;

  static RunConfig defaults(const std::string& model);
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
  std::string to_json(int indent = 2) const;
};

}  // namespace hsmc

#endif
