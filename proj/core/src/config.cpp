#include "hsmc/config.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hsmc/errors.hpp"
#include "hsmc/schedule.hpp"

namespace hsmc {

using nlohmann::json;

RunConfig RunConfig::defaults(const std::string& model) {
  RunConfig c;
  c.model = model;
  c.finalize();
  return c;
}

void RunConfig::finalize() {
  if (model != "toy" && model != "clg") throw ConfigError("config: model must be 'toy' or 'clg'");
  const bool toy = model == "toy";
  if (n_iterations == 0) n_iterations = toy ? 500 : 100;
  if (mcmc_sweeps == 0) mcmc_sweeps = toy ? 1 : 8;
  if (theta_star == 0.0) {
    theta_star = 0.5 * (toy ? toy_gen.theta_lo : clg_gen.theta_lo);
  }
  if (!has_hyper_prior) {
    // Gamma(2, 4 theta_star) (shape-scale), supported on the explored grid
    const double hi = 50.0 * (toy ? toy_gen.theta_hi : clg_gen.theta_hi);
    hyper_prior = HyperPrior::gamma(2.0, 4.0 * theta_star, theta_star, hi);
    has_hyper_prior = true;
  }
  if (alpha1 == 0.0) {
    const double ratio = theta_star / hyper_prior.support_hi;
    alpha1 = ratio * ratio;
  }
  validate();
}

void RunConfig::validate() const {
  if (n_particles < 2) throw ConfigError("config: n_particles must be >= 2");
  if (n_iterations < 1) throw ConfigError("config: n_iterations must be >= 1");
  if (!(resample_threshold_fraction > 0.0 && resample_threshold_fraction <= 1.0)) {
    throw ConfigError("config: resample_threshold_fraction must be in (0,1]");
  }
  if (!(theta_star > 0.0)) throw ConfigError("config: theta_star must be positive");
  if (schedule_mode != "fixed-geometric" && schedule_mode != "adaptive") {
    throw ConfigError("config: schedule.mode must be 'fixed-geometric' or 'adaptive'");
  }
  if (schedule_mode == "fixed-geometric" && !(alpha1 > 0.0 && alpha1 < 1.0)) {
    throw ConfigError("config: schedule.alpha1 must be in (0,1)");
  }
  if (schedule_mode == "adaptive" && !(ess_target_fraction > 0.0 && ess_target_fraction < 1.0)) {
    throw ConfigError("config: schedule.ess_target_fraction must be in (0,1)");
  }
  if (snapshot_policy != "none" && snapshot_policy != "final" && snapshot_policy != "all") {
    throw ConfigError("config: snapshot_policy must be none|final|all");
  }
  if (mcmc_sweeps < 1) throw ConfigError("config: mcmc_sweeps must be >= 1");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (model == "clg" && !(clg_window_lo >= 1 && clg_window_hi >= clg_window_lo)) {
    throw ConfigError("config: bad clg analysis window");
  }
}

SnapshotPolicy RunConfig::snapshot_policy_enum() const {
  if (snapshot_policy == "none") return SnapshotPolicy::None;
  if (snapshot_policy == "final") return SnapshotPolicy::Final;
  return SnapshotPolicy::All;
}

TemperingSchedule RunConfig::make_schedule() const {
  if (schedule_mode == "adaptive") {
    return TemperingSchedule::adaptive(ess_target_fraction, n_iterations);
  }
  return TemperingSchedule::fixed_geometric(alpha1, n_iterations);
}

namespace {

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  maybe(j, "model", c.model);
  maybe(j, "n_particles", c.n_particles);
  maybe(j, "n_iterations", c.n_iterations);
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    maybe(s, "mode", c.schedule_mode);
    maybe(s, "alpha1", c.alpha1);
    maybe(s, "ess_target_fraction", c.ess_target_fraction);
  }
  maybe(j, "resample_threshold_fraction", c.resample_threshold_fraction);
  maybe(j, "theta_star", c.theta_star);
  if (j.contains("hyper_prior")) {
    c.hyper_prior = HyperPrior::from_json_text(j.at("hyper_prior").dump());
    c.has_hyper_prior = true;
  }
  maybe(j, "seed", c.seed);
  maybe(j, "mcmc_sweeps", c.mcmc_sweeps);
  maybe(j, "snapshot_policy", c.snapshot_policy);
  maybe(j, "threads", c.threads);
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    maybe(t, "n_obs", c.toy_gen.n_obs);
    maybe(t, "waveform_sigma", c.toy_gen.waveform_sigma);
    maybe(t, "gen_theta_lo", c.toy_gen.theta_lo);
    maybe(t, "gen_theta_hi", c.toy_gen.theta_hi);
    maybe(t, "proposal_sd", c.toy_proposal_sd);
    maybe(t, "theta_walk_log_sd", c.toy_theta_walk_log_sd);
  }
  if (j.contains("clg")) {
    const json& g = j.at("clg");
    maybe(g, "gen_theta_lo", c.clg_gen.theta_lo);
    maybe(g, "gen_theta_hi", c.clg_gen.theta_hi);
    maybe(g, "gen_n_dipoles", c.clg_gen.n_dipoles);
    maybe(g, "gen_min_separation_cm", c.clg_gen.min_separation_cm);
    maybe(g, "gen_amplitude", c.clg_gen.amplitude);
    maybe(g, "gen_bump_peak", c.clg_gen.bump_peak);
    maybe(g, "gen_bump_sd", c.clg_gen.bump_sd);
    maybe(g, "gen_n_times", c.clg_gen.n_times);
    maybe(g, "log_lambda_lo", c.clg_log_lambda_lo);
    maybe(g, "log_lambda_hi", c.clg_log_lambda_hi);
    maybe(g, "window_lo", c.clg_window_lo);
    maybe(g, "window_hi", c.clg_window_hi);
    maybe(g, "lambda_walk_sd", c.clg_lambda_walk_sd);
    maybe(g, "theta_walk_log_sd", c.clg_theta_walk_log_sd);
    maybe(g, "neighbor_radius", c.clg_neighbor_radius);
  }
  c.finalize();
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["n_particles"] = n_particles;
  j["n_iterations"] = n_iterations;
  j["schedule"] = {{"mode", schedule_mode},
                   {"alpha1", alpha1},
                   {"ess_target_fraction", ess_target_fraction}};
  j["resample_threshold_fraction"] = resample_threshold_fraction;
  j["theta_star"] = theta_star;
  j["hyper_prior"] = json::parse(hyper_prior.to_json());
  j["seed"] = seed;
  j["mcmc_sweeps"] = mcmc_sweeps;
  j["snapshot_policy"] = snapshot_policy;
  j["threads"] = threads;
  j["toy"] = {{"n_obs", toy_gen.n_obs},
              {"waveform_sigma", toy_gen.waveform_sigma},
              {"gen_theta_lo", toy_gen.theta_lo},
              {"gen_theta_hi", toy_gen.theta_hi},
              {"proposal_sd", toy_proposal_sd},
              {"theta_walk_log_sd", toy_theta_walk_log_sd}};
  j["clg"] = {{"gen_theta_lo", clg_gen.theta_lo},
              {"gen_theta_hi", clg_gen.theta_hi},
              {"gen_n_dipoles", clg_gen.n_dipoles},
              {"gen_min_separation_cm", clg_gen.min_separation_cm},
              {"gen_amplitude", clg_gen.amplitude},
              {"gen_bump_peak", clg_gen.bump_peak},
              {"gen_bump_sd", clg_gen.bump_sd},
              {"gen_n_times", clg_gen.n_times},
              {"log_lambda_lo", clg_log_lambda_lo},
              {"log_lambda_hi", clg_log_lambda_hi},
              {"window_lo", clg_window_lo},
              {"window_hi", clg_window_hi},
              {"lambda_walk_sd", clg_lambda_walk_sd},
              {"theta_walk_log_sd", clg_theta_walk_log_sd},
              {"neighbor_radius", clg_neighbor_radius}};
  return j.dump(indent);
}

}  // namespace hsmc
