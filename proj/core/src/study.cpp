#include "hsmc/experiments/study.hpp"

#include <time.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hsmc/errors.hpp"
#include "hsmc/experiments/estimators.hpp"
#include "hsmc/experiments/ospa.hpp"
#include "hsmc/parallel.hpp"
#include "hsmc/sampler.hpp"

namespace hsmc {

double thread_cpu_seconds() {
  timespec ts;
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate) {
  return stream_key(base_seed, 0x5eed, static_cast<std::uint64_t>(replicate));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - std::floor(pos);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

std::function<double(std::span<const double>, double)> lik_from_summary_fn(
    const TraceSettings& settings) {
  if (settings.model_id == "toy") {
    if (settings.lik_meta.size() != 1) throw ConfigError("trace: bad toy lik_meta");
    const double n_obs = settings.lik_meta[0];
    return [n_obs](std::span<const double> stat, double theta) {
      return -0.5 * n_obs * std::log(2.0 * M_PI * theta * theta) - stat[0] / (2.0 * theta * theta);
    };
  }
  if (settings.model_id == "clg") {
    if (settings.lik_meta.size() != 4) throw ConfigError("trace: bad clg lik_meta");
    const double k = settings.lik_meta[0];
    const double w = settings.lik_meta[1];
    const double logdet_sigma = settings.lik_meta[2];
    const double total_power = settings.lik_meta[3];
    return [k, w, logdet_sigma, total_power](std::span<const double> stat, double theta) {
      const std::size_t r = stat.size() / 2;
      const double th2 = theta * theta;
      double logdet = (k - static_cast<double>(r)) * std::log(th2);
      double quad = total_power / th2;
      for (std::size_t j = 0; j < r; ++j) {
        const double m = stat[j];
        const double s = stat[r + j];
        logdet += std::log(m + th2);
        quad += s / (m + th2) - s / th2;
      }
      return -0.5 * w * (k * std::log(2.0 * M_PI) + logdet_sigma + logdet) - 0.5 * quad;
    };
  }
  throw ConfigError("trace: no likelihood-summary evaluator for model '" + settings.model_id + "'");
}

namespace {

void stamp_settings(RunTrace& trace, const RunConfig& config, const std::string& model_id,
                    std::vector<double> lik_meta) {
  trace.settings.model_id = model_id;
  trace.settings.theta_star = config.theta_star;
  trace.settings.schedule_mode = config.schedule_mode;
  trace.settings.alpha1 = config.schedule_mode == "fixed-geometric" ? config.alpha1 : 0.0;
  trace.settings.ess_target_fraction =
      config.schedule_mode == "adaptive" ? config.ess_target_fraction : 0.0;
  trace.settings.snapshot_policy = config.snapshot_policy;
  trace.settings.lik_meta = std::move(lik_meta);
}

SamplerSettings sampler_settings(const RunConfig& config) {
  SamplerSettings s;
  s.n_particles = config.n_particles;
  s.resample_threshold_fraction = config.resample_threshold_fraction;
  s.mcmc_sweeps = config.mcmc_sweeps;
  s.snapshots = config.snapshot_policy_enum();
  s.seed = config.seed;
  s.threads = config.threads;
  return s;
}

ClgParams clg_params_from(const RunConfig& config) {
  ClgParams p;
  p.theta_star = config.theta_star;
  p.log_lambda_lo = config.clg_log_lambda_lo;
  p.log_lambda_hi = config.clg_log_lambda_hi;
  p.lambda_walk_sd = config.clg_lambda_walk_sd;
  return p;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_toy(const ToyData& d) {
  std::uint64_t h = fnv1a(d.times.data(), d.times.size() * sizeof(double));
  h ^= fnv1a(d.data.data(), d.data.size() * sizeof(double));
  return h;
}

std::uint64_t hash_clg(const ClgData& d) {
  return fnv1a(d.observations.data(),
               static_cast<std::size_t>(d.observations.size()) * sizeof(double));
}

}  // namespace

RunTrace run_toy_trace(const RunConfig& config, const ToyData& data) {
  ToyModel model(data, config.theta_star, config.toy_proposal_sd);
  RunTrace trace = run_sampler(model, config.make_schedule(), sampler_settings(config));
  stamp_settings(trace, config, "toy", {static_cast<double>(data.times.size())});
  return trace;
}

RunTrace run_clg_trace(const RunConfig& config, const ClgData& data, const VoxelGrid& grid) {
  ClgModel model(&grid, data.observations, config.clg_window_lo, config.clg_window_hi,
                 clg_params_from(config));
  RunTrace trace = run_sampler(model, config.make_schedule(), sampler_settings(config));
  const auto& win = model.window_data();
  stamp_settings(trace, config, "clg",
                 {static_cast<double>(grid.n_sensors()), static_cast<double>(win.cols()),
                  0.0, win.squaredNorm()});
  return trace;
}

AnalyzeOutput analyze_trace(const RunTrace& trace, const HyperPrior& prior, const std::string& mode) {
  if (mode != "eb" && mode != "fb" && mode != "both") {
    throw ConfigError("analyze: mode must be eb|fb|both");
  }
  AnalyzeOutput out;
  out.ledger = build_ledger(trace);
  out.posterior = hyper_posterior(out.ledger, prior);
  out.theta = theta_estimators(out.posterior);
  out.eb_theta = eb_select(out.posterior).theta_bar;

  if (mode == "eb" || mode == "both") {
    const std::size_t anchor = anchor_iteration(out.ledger.thetas, out.eb_theta);
    out.anchor_trace_t = out.ledger.trace_t[anchor];
    out.anchor_theta = out.ledger.thetas[anchor];
    const auto& rec = trace.records[static_cast<std::size_t>(out.anchor_trace_t - 1)];
    if (rec.snapshot) {
      out.reweighted = reweight_to_theta(*rec.snapshot, out.eb_theta, out.anchor_theta,
                                         lik_from_summary_fn(trace.settings));
      out.ess_after_reweight = out.reweighted->ess;
      out.reweight_degenerate = out.reweighted->degenerate;
    } else if (mode == "eb") {
      throw ConfigError("analyze: eb reweighting needs a stored snapshot at iteration " +
                        std::to_string(out.anchor_trace_t));
    }
  }
  if (mode == "fb" || mode == "both") {
    out.recycled = fb_average(trace, prior);
  }
  return out;
}

void StudySpec::finalize() {
  if (run.model.empty()) run.model = model;
  if (run.model != model) throw ConfigError("study: run.model must match study model");
  run.finalize();
  if (n_replicates == 0) n_replicates = model == "toy" ? 100 : 50;
  if (n_replicates < 1) throw ConfigError("study: n_replicates must be >= 1");
  if (methods.empty()) {
    methods = model == "toy"
                  ? std::vector<std::string>{"PropEB", "PropFB", "BaselineEB", "BaselineFB"}
                  : std::vector<std::string>{"PropEB", "PropFB", "BaselineFB"};
  }
  for (const auto& m : methods) {
    if (m != "PropEB" && m != "PropFB" && m != "BaselineEB" && m != "BaselineFB") {
      throw ConfigError("study: unknown method '" + m + "'");
    }
    if (m == "BaselineEB" && model == "clg") {
      throw ConfigError("study: the grid EB baseline is defined for the toy model only");
    }
  }
  if (jobs < 1) throw ConfigError("study: jobs must be >= 1");
}

StudySpec StudySpec::defaults(const std::string& model) {
  StudySpec s;
  s.model = model;
  s.run = RunConfig::defaults(model);
  s.finalize();
  return s;
}

StudySpec StudySpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study spec: invalid JSON: ") + e.what());
  }
  StudySpec s;
  if (j.contains("model")) s.model = j.at("model").get<std::string>();
  if (j.contains("n_replicates")) s.n_replicates = j.at("n_replicates").get<int>();
  if (j.contains("base_seed")) s.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("jobs")) s.jobs = j.at("jobs").get<int>();
  if (j.contains("store_traces")) s.store_traces = j.at("store_traces").get<bool>();
  if (j.contains("run")) {
    nlohmann::json run = j.at("run");
    if (!run.contains("model")) run["model"] = s.model;
    s.run = RunConfig::from_json_text(run.dump());
  } else {
    s.run = RunConfig::defaults(s.model);
  }
  s.finalize();
  return s;
}

StudySpec StudySpec::from_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open study spec: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string StudySpec::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["n_replicates"] = n_replicates;
  j["base_seed"] = base_seed;
  j["methods"] = methods;
  j["jobs"] = jobs;
  j["store_traces"] = store_traces;
  j["run"] = nlohmann::json::parse(run.to_json(0));
  return j.dump(indent);
}

namespace {

struct PhaseTimer {
  double cpu0 = thread_cpu_seconds();
  std::chrono::steady_clock::time_point wall0 = std::chrono::steady_clock::now();
  double cpu() const { return thread_cpu_seconds() - cpu0; }
  double wall() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  }
};

bool wants(const StudySpec& spec, const std::string& m) {
  return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
}

void maybe_store_trace(const StudySpec& spec, const std::string& out_dir, int rep,
                       const std::string& method, const RunTrace& trace) {
  if (!spec.store_traces || out_dir.empty()) return;
  RunTrace thin = trace;
  for (auto& r : thin.records) r.snapshot.reset();  // keep stored traces small
  thin.settings.snapshot_policy = "none";
  std::ostringstream name;
  name << out_dir << "/trace_rep" << rep << "_" << method << ".json";
  write_trace(thin, name.str());
}

ReplicateRow run_toy_replicate(const StudySpec& spec, int rep, const std::string& out_dir) {
  ReplicateRow row;
  row.replicate = rep;
  row.seed = replicate_seed(spec.base_seed, rep);

  RunConfig cfg = spec.run;
  cfg.seed = row.seed;
  const ToyData data = generate_toy_data(row.seed, cfg.toy_gen);
  row.theta_true = data.theta_true;
  const double mu_true = cfg.toy_gen.mu_true;
  const std::uint64_t data_hash = hash_toy(data);

  const bool need_prop = wants(spec, "PropEB") || wants(spec, "PropFB");
  if (need_prop) {
    if (hash_toy(data) != data_hash) throw std::logic_error("dataset mutated");
    ToyModel model(data, cfg.theta_star, cfg.toy_proposal_sd);
    PhaseTimer run_timer;
    RunTrace trace = run_sampler(model, cfg.make_schedule(), sampler_settings(cfg));
    stamp_settings(trace, cfg, "toy", {static_cast<double>(data.times.size())});
    row.prop_run_cpu_s = run_timer.cpu();
    row.prop_run_wall_s = run_timer.wall();
    row.prop_run_evals = model.eval_count();

    PhaseTimer analysis_timer;
    const std::uint64_t evals_before = model.eval_count();
    const AnalyzeOutput analysis = analyze_trace(trace, cfg.hyper_prior, "both");
    row.prop_analysis_evals = model.eval_count() - evals_before;

    if (wants(spec, "PropFB")) {
      PhaseTimer fb_timer;
      MethodMetrics m;
      m.theta_map_err = std::abs(analysis.theta.map - data.theta_true);
      m.theta_pm_err = std::abs(analysis.recycled->theta_mean() - data.theta_true);
      const auto samples = analysis.recycled->coord_samples(0);
      std::vector<double> v(samples.size()), w(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        v[i] = samples[i].first;
        w[i] = samples[i].second;
      }
      m.mu_pm_err = std::abs(weighted_mean(v, w) - mu_true);
      m.mu_map_err = std::abs(weighted_kde_mode(v, w) - mu_true);
      m.cpu_s = row.prop_run_cpu_s + fb_timer.cpu();
      m.wall_s = row.prop_run_wall_s + fb_timer.wall();
      m.evals = row.prop_run_evals;
      row.methods["PropFB"] = m;
    }
    if (wants(spec, "PropEB")) {
      PhaseTimer eb_timer;
      MethodMetrics m;
      m.theta_map_err = std::abs(analysis.eb_theta - data.theta_true);
      m.theta_pm_err = std::abs(analysis.theta.pm - data.theta_true);
      const auto& rw = *analysis.reweighted;
      std::vector<double> mu(rw.snapshot->states.size());
      for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = rw.snapshot->states[i][0];
      m.mu_pm_err = std::abs(weighted_mean(mu, rw.weights) - mu_true);
      m.mu_map_err = std::abs(weighted_kde_mode(mu, rw.weights) - mu_true);
      m.cpu_s = row.prop_run_cpu_s + eb_timer.cpu();
      m.wall_s = row.prop_run_wall_s + eb_timer.wall();
      m.evals = row.prop_run_evals;
      row.methods["PropEB"] = m;
    }
    row.prop_analysis_cpu_s = analysis_timer.cpu();
    row.prop_analysis_wall_s = analysis_timer.wall();
    maybe_store_trace(spec, out_dir, rep, "Prop", trace);
  }

  if (wants(spec, "BaselineFB")) {
    if (hash_toy(data) != data_hash) throw std::logic_error("dataset mutated");
    ToyJointModel joint(data, 2.0, 4.0 * cfg.theta_star, cfg.toy_proposal_sd,
                        cfg.toy_theta_walk_log_sd);
    PhaseTimer timer;
    RunConfig bcfg = cfg;
    bcfg.snapshot_policy = "final";
    RunTrace trace = run_sampler(joint, bcfg.make_schedule(), sampler_settings(bcfg));
    stamp_settings(trace, bcfg, "toy-joint", {});
    const Snapshot& snap = *trace.records.back().snapshot;
    std::vector<double> mu(snap.states.size()), th(snap.states.size());
    for (std::size_t i = 0; i < snap.states.size(); ++i) {
      mu[i] = snap.states[i][0];
      th[i] = snap.states[i][1];
    }
    MethodMetrics m;
    m.theta_pm_err = std::abs(weighted_mean(th, snap.weights) - data.theta_true);
    m.theta_map_err = std::abs(weighted_kde_mode(th, snap.weights) - data.theta_true);
    m.mu_pm_err = std::abs(weighted_mean(mu, snap.weights) - mu_true);
    m.mu_map_err = std::abs(weighted_kde_mode(mu, snap.weights) - mu_true);
    m.cpu_s = timer.cpu();
    m.wall_s = timer.wall();
    m.evals = joint.eval_count();
    row.methods["BaselineFB"] = m;
    maybe_store_trace(spec, out_dir, rep, "BaselineFB", trace);
  }

  if (wants(spec, "BaselineEB")) {
    if (hash_toy(data) != data_hash) throw std::logic_error("dataset mutated");
    ToyJointModel joint(data, 2.0, 4.0 * cfg.theta_star, cfg.toy_proposal_sd,
                        cfg.toy_theta_walk_log_sd);
    PhaseTimer timer;
    // grid construction of p_hat(theta | y) over M evenly spaced mu samples
    const int n_mu = 100, n_theta = 500;
    const double theta_lo = cfg.theta_star, theta_hi = 50.0 * data.theta_true;
    std::vector<double> mu_grid(n_mu);
    for (int i = 0; i < n_mu; ++i) {
      mu_grid[static_cast<std::size_t>(i)] =
          ToyModel::kPriorLo + (ToyModel::kPriorHi - ToyModel::kPriorLo) * i / (n_mu - 1.0);
    }
    double best_theta = theta_lo;
    double best_val = -std::numeric_limits<double>::infinity();
    std::vector<double> theta_grid(n_theta), post_vals(n_theta);
    for (int jt = 0; jt < n_theta; ++jt) {
      const double theta = theta_lo + (theta_hi - theta_lo) * jt / (n_theta - 1.0);
      theta_grid[static_cast<std::size_t>(jt)] = theta;
      double mx = -std::numeric_limits<double>::infinity();
      std::vector<double> terms(mu_grid.size());
      for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        terms[i] = joint.eval_log_lik(mu_grid[i], theta) +
                   gamma_log_pdf(theta, 2.0, 4.0 * cfg.theta_star) - std::log(10.0);
        mx = std::max(mx, terms[i]);
      }
      double sum = 0.0;
      for (double t : terms) sum += std::exp(t - mx);
      const double val = mx + std::log(sum / n_mu);
      post_vals[static_cast<std::size_t>(jt)] = val;
      if (val > best_val) {  // strict: ties resolve to the smaller theta
        best_val = val;
        best_theta = theta;
      }
    }
    // posterior-mean proxy on the same grid
    double mx = *std::max_element(post_vals.begin(), post_vals.end());
    double norm = 0.0, num = 0.0;
    for (int jt = 0; jt < n_theta; ++jt) {
      const double p = std::exp(post_vals[static_cast<std::size_t>(jt)] - mx);
      norm += p;
      num += p * theta_grid[static_cast<std::size_t>(jt)];
    }
    // conditional run at the selected theta
    RunConfig ccfg = cfg;
    ccfg.theta_star = best_theta;
    ccfg.alpha1 = 0.0;
    ccfg.has_hyper_prior = true;  // keep the same prior object; alpha1 recomputed below
    const double ratio = best_theta / cfg.hyper_prior.support_hi;
    ccfg.alpha1 = std::min(0.99, ratio * ratio);
    ccfg.snapshot_policy = "final";
    ToyModel cond(data, best_theta, cfg.toy_proposal_sd);
    RunTrace ctrace = run_sampler(cond, ccfg.make_schedule(), sampler_settings(ccfg));
    const Snapshot& snap = *ctrace.records.back().snapshot;
    std::vector<double> mu(snap.states.size());
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = snap.states[i][0];
    MethodMetrics m;
    m.theta_map_err = std::abs(best_theta - data.theta_true);
    m.theta_pm_err = std::abs(num / norm - data.theta_true);
    m.mu_pm_err = std::abs(weighted_mean(mu, snap.weights) - mu_true);
    m.mu_map_err = std::abs(weighted_kde_mode(mu, snap.weights) - mu_true);
    m.cpu_s = timer.cpu();
    m.wall_s = timer.wall();
    m.evals = joint.eval_count() + cond.eval_count();
    row.methods["BaselineEB"] = m;
  }
  return row;
}

ReplicateRow run_clg_replicate(const StudySpec& spec, int rep, const VoxelGrid& grid,
                               const std::string& out_dir) {
  ReplicateRow row;
  row.replicate = rep;
  row.seed = replicate_seed(spec.base_seed, rep);

  RunConfig cfg = spec.run;
  cfg.seed = row.seed;
  const ClgData data = generate_clg_data(row.seed, grid, cfg.clg_gen);
  row.theta_true = data.truth.theta_true;
  const std::uint64_t data_hash = hash_clg(data);
  std::vector<Eigen::Vector3d> truth_pos;
  for (int loc : data.truth.locations) truth_pos.push_back(grid.voxel_position(loc));

  const bool need_prop = wants(spec, "PropEB") || wants(spec, "PropFB");
  if (need_prop) {
    if (hash_clg(data) != data_hash) throw std::logic_error("dataset mutated");
    ClgModel model(&grid, data.observations, cfg.clg_window_lo, cfg.clg_window_hi,
                   clg_params_from(cfg));
    PhaseTimer run_timer;
    RunTrace trace = run_sampler(model, cfg.make_schedule(), sampler_settings(cfg));
    const auto& win = model.window_data();
    stamp_settings(trace, cfg, "clg",
                   {static_cast<double>(grid.n_sensors()), static_cast<double>(win.cols()), 0.0,
                    win.squaredNorm()});
    row.prop_run_cpu_s = run_timer.cpu();
    row.prop_run_wall_s = run_timer.wall();
    row.prop_run_evals = model.eval_count();

    PhaseTimer analysis_timer;
    const std::uint64_t evals_before = model.eval_count();
    const AnalyzeOutput analysis = analyze_trace(trace, cfg.hyper_prior, "both");
    row.prop_analysis_evals = model.eval_count() - evals_before;

    if (wants(spec, "PropFB")) {
      PhaseTimer fb_timer;
      MethodMetrics m;
      m.theta_map_err = std::abs(analysis.theta.map - row.theta_true);
      m.theta_pm_err = std::abs(analysis.recycled->theta_mean() - row.theta_true);
      std::vector<SourceSample> samples;
      const auto& rec = *analysis.recycled;
      for (std::size_t i = 0; i < rec.trace_t.size(); ++i) {
        const auto& snap = *trace.records[static_cast<std::size_t>(rec.trace_t[i] - 1)].snapshot;
        auto part = source_samples_from_snapshot(snap, 2, rec.iter_weight[i]);
        samples.insert(samples.end(), part.begin(), part.end());
      }
      const DipoleEstimate est = dipole_estimators(samples, grid);
      m.d_hat = est.d_hat;
      m.ospa_cm = ospa(est.positions, truth_pos);
      m.cpu_s = row.prop_run_cpu_s + fb_timer.cpu();
      m.wall_s = row.prop_run_wall_s + fb_timer.wall();
      m.evals = row.prop_run_evals;
      row.methods["PropFB"] = m;
    }
    if (wants(spec, "PropEB")) {
      PhaseTimer eb_timer;
      MethodMetrics m;
      m.theta_map_err = std::abs(analysis.eb_theta - row.theta_true);
      m.theta_pm_err = std::abs(analysis.theta.pm - row.theta_true);
      const auto& rw = *analysis.reweighted;
      Snapshot reweighted_snap = *rw.snapshot;
      reweighted_snap.weights = rw.weights;
      const auto samples = source_samples_from_snapshot(reweighted_snap, 2);
      const DipoleEstimate est = dipole_estimators(samples, grid);
      m.d_hat = est.d_hat;
      m.ospa_cm = ospa(est.positions, truth_pos);
      m.cpu_s = row.prop_run_cpu_s + eb_timer.cpu();
      m.wall_s = row.prop_run_wall_s + eb_timer.wall();
      m.evals = row.prop_run_evals;
      row.methods["PropEB"] = m;
    }
    row.prop_analysis_cpu_s = analysis_timer.cpu();
    row.prop_analysis_wall_s = analysis_timer.wall();
    maybe_store_trace(spec, out_dir, rep, "Prop", trace);
  }

  if (wants(spec, "BaselineFB")) {
    if (hash_clg(data) != data_hash) throw std::logic_error("dataset mutated");
    ClgModel rb(&grid, data.observations, cfg.clg_window_lo, cfg.clg_window_hi,
                clg_params_from(cfg));
    ClgJointModel joint(&rb, 2.0, 4.0 * cfg.theta_star, cfg.clg_theta_walk_log_sd);
    PhaseTimer timer;
    RunConfig bcfg = cfg;
    bcfg.snapshot_policy = "final";
    RunTrace trace = run_sampler(joint, bcfg.make_schedule(), sampler_settings(bcfg));
    stamp_settings(trace, bcfg, "clg-joint", {});
    const Snapshot& snap = *trace.records.back().snapshot;
    std::vector<double> th(snap.states.size());
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = snap.states[i][2];
    MethodMetrics m;
    m.theta_pm_err = std::abs(weighted_mean(th, snap.weights) - row.theta_true);
    m.theta_map_err = std::abs(weighted_kde_mode(th, snap.weights) - row.theta_true);
    const auto samples = source_samples_from_snapshot(snap, 3);
    const DipoleEstimate est = dipole_estimators(samples, grid);
    m.d_hat = est.d_hat;
    m.ospa_cm = ospa(est.positions, truth_pos);
    m.cpu_s = timer.cpu();
    m.wall_s = timer.wall();
    m.evals = joint.eval_count();
    row.methods["BaselineFB"] = m;
    maybe_store_trace(spec, out_dir, rep, "BaselineFB", trace);
  }
  return row;
}

}  // namespace

StudyResult run_study(const StudySpec& spec_in, const std::string& out_dir) {
  StudySpec spec = spec_in;
  spec.finalize();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  StudyResult result;
  result.spec = spec;
  result.rows.resize(static_cast<std::size_t>(spec.n_replicates));

  std::optional<VoxelGrid> grid;
  if (spec.model == "clg") grid.emplace(VoxelGrid::desk_grid(spec.run.clg_neighbor_radius));

  parallel_for(static_cast<std::size_t>(spec.n_replicates), spec.jobs, [&](std::size_t rep) {
    auto& row = result.rows[rep];
    try {
      row = spec.model == "toy"
                ? run_toy_replicate(spec, static_cast<int>(rep), out_dir)
                : run_clg_replicate(spec, static_cast<int>(rep), *grid, out_dir);
    } catch (const std::exception& e) {
      row.replicate = static_cast<int>(rep);
      row.seed = replicate_seed(spec.base_seed, static_cast<int>(rep));
      row.failed = true;
      row.error = e.what();
    }
  });

  if (!out_dir.empty()) write_study_outputs(result, out_dir);
  return result;
}

namespace {

void append_csv_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void write_study_outputs(const StudyResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const bool toy = result.spec.model == "toy";
  const auto& methods = result.spec.methods;

  const std::vector<std::string> metric_names =
      toy ? std::vector<std::string>{"theta_map_err", "theta_pm_err", "mu_map_err", "mu_pm_err"}
          : std::vector<std::string>{"theta_map_err", "theta_pm_err", "ospa_cm", "d_hat"};

  auto metric_value = [&](const MethodMetrics& m, const std::string& name) {
    if (name == "theta_map_err") return m.theta_map_err;
    if (name == "theta_pm_err") return m.theta_pm_err;
    if (name == "mu_map_err") return m.mu_map_err;
    if (name == "mu_pm_err") return m.mu_pm_err;
    if (name == "ospa_cm") return m.ospa_cm;
    return static_cast<double>(m.d_hat);
  };

  {
    std::string csv = "replicate,seed,theta_true";
    for (const auto& meth : methods) {
      for (const auto& name : metric_names) csv += "," + meth + "_" + name;
    }
    csv += ",failed\n";
    for (const auto& row : result.rows) {
      csv += std::to_string(row.replicate) + "," + std::to_string(row.seed) + ",";
      append_csv_double(csv, row.theta_true);
      for (const auto& meth : methods) {
        for (const auto& name : metric_names) {
          csv += ",";
          const auto it = row.methods.find(meth);
          append_csv_double(csv, it == row.methods.end()
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : metric_value(it->second, name));
        }
      }
      csv += row.failed ? ",1\n" : ",0\n";
    }
    std::ofstream f(out_dir + "/replicates.csv", std::ios::binary);
    f << csv;
  }

  {
    std::string csv = "method,metric,q25,median,q75\n";
    for (const auto& meth : methods) {
      for (const auto& name : metric_names) {
        std::vector<double> vals;
        for (const auto& row : result.rows) {
          const auto it = row.methods.find(meth);
          if (it != row.methods.end() && std::isfinite(metric_value(it->second, name))) {
            vals.push_back(metric_value(it->second, name));
          }
        }
        csv += meth + "," + name + ",";
        append_csv_double(csv, quantile(vals, 0.25));
        csv += ",";
        append_csv_double(csv, quantile(vals, 0.5));
        csv += ",";
        append_csv_double(csv, quantile(vals, 0.75));
        csv += "\n";
      }
    }
    std::ofstream f(out_dir + "/summary.csv", std::ios::binary);
    f << csv;
  }

  {
    // CPU/wall times are inherently non-deterministic; they live in their own
    // file so every other study output is byte-reproducible.
    std::string csv = "replicate";
    for (const auto& meth : methods) csv += "," + meth + "_cpu_s," + meth + "_wall_s," + meth + "_evals";
    csv += ",prop_run_cpu_s,prop_run_wall_s,prop_run_evals,prop_analysis_cpu_s,prop_analysis_wall_s,prop_analysis_evals\n";
    for (const auto& row : result.rows) {
      csv += std::to_string(row.replicate);
      for (const auto& meth : methods) {
        const auto it = row.methods.find(meth);
        csv += ",";
        append_csv_double(csv, it == row.methods.end() ? 0.0 : it->second.cpu_s);
        csv += ",";
        append_csv_double(csv, it == row.methods.end() ? 0.0 : it->second.wall_s);
        csv += "," + std::to_string(it == row.methods.end() ? 0 : it->second.evals);
      }
      csv += ",";
      append_csv_double(csv, row.prop_run_cpu_s);
      csv += ",";
      append_csv_double(csv, row.prop_run_wall_s);
      csv += "," + std::to_string(row.prop_run_evals) + ",";
      append_csv_double(csv, row.prop_analysis_cpu_s);
      csv += ",";
      append_csv_double(csv, row.prop_analysis_wall_s);
      csv += "," + std::to_string(row.prop_analysis_evals) + "\n";
    }
    std::ofstream f(out_dir + "/timings.csv", std::ios::binary);
    f << csv;
  }
}

}  // namespace hsmc
