#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsmc/config.hpp"
#include "hsmc/errors.hpp"
#include "hsmc/experiments/estimators.hpp"
#include "hsmc/experiments/study.hpp"
#include "hsmc/sampler.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> model;
  std::optional<int> n_particles, n_iterations, mcmc_sweeps, threads;
  std::optional<double> alpha1, ess_target_fraction, resample_threshold, theta_star;
  std::optional<std::string> schedule_mode, snapshot_policy, hyper_prior_path;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
};

hsmc::RunConfig build_config(const RunFlags& f) {
  hsmc::RunConfig cfg;
  if (f.config_path) {
    cfg = hsmc::RunConfig::from_json_file(*f.config_path);
  } else {
    cfg = hsmc::RunConfig::defaults(f.model.value_or("toy"));
  }
  // flags override the config file
  if (f.model) cfg.model = *f.model;
  if (f.n_particles) cfg.n_particles = *f.n_particles;
  if (f.n_iterations) cfg.n_iterations = *f.n_iterations;
  if (f.mcmc_sweeps) cfg.mcmc_sweeps = *f.mcmc_sweeps;
  if (f.threads) cfg.threads = *f.threads;
  if (f.alpha1) cfg.alpha1 = *f.alpha1;
  if (f.ess_target_fraction) cfg.ess_target_fraction = *f.ess_target_fraction;
  if (f.resample_threshold) cfg.resample_threshold_fraction = *f.resample_threshold;
  if (f.theta_star) cfg.theta_star = *f.theta_star;
  if (f.schedule_mode) cfg.schedule_mode = *f.schedule_mode;
  if (f.snapshot_policy) cfg.snapshot_policy = *f.snapshot_policy;
  if (f.seed) cfg.seed = *f.seed;
  if (f.hyper_prior_path) {
    cfg.hyper_prior = hsmc::HyperPrior::from_json_file(*f.hyper_prior_path);
    cfg.has_hyper_prior = true;
  }
  cfg.finalize();
  return cfg;
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path, "config JSON file");
  cmd->add_option("--model", f.model, "toy | clg");
  cmd->add_option("--n-particles", f.n_particles, "population size N");
  cmd->add_option("--n-iterations", f.n_iterations, "ladder length T");
  cmd->add_option("--schedule-mode", f.schedule_mode, "fixed-geometric | adaptive");
  cmd->add_option("--alpha1", f.alpha1, "first positive exponent (fixed-geometric)");
  cmd->add_option("--ess-target-fraction", f.ess_target_fraction, "adaptive schedule ESS target");
  cmd->add_option("--resample-threshold", f.resample_threshold, "resample when ESS < fraction * N");
  cmd->add_option("--theta-star", f.theta_star, "terminal hyper-parameter value");
  cmd->add_option("--hyper-prior", f.hyper_prior_path, "hyper-prior spec JSON file");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--mcmc-sweeps", f.mcmc_sweeps, "MH sweeps per iteration");
  cmd->add_option("--snapshot-policy", f.snapshot_policy, "none | final | all");
  cmd->add_option("--threads", f.threads, "particle-level parallelism");
  cmd->add_flag("--print-config", f.print_config, "print the effective config and exit");
}

int cmd_generate(const RunFlags& flags, const std::string& out_dir) {
  const hsmc::RunConfig cfg = build_config(flags);
  if (flags.print_config) {
    std::cout << cfg.to_json() << "\n";
    return kExitOk;
  }
  std::filesystem::create_directories(out_dir);
  const std::string dataset = out_dir + "/dataset.json";
  const std::string truth = out_dir + "/truth.json";
  if (cfg.model == "toy") {
    hsmc::write_toy_data(hsmc::generate_toy_data(cfg.seed, cfg.toy_gen), dataset, truth);
  } else {
    const auto grid = hsmc::VoxelGrid::desk_grid(cfg.clg_neighbor_radius);
    hsmc::write_clg_data(hsmc::generate_clg_data(cfg.seed, grid, cfg.clg_gen), grid, dataset, truth);
  }
  std::cout << "wrote " << dataset << " and " << truth << "\n";
  return kExitOk;
}

int cmd_run(const RunFlags& flags, const std::string& dataset_path, const std::string& out_path) {
  const hsmc::RunConfig cfg = build_config(flags);
  if (flags.print_config) {
    std::cout << cfg.to_json() << "\n";
    return kExitOk;
  }
  hsmc::RunTrace trace;
  if (cfg.model == "toy") {
    trace = hsmc::run_toy_trace(cfg, hsmc::read_toy_data(dataset_path));
  } else {
    const auto grid = hsmc::VoxelGrid::desk_grid(cfg.clg_neighbor_radius);
    trace = hsmc::run_clg_trace(cfg, hsmc::read_clg_data(dataset_path), grid);
  }
  hsmc::write_trace(trace, out_path);
  std::cout << "wrote " << out_path << " (" << trace.records.size() << " records)\n";
  return kExitOk;
}

int cmd_analyze(const std::string& trace_path, const std::string& prior_path, const std::string& mode,
                const std::string& out_dir) {
  if (prior_path.empty()) throw hsmc::ConfigError("analyze: --hyper-prior is required");
  const hsmc::RunTrace trace = hsmc::read_trace(trace_path);
  const hsmc::HyperPrior prior = hsmc::HyperPrior::from_json_file(prior_path);
  const hsmc::AnalyzeOutput out = hsmc::analyze_trace(trace, prior, mode);
  std::filesystem::create_directories(out_dir);

  {
    std::string csv = "theta,log_evidence\n";
    for (std::size_t i = 0; i < out.ledger.size(); ++i) {
      csv += fmt17(out.ledger.thetas[i]) + "," + fmt17(out.ledger.log_evidence[i]) + "\n";
    }
    std::ofstream f(out_dir + "/ledger.csv", std::ios::binary);
    f << csv;
  }
  {
    std::string csv = "theta,density\n";
    const double llo = std::log(out.posterior.support_lo());
    const double lhi = std::log(out.posterior.support_hi());
    for (int i = 0; i < 512; ++i) {
      const double theta = std::exp(llo + (lhi - llo) * i / 511.0);
      csv += fmt17(theta) + "," + fmt17(out.posterior.density(theta)) + "\n";
    }
    std::ofstream f(out_dir + "/posterior.csv", std::ios::binary);
    f << csv;
  }
  {
    nlohmann::ordered_json j;
    j["map"] = out.theta.map;
    j["pm"] = out.theta.pm;
    j["eb_theta"] = out.eb_theta;
    if (mode != "fb") {
      j["anchor_t"] = out.anchor_trace_t;
      j["anchor_theta"] = out.anchor_theta;
      j["ess_after_reweight"] = out.ess_after_reweight;
      j["reweight_degenerate"] = out.reweight_degenerate;
    }
    if (out.recycled) {
      nlohmann::ordered_json r;
      r["n_iterations"] = out.recycled->trace_t.size();
      r["total_samples"] = out.recycled->total_samples;
      r["theta_pm"] = out.recycled->theta_mean();
      if (trace.settings.model_id == "toy") {
        r["mu_pm"] = out.recycled->coord_mean(0);
        r["mu_map"] = out.recycled->coord_map_kde(0);
        r["mu_q05"] = out.recycled->coord_quantile(0, 0.05);
        r["mu_q95"] = out.recycled->coord_quantile(0, 0.95);
      } else if (trace.settings.model_id == "clg") {
        std::vector<hsmc::SourceSample> samples;
        for (std::size_t i = 0; i < out.recycled->trace_t.size(); ++i) {
          const auto& snap =
              *trace.records[static_cast<std::size_t>(out.recycled->trace_t[i] - 1)].snapshot;
          auto part = hsmc::source_samples_from_snapshot(snap, 2, out.recycled->iter_weight[i]);
          samples.insert(samples.end(), part.begin(), part.end());
        }
        const auto grid = hsmc::VoxelGrid::desk_grid();
        const auto est = hsmc::dipole_estimators(samples, grid);
        r["d_hat"] = est.d_hat;
        r["voxels"] = est.voxels;
        std::vector<std::vector<double>> pos;
        for (const auto& p : est.positions) pos.push_back({p.x(), p.y(), p.z()});
        r["positions_cm"] = pos;
      }
      j["recycled"] = r;
    }
    std::ofstream f(out_dir + "/summary.json", std::ios::binary);
    f << j.dump(2) << "\n";
  }
  std::cout << "wrote analysis to " << out_dir << "\n";
  return kExitOk;
}

int cmd_study(const std::string& spec_path, const std::string& model, const std::string& out_dir,
              int jobs, bool print_config) {
  hsmc::StudySpec spec =
      spec_path.empty() ? hsmc::StudySpec::defaults(model) : hsmc::StudySpec::from_json_file(spec_path);
  if (jobs > 0) spec.jobs = jobs;
  spec.finalize();
  if (print_config) {
    std::cout << spec.to_json() << "\n";
    return kExitOk;
  }
  const hsmc::StudyResult result = hsmc::run_study(spec, out_dir);
  int failed = 0;
  for (const auto& row : result.rows) failed += row.failed ? 1 : 0;
  std::cout << "study complete: " << result.rows.size() << " replicates, " << failed
            << " failed; outputs in " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempered SMC sampler with built-in hyper-parameter selection and averaging"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  std::string gen_out = "data";
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset + ground truth");
  add_run_flags(gen, gen_flags);
  gen->add_option("--out", gen_out, "output directory");

  RunFlags run_flags;
  std::string run_dataset, run_out = "trace.json";
  auto* run = app.add_subcommand("run", "run the sampler on a dataset, write the trace");
  add_run_flags(run, run_flags);
  run->add_option("--dataset", run_dataset, "dataset JSON path");
  run->add_option("--out", run_out, "output trace path");

  std::string an_trace, an_prior, an_mode = "both", an_out = "analysis";
  auto* an = app.add_subcommand("analyze", "EB/FB analysis of an existing trace");
  an->add_option("--trace", an_trace, "trace JSON path")->required();
  an->add_option("--hyper-prior", an_prior, "hyper-prior spec JSON file");
  an->add_option("--mode", an_mode, "eb | fb | both");
  an->add_option("--out", an_out, "output directory");

  std::string study_spec, study_model = "toy", study_out = "study";
  int study_jobs = 0;
  bool study_print = false;
  auto* study = app.add_subcommand("study", "replicate study over synthetic datasets");
  study->add_option("--spec", study_spec, "study spec JSON file");
  study->add_option("--model", study_model, "toy | clg (when no spec file)");
  study->add_option("--out", study_out, "output directory");
  study->add_option("--jobs", study_jobs, "replicate-level parallelism");
  study->add_flag("--print-config", study_print, "print the effective study spec and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_flags, gen_out);
    if (run->parsed()) {
      if (run_dataset.empty() && !run_flags.print_config) {
        throw hsmc::ConfigError("run: --dataset is required");
      }
      return cmd_run(run_flags, run_dataset, run_out);
    }
    if (an->parsed()) return cmd_analyze(an_trace, an_prior, an_mode, an_out);
    if (study->parsed()) return cmd_study(study_spec, study_model, study_out, study_jobs, study_print);
  } catch (const hsmc::DegeneratePopulationError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const hsmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
