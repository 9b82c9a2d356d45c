#ifndef HSMC_EXPERIMENTS_STUDY_HPP
#define HSMC_EXPERIMENTS_STUDY_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsmc/config.hpp"
#include "hsmc/hyper/hyper.hpp"
#include "hsmc/models/clg.hpp"
#include "hsmc/models/toy.hpp"
#include "hsmc/trace.hpp"

namespace hsmc {

/// Builds the per-model likelihood-summary evaluator from trace metadata, so
/// post-hoc analyses never need the dataset (or any data pass).
std::function<double(std::span<const double>, double)> lik_from_summary_fn(const TraceSettings& settings);

/// Proposed-method runs: wrap the model, run the sampler, and stamp the trace
/// with the model metadata the analyses need.
RunTrace run_toy_trace(const RunConfig& config, const ToyData& data);
RunTrace run_clg_trace(const RunConfig& config, const ClgData& data, const VoxelGrid& grid);

struct AnalyzeOutput {
  EvidenceLedger ledger;
  HyperPosterior posterior;
  ThetaEstimates theta;
  double eb_theta = 0.0;
  int anchor_trace_t = -1;
  double anchor_theta = 0.0;
  double ess_after_reweight = 0.0;
  bool reweight_degenerate = false;
  std::optional<ReweightedSample> reweighted;
  std::optional<RecycledPosterior> recycled;
};

/// EB/FB analysis of one trace; mode is "eb", "fb" or "both".
AnalyzeOutput analyze_trace(const RunTrace& trace, const HyperPrior& prior, const std::string& mode);

struct MethodMetrics {
  double theta_map_err = std::numeric_limits<double>::quiet_NaN();
  double theta_pm_err = std::numeric_limits<double>::quiet_NaN();
  double mu_map_err = std::numeric_limits<double>::quiet_NaN();
  double mu_pm_err = std::numeric_limits<double>::quiet_NaN();
  double ospa_cm = std::numeric_limits<double>::quiet_NaN();
  int d_hat = -1;
  double cpu_s = 0.0, wall_s = 0.0;
  std::uint64_t evals = 0;
};

struct ReplicateRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  double theta_true = 0.0;
  bool failed = false;
  std::string error;
  std::map<std::string, MethodMetrics> methods;
  // proposed-run decomposition backing the cost claims
  double prop_run_cpu_s = 0.0, prop_run_wall_s = 0.0;
  double prop_analysis_cpu_s = 0.0, prop_analysis_wall_s = 0.0;
  std::uint64_t prop_run_evals = 0, prop_analysis_evals = 0;
};

struct StudySpec {
  std::string model = "toy";
  int n_replicates = 0;  // 0 = model default (toy 100, clg 50)
  std::uint64_t base_seed = 1;
  std::vector<std::string> methods;  // default: toy all four, clg all but BaselineEB
  RunConfig run;
  int jobs = 1;
  bool store_traces = false;

  void finalize();
  static StudySpec defaults(const std::string& model);
  static StudySpec from_json_text(const std::string& text);
  static StudySpec from_json_file(const std::string& path);
  std::string to_json(int indent = 2) const;
};

struct StudyResult {
  StudySpec spec;
  std::vector<ReplicateRow> rows;
};

StudyResult run_study(const StudySpec& spec, const std::string& out_dir = "");

/// replicates.csv + summary.csv (deterministic) and timings.csv (CPU/wall).
void write_study_outputs(const StudyResult& result, const std::string& out_dir);

double quantile(std::vector<double> values, double q);

/// Thread CPU clock, for per-method cost accounting inside parallel studies.
double thread_cpu_seconds();

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate);

}  // namespace hsmc

#endif
