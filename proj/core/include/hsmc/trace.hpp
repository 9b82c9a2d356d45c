#ifndef HSMC_TRACE_HPP
#define HSMC_TRACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hsmc {

/// Particle states and normalized weights frozen at the end of an iteration,
/// plus per-particle likelihood summaries (see model.hpp) that let later
/// analyses re-evaluate the likelihood at a new theta with zero data passes.
struct Snapshot {
  std::vector<std::vector<double>> states;
  std::vector<double> weights;
  std::vector<std::vector<double>> loglik_stats;
};

struct IterationRecord {
  int t = 0;
  double alpha = 0.0;
  double theta = 0.0;  // NaN when the ladder has no hyper-parameter reading
  double ess = 0.0;
  bool resampled = false;
  double log_evidence = 0.0;  // log p_hat^{theta(t)}(y), Eq. 9 epoch form
  std::optional<Snapshot> snapshot;
};

enum class SnapshotPolicy { None, Final, All };

struct TraceSettings {
  std::string model_id;
  int n_particles = 0;
  int n_iterations = 0;
  std::uint64_t seed = 0;
  double theta_star = 0.0;
  std::string schedule_mode;  // "fixed-geometric" | "adaptive"
  double alpha1 = 0.0;
  double ess_target_fraction = 0.0;
  double resample_threshold_fraction = 0.5;
  int mcmc_sweeps = 1;
  std::string snapshot_policy;  // "none" | "final" | "all"
  int threads = 1;
  /// Model constants needed to evaluate likelihoods from stored summaries
  /// (toy: [n_obs]; clg: [n_sensors, window_len, logdet_sigma, total_power]).
  std::vector<double> lik_meta;
};

/// Full record of one sampler run. Records run t = 1..T; iteration 0 (the
/// prior sample, alpha = 0, log-evidence 0) is implicit.
struct RunTrace {
  static constexpr const char* kSchemaVersion = "1";
  TraceSettings settings;
  std::vector<IterationRecord> records;

  /// log p_hat^{theta(t)}(y); t = 0 is the (normalized) prior, log 1 = 0.
  double evidence_estimate(int t) const;
};

void write_trace(const RunTrace& trace, const std::string& path);
std::string trace_to_json(const RunTrace& trace);
RunTrace read_trace(const std::string& path);
RunTrace trace_from_json(const std::string& json_text);

}  // namespace hsmc

#endif
