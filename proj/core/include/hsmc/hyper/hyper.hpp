#ifndef HSMC_HYPER_HYPER_HPP
#define HSMC_HYPER_HYPER_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hsmc/hyper/interp.hpp"
#include "hsmc/trace.hpp"

namespace hsmc {

/// Per-iteration (theta(t), log p_hat^{theta(t)}(y)) pairs, theta strictly
/// decreasing in t; the raw material of both the EB and FB analyses.
struct EvidenceLedger {
  std::vector<double> thetas;
  std::vector<double> log_evidence;
  std::vector<int> trace_t;  // iteration index in the source trace

  std::size_t size() const { return thetas.size(); }
};

EvidenceLedger build_ledger(const RunTrace& trace);

/// Trapezoid quadrature weights over the knots: g_0 = |t1-t0|/2, interior
/// g_i = |t_{i+1}-t_{i-1}|/2, g_last = |t_n-t_{n-1}|/2; they sum to the
/// total span exactly.
std::vector<double> trapezoid_weights(std::span<const double> thetas);

struct HyperPrior {
  enum class Family { Gamma, Uniform };
  Family family = Family::Uniform;
  std::vector<double> params;  // Gamma: {shape, scale}
  double support_lo = 0.0, support_hi = 1.0;

  /// Unnormalized within the support; -inf outside.
  double log_density(double theta) const;

  static HyperPrior gamma(double shape, double scale, double lo, double hi);
  static HyperPrior uniform(double lo, double hi);
  static HyperPrior from_json_text(const std::string& text);
  static HyperPrior from_json_file(const std::string& path);
  std::string to_json() const;
};

/// Smooth approximation of p(theta | y) on [support_lo, support_hi]:
/// monotone piecewise-cubic interpolation of the ledger's log evidence over
/// log theta, multiplied by the hyper-prior and normalized by quadrature.
class HyperPosterior {
 public:
  HyperPosterior() = default;

  double log_unnormalized(double theta) const;
  double density(double theta) const;
  double log_evidence_interp(double theta) const;  // interpolant alone
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  const HyperPrior& prior() const { return prior_; }

  /// argmax of the posterior density over the support (golden-section over
  /// the bracketing grid segment; endpoints included).
  double mode() const;
  /// posterior mean by quadrature of theta * density.
  double mean() const;

  friend HyperPosterior hyper_posterior(const EvidenceLedger&, const HyperPrior&);

 private:
  PchipInterpolator interp_;  // log evidence over log theta
  HyperPrior prior_;
  double lo_ = 0.0, hi_ = 1.0;
  double log_norm_ = 0.0;
  std::vector<double> grid_;  // coarse log-spaced scan grid
};

HyperPosterior hyper_posterior(const EvidenceLedger& ledger, const HyperPrior& prior);

struct EbSelection {
  double theta_bar = 0.0;
  double log_posterior_at = 0.0;
};

/// Empirical-Bayes selection: the posterior mode. The optional refinement
/// re-estimates the evidence at probe points by importance sampling from the
/// anchor iteration's snapshot (via likelihood summaries, so it still costs
/// no data passes).
EbSelection eb_select(const HyperPosterior& posterior);
EbSelection eb_select_refined(const HyperPosterior& posterior, const EvidenceLedger& ledger,
                              const RunTrace& trace,
                              const std::function<double(std::span<const double>, double)>& lik_from_summary);

/// Largest index whose theta lies strictly above theta_bar (thetas
/// decreasing): the iteration with the closest wider-tailed distribution.
std::size_t anchor_iteration(std::span<const double> thetas, double theta_bar);

struct ReweightedSample {
  const Snapshot* snapshot = nullptr;
  std::vector<double> weights;  // normalized
  double ess = 0.0;
  bool degenerate = false;  // ess < 5 after correction
};

/// Importance-corrects the anchor snapshot from theta_anchor to theta_bar
/// using the stored likelihood summaries.
ReweightedSample reweight_to_theta(
    const Snapshot& snapshot, double theta_bar, double theta_anchor,
    const std::function<double(std::span<const double>, double)>& lik_from_summary);

/// Eq. 17: every particle at every in-support iteration, with combined
/// weight W_n^(t) * p_hat^{theta(t)}(y) * p(theta(t)) * g_t, renormalized.
struct RecycledPosterior {
  const RunTrace* trace = nullptr;
  std::vector<int> trace_t;            // contributing iterations
  std::vector<double> thetas;          // theta(t) at those iterations
  std::vector<double> iter_weight;     // omega_t, summing to 1
  std::size_t total_samples = 0;       // sum over iterations of N

  double theta_mean() const;
  /// Weighted mean / quantile / KDE mode of state coordinate `coord`.
  double coord_mean(std::size_t coord) const;
  double coord_quantile(std::size_t coord, double q) const;
  double coord_map_kde(std::size_t coord) const;
  /// Flattened (value, weight) pairs of one coordinate.
  std::vector<std::pair<double, double>> coord_samples(std::size_t coord) const;
};

RecycledPosterior fb_average(const RunTrace& trace, const HyperPrior& prior);

/// Re-runs both analyses under a new prior from stored quantities only.
struct SensitivityResult {
  HyperPosterior posterior;
  RecycledPosterior recycled;
};
SensitivityResult sensitivity_reweight(const RunTrace& trace, const HyperPrior& new_prior);

struct ThetaEstimates {
  double map = 0.0;
  double pm = 0.0;
};
ThetaEstimates theta_estimators(const HyperPosterior& posterior);

/// Weighted Gaussian KDE mode with Silverman bandwidth, on a 512-point grid.
double weighted_kde_mode(std::span<const double> values, std::span<const double> weights);
double weighted_mean(std::span<const double> values, std::span<const double> weights);
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);

}  // namespace hsmc

#endif
