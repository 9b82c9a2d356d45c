#ifndef HSMC_MODELS_TOY_HPP
#define HSMC_MODELS_TOY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hsmc/model.hpp"
#include "hsmc/random.hpp"

namespace hsmc {

/// Dataset for the Gaussian-waveform mean problem: y(t_i) is the N(t_i; mu, sigma^2)
/// pdf value plus iid N(0, theta_true^2) noise at I points on [-5, 5].
struct ToyData {
  std::vector<double> times;
  std::vector<double> data;
  double waveform_sigma = 1.0;
  double theta_true = 0.0;
};

struct ToyGenParams {
  int n_obs = 100;
  double t_lo = -5.0, t_hi = 5.0;
  double mu_true = 0.0;
  double waveform_sigma = 1.0;
  double theta_lo = 0.1, theta_hi = 0.2;
};

ToyData generate_toy_data(std::uint64_t seed, const ToyGenParams& params = {});

void write_toy_data(const ToyData& d, const std::string& dataset_path, const std::string& truth_path);
ToyData read_toy_data(const std::string& dataset_path);

/// Vanilla model for the proposed sampler: state is mu, the ladder is the
/// theta grid theta(alpha) = theta_star / sqrt(alpha).
class ToyModel {
 public:
  struct State {
    double mu = 0.0;
    double ssr = 0.0;  // sum of squared residuals at mu; theta-free statistic
  };

  ToyModel(ToyData data, double theta_star, double proposal_sd = 0.5);

  State sample_prior(RngStream& rng) const;
  double log_prior(const State& s) const;
  double tempered_log_lik(const State& s, double alpha) const;
  double theta_of(double alpha) const;
  State mcmc_sweep(const State& s, double alpha, RngStream& rng) const;
  std::vector<double> coords(const State& s) const { return {s.mu}; }
  std::vector<double> lik_summary(const State& s) const { return {s.ssr}; }
  std::uint64_t eval_count() const { return evals_.count(); }
  void reset_eval_count() const { evals_.reset(); }

  /// Full data pass: residual sum of squares of the waveform at mu. Counted.
  double eval_ssr(double mu) const;
  /// log p^theta(y | mu) from the cached statistic; no data access.
  double log_lik_from_summary(double ssr, double theta) const;
  double log_lik(double mu, double theta) const { return log_lik_from_summary(eval_ssr(mu), theta); }

  double theta_star() const { return theta_star_; }
  const ToyData& data() const { return data_; }
  static constexpr double kPriorLo = -5.0, kPriorHi = 5.0;

 private:
  ToyData data_;
  double theta_star_;
  double proposal_sd_;
  EvalCounter evals_;
};

/// Joint (mu, theta) model for the standard fully Bayesian baseline: the
/// hyper-parameter is sampled like any other coordinate and the likelihood is
/// tempered with the plain geometric bridge. Hyper-parameter proposals
/// re-evaluate the likelihood from the data, as a generic implementation must.
class ToyJointModel {
 public:
  struct State {
    double mu = 0.0;
    double theta = 0.1;
    double ssr = 0.0;
  };

  /// gamma_shape/gamma_scale: the Gamma(2, 4*theta_star) hyper-prior.
  ToyJointModel(ToyData data, double gamma_shape, double gamma_scale, double proposal_sd = 0.5,
                double theta_proposal_log_sd = 0.3);

  State sample_prior(RngStream& rng) const;
  double log_prior(const State& s) const;
  double tempered_log_lik(const State& s, double alpha) const;
  double theta_of(double /*alpha*/) const { return std::numeric_limits<double>::quiet_NaN(); }
  State mcmc_sweep(const State& s, double alpha, RngStream& rng) const;
  std::vector<double> coords(const State& s) const { return {s.mu, s.theta}; }
  std::vector<double> lik_summary(const State&) const { return {}; }
  std::uint64_t eval_count() const { return evals_.count(); }
  void reset_eval_count() const { evals_.reset(); }

  /// Generic evaluation: full data pass at (mu, theta). Counted.
  double eval_log_lik(double mu, double theta, double* ssr_out = nullptr) const;

 private:
  ToyData data_;
  double gamma_shape_, gamma_scale_;
  double proposal_sd_, theta_proposal_log_sd_;
  EvalCounter evals_;
};

double gamma_log_pdf(double x, double shape, double scale);

static_assert(SmcModel<ToyModel>);
static_assert(SmcModel<ToyJointModel>);

}  // namespace hsmc

#endif
