#include "hsmc/models/toy.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "hsmc/errors.hpp"

namespace hsmc {

namespace {
double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}
}  // namespace

double gamma_log_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

ToyData generate_toy_data(std::uint64_t seed, const ToyGenParams& params) {
  ToyData d;
  d.waveform_sigma = params.waveform_sigma;
  auto rng = RngStream(stream_key(seed, 0x7011, 0));
  d.theta_true = rng.uniform(params.theta_lo, params.theta_hi);
  d.times.resize(static_cast<std::size_t>(params.n_obs));
  d.data.resize(static_cast<std::size_t>(params.n_obs));
  for (int i = 0; i < params.n_obs; ++i) {
    const double t = params.n_obs == 1
                         ? params.t_lo
                         : params.t_lo + (params.t_hi - params.t_lo) * i / (params.n_obs - 1.0);
    d.times[static_cast<std::size_t>(i)] = t;
    d.data[static_cast<std::size_t>(i)] =
        normal_pdf(t, params.mu_true, params.waveform_sigma) + d.theta_true * rng.normal();
  }
  return d;
}

void write_toy_data(const ToyData& d, const std::string& dataset_path, const std::string& truth_path) {
  nlohmann::ordered_json j;
  j["model"] = "toy";
  j["waveform_sigma"] = d.waveform_sigma;
  j["times"] = d.times;
  j["observations"] = d.data;
  std::ofstream f(dataset_path, std::ios::binary);
  if (!f) throw ConfigError("cannot write dataset: " + dataset_path);
  f << j.dump(2) << '\n';

  nlohmann::ordered_json t;
  t["model"] = "toy";
  t["mu_true"] = 0.0;
  t["theta_true"] = d.theta_true;
  std::ofstream g(truth_path, std::ios::binary);
  if (!g) throw ConfigError("cannot write truth: " + truth_path);
  g << t.dump(2) << '\n';
}

ToyData read_toy_data(const std::string& dataset_path) {
  std::ifstream f(dataset_path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset: " + dataset_path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (j.at("model").get<std::string>() != "toy") throw ConfigError("dataset is not a toy dataset");
  ToyData d;
  d.waveform_sigma = j.at("waveform_sigma").get<double>();
  d.times = j.at("times").get<std::vector<double>>();
  d.data = j.at("observations").get<std::vector<double>>();
  if (d.times.size() != d.data.size()) throw ConfigError("dataset: times/observations length mismatch");
  return d;
}

ToyModel::ToyModel(ToyData data, double theta_star, double proposal_sd)
    : data_(std::move(data)), theta_star_(theta_star), proposal_sd_(proposal_sd) {
  if (!(theta_star_ > 0.0)) throw ConfigError("ToyModel: theta_star must be positive");
}

double ToyModel::eval_ssr(double mu) const {
  evals_.bump();
  double ssr = 0.0;
  for (std::size_t i = 0; i < data_.times.size(); ++i) {
    const double r = data_.data[i] - normal_pdf(data_.times[i], mu, data_.waveform_sigma);
    ssr += r * r;
  }
  return ssr;
}

double ToyModel::log_lik_from_summary(double ssr, double theta) const {
  const double n = static_cast<double>(data_.times.size());
  return -0.5 * n * std::log(2.0 * M_PI * theta * theta) - ssr / (2.0 * theta * theta);
}

ToyModel::State ToyModel::sample_prior(RngStream& rng) const {
  State s;
  s.mu = rng.uniform(kPriorLo, kPriorHi);
  s.ssr = eval_ssr(s.mu);
  return s;
}

double ToyModel::log_prior(const State& s) const {
  if (s.mu < kPriorLo || s.mu > kPriorHi) return -std::numeric_limits<double>::infinity();
  return -std::log(kPriorHi - kPriorLo);
}

double ToyModel::tempered_log_lik(const State& s, double alpha) const {
  if (alpha <= 0.0) return 0.0;
  return log_lik_from_summary(s.ssr, theta_star_ / std::sqrt(alpha));
}

double ToyModel::theta_of(double alpha) const {
  if (alpha <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return theta_star_ / std::sqrt(alpha);
}

ToyModel::State ToyModel::mcmc_sweep(const State& s, double alpha, RngStream& rng) const {
  State prop;
  prop.mu = s.mu + proposal_sd_ * rng.normal();
  if (prop.mu < kPriorLo || prop.mu > kPriorHi) {
    rng.uniform();  // keep the stream aligned with the accept branch
    return s;
  }
  prop.ssr = eval_ssr(prop.mu);
  const double log_ratio = tempered_log_lik(prop, alpha) - tempered_log_lik(s, alpha);
  if (std::isnan(log_ratio)) throw ModelEvaluationError("toy model: NaN log-density");
  if (std::log1p(-rng.uniform()) <= log_ratio) return prop;
  return s;
}

ToyJointModel::ToyJointModel(ToyData data, double gamma_shape, double gamma_scale, double proposal_sd,
                             double theta_proposal_log_sd)
    : data_(std::move(data)),
      gamma_shape_(gamma_shape),
      gamma_scale_(gamma_scale),
      proposal_sd_(proposal_sd),
      theta_proposal_log_sd_(theta_proposal_log_sd) {}

double ToyJointModel::eval_log_lik(double mu, double theta, double* ssr_out) const {
  evals_.bump();
  double ssr = 0.0;
  for (std::size_t i = 0; i < data_.times.size(); ++i) {
    const double r = data_.data[i] - normal_pdf(data_.times[i], mu, data_.waveform_sigma);
    ssr += r * r;
  }
  if (ssr_out) *ssr_out = ssr;
  const double n = static_cast<double>(data_.times.size());
  return -0.5 * n * std::log(2.0 * M_PI * theta * theta) - ssr / (2.0 * theta * theta);
}

ToyJointModel::State ToyJointModel::sample_prior(RngStream& rng) const {
  State s;
  s.mu = rng.uniform(ToyModel::kPriorLo, ToyModel::kPriorHi);
  s.theta = rng.gamma_shape2(gamma_scale_);
  eval_log_lik(s.mu, s.theta, &s.ssr);
  return s;
}

double ToyJointModel::log_prior(const State& s) const {
  if (s.mu < ToyModel::kPriorLo || s.mu > ToyModel::kPriorHi) {
    return -std::numeric_limits<double>::infinity();
  }
  return -std::log(ToyModel::kPriorHi - ToyModel::kPriorLo) +
         gamma_log_pdf(s.theta, gamma_shape_, gamma_scale_);
}

double ToyJointModel::tempered_log_lik(const State& s, double alpha) const {
  if (alpha <= 0.0) return 0.0;
  const double n = static_cast<double>(data_.times.size());
  const double ll = -0.5 * n * std::log(2.0 * M_PI * s.theta * s.theta) - s.ssr / (2.0 * s.theta * s.theta);
  return alpha * ll;
}

ToyJointModel::State ToyJointModel::mcmc_sweep(const State& s, double alpha, RngStream& rng) const {
  State cur = s;
  // mu random walk
  {
    const double mu_prop = cur.mu + proposal_sd_ * rng.normal();
    if (mu_prop >= ToyModel::kPriorLo && mu_prop <= ToyModel::kPriorHi) {
      double ssr_prop = 0.0;
      const double ll_prop = eval_log_lik(mu_prop, cur.theta, &ssr_prop);
      const double ll_cur = -0.5 * static_cast<double>(data_.times.size()) *
                                std::log(2.0 * M_PI * cur.theta * cur.theta) -
                            cur.ssr / (2.0 * cur.theta * cur.theta);
      if (std::log1p(-rng.uniform()) <= alpha * (ll_prop - ll_cur)) {
        cur.mu = mu_prop;
        cur.ssr = ssr_prop;
      }
    } else {
      rng.uniform();
    }
  }
  // log-theta random walk; generic implementation re-evaluates the likelihood
  {
    const double theta_prop = cur.theta * std::exp(theta_proposal_log_sd_ * rng.normal());
    double ssr_prop = 0.0;
    const double ll_prop = eval_log_lik(cur.mu, theta_prop, &ssr_prop);
    const double ll_cur = -0.5 * static_cast<double>(data_.times.size()) *
                              std::log(2.0 * M_PI * cur.theta * cur.theta) -
                          cur.ssr / (2.0 * cur.theta * cur.theta);
    const double log_accept = alpha * (ll_prop - ll_cur) +
                              gamma_log_pdf(theta_prop, gamma_shape_, gamma_scale_) -
                              gamma_log_pdf(cur.theta, gamma_shape_, gamma_scale_) +
                              std::log(theta_prop) - std::log(cur.theta);
    if (std::log1p(-rng.uniform()) <= log_accept) {
      cur.theta = theta_prop;
      cur.ssr = ssr_prop;
    }
  }
  return cur;
}

}  // namespace hsmc
