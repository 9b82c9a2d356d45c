#include "hsmc/models/clg.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "hsmc/errors.hpp"
#include "hsmc/models/nef.hpp"
#include "hsmc/models/toy.hpp"  // gamma_log_pdf

namespace hsmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_poisson_pmf(int k, double mean) {
  return -mean + k * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0);
}
}  // namespace

Eigen::MatrixXd synthetic_lead_field(const std::vector<Eigen::Vector3d>& sensors,
                                     const Eigen::Vector3d& voxel) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(sensors.size()), 3);
  for (std::size_t j = 0; j < sensors.size(); ++j) {
    const Eigen::Vector3d diff = sensors[j] - voxel;
    const double dist = diff.norm();
    if (dist < 1e-9) throw std::domain_error("synthetic_lead_field: sensor coincides with voxel");
    g.row(static_cast<Eigen::Index>(j)) = (diff / (dist * dist * dist)).transpose();
  }
  return g;
}

VoxelGrid::VoxelGrid(std::vector<Eigen::Vector3d> voxels, std::vector<Eigen::Vector3d> sensors,
                     double neighbor_radius)
    : voxels_(std::move(voxels)), sensors_(std::move(sensors)), neighbor_radius_(neighbor_radius) {
  for (const auto& v : voxels_) {
    for (const auto& s : sensors_) {
      if ((s - v).norm() < 1.0) throw std::domain_error("VoxelGrid: sensor closer than 1 cm to a voxel");
    }
  }
  lead_.reserve(voxels_.size());
  for (const auto& v : voxels_) lead_.push_back(synthetic_lead_field(sensors_, v));
  neighbors_.resize(voxels_.size());
  for (std::size_t a = 0; a < voxels_.size(); ++a) {
    for (std::size_t b = 0; b < voxels_.size(); ++b) {
      if (a == b) continue;
      if ((voxels_[a] - voxels_[b]).norm() <= neighbor_radius_ + 1e-12) {
        neighbors_[a].push_back(static_cast<int>(b));
      }
    }
  }
}

VoxelGrid VoxelGrid::desk_grid(double neighbor_radius) {
  std::vector<Eigen::Vector3d> voxels;
  voxels.reserve(1000);
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      for (int z = 0; z < 10; ++z) {
        voxels.emplace_back(x - 4.5, y - 4.5, z - 4.5);
      }
    }
  }
  const int n_sensors = 59;
  const double radius = 12.0;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> sensors;
  sensors.reserve(static_cast<std::size_t>(n_sensors));
  for (int j = 0; j < n_sensors; ++j) {
    const double zf = 0.10 + (0.95 - 0.10) * (j + 0.5) / n_sensors;
    const double rho = std::sqrt(1.0 - zf * zf);
    const double phi = j * golden;
    sensors.emplace_back(radius * rho * std::cos(phi), radius * rho * std::sin(phi), radius * zf);
  }
  return VoxelGrid(std::move(voxels), std::move(sensors), neighbor_radius);
}

ClgData generate_clg_data(std::uint64_t seed, const VoxelGrid& grid, const ClgGenParams& params) {
  auto rng = RngStream(stream_key(seed, 0xc16, 0));
  ClgData out;
  out.truth.theta_true = rng.uniform(params.theta_lo, params.theta_hi);

  const int n = grid.n_voxels();
  bool ok = false;
  for (int attempt = 0; attempt < params.max_rejects && !ok; ++attempt) {
    out.truth.locations.clear();
    for (int i = 0; i < params.n_dipoles; ++i) {
      out.truth.locations.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    }
    ok = true;
    for (std::size_t a = 0; a + 1 < out.truth.locations.size() && ok; ++a) {
      for (std::size_t b = a + 1; b < out.truth.locations.size() && ok; ++b) {
        const double sep = (grid.voxel_position(out.truth.locations[a]) -
                            grid.voxel_position(out.truth.locations[b]))
                               .norm();
        if (sep <= params.min_separation_cm) ok = false;
      }
    }
  }
  if (!ok) throw std::runtime_error("generate_clg_data: separation rejection loop failed; grid too small");

  out.truth.axes.clear();
  for (int loc : out.truth.locations) {
    const Eigen::MatrixXd& g = grid.lead_field(loc);
    int best = 0;
    double best_norm = g.col(0).norm();
    for (int k = 1; k < 3; ++k) {
      if (g.col(k).norm() > best_norm) {
        best = k;
        best_norm = g.col(k).norm();
      }
    }
    out.truth.axes.push_back(best);
  }

  const int k = grid.n_sensors();
  out.observations = Eigen::MatrixXd::Zero(k, params.n_times);
  for (std::size_t i = 0; i < out.truth.locations.size(); ++i) {
    const Eigen::VectorXd field = grid.lead_field(out.truth.locations[i]).col(out.truth.axes[i]);
    for (int t = 1; t <= params.n_times; ++t) {
      const double z = (t - params.bump_peak) / params.bump_sd;
      const double q = params.amplitude * std::exp(-0.5 * z * z);
      out.observations.col(t - 1) += field * q;
    }
  }
  for (int t = 0; t < params.n_times; ++t) {
    for (int j = 0; j < k; ++j) {
      out.observations(j, t) += out.truth.theta_true * rng.normal();
    }
  }
  return out;
}

void write_clg_data(const ClgData& d, const VoxelGrid& grid, const std::string& dataset_path,
                    const std::string& truth_path) {
  nlohmann::ordered_json j;
  j["model"] = "clg";
  j["n_sensors"] = grid.n_sensors();
  j["n_times"] = static_cast<int>(d.observations.cols());
  std::vector<std::vector<double>> obs(static_cast<std::size_t>(d.observations.rows()));
  for (Eigen::Index r = 0; r < d.observations.rows(); ++r) {
    obs[static_cast<std::size_t>(r)].assign(d.observations.row(r).begin(), d.observations.row(r).end());
  }
  j["observations"] = obs;
  std::ofstream f(dataset_path, std::ios::binary);
  if (!f) throw ConfigError("cannot write dataset: " + dataset_path);
  f << j.dump() << '\n';

  nlohmann::ordered_json t;
  t["model"] = "clg";
  t["locations"] = d.truth.locations;
  std::vector<std::vector<double>> pos;
  for (int loc : d.truth.locations) {
    const auto& p = grid.voxel_position(loc);
    pos.push_back({p.x(), p.y(), p.z()});
  }
  t["positions_cm"] = pos;
  t["axes"] = d.truth.axes;
  t["theta_true"] = d.truth.theta_true;
  std::ofstream g(truth_path, std::ios::binary);
  if (!g) throw ConfigError("cannot write truth: " + truth_path);
  g << t.dump() << '\n';
}

ClgData read_clg_data(const std::string& dataset_path) {
  std::ifstream f(dataset_path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset: " + dataset_path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (j.at("model").get<std::string>() != "clg") throw ConfigError("dataset is not a clg dataset");
  const auto obs = j.at("observations").get<std::vector<std::vector<double>>>();
  ClgData d;
  d.observations.resize(static_cast<Eigen::Index>(obs.size()),
                        static_cast<Eigen::Index>(obs.empty() ? 0 : obs[0].size()));
  for (std::size_t r = 0; r < obs.size(); ++r) {
    for (std::size_t c = 0; c < obs[r].size(); ++c) {
      d.observations(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = obs[r][c];
    }
  }
  return d;
}

ClgModel::ClgModel(const VoxelGrid* grid, const Eigen::MatrixXd& observations, int window_lo,
                   int window_hi, ClgParams params, const Eigen::MatrixXd* noise_cov)
    : grid_(grid), window_lo_(window_lo), window_hi_(window_hi), params_(params) {
  if (observations.rows() != grid_->n_sensors()) {
    throw ConfigError("ClgModel: observation rows must match the sensor count");
  }
  if (window_lo < 1 || window_hi > observations.cols() || window_lo > window_hi) {
    throw ConfigError("ClgModel: bad analysis window");
  }
  y_window_ = observations.middleCols(window_lo - 1, window_hi - window_lo + 1);

  const int k = grid_->n_sensors();
  if (noise_cov == nullptr) {
    identity_sigma_ = true;
    sigma_ = Eigen::MatrixXd::Identity(k, k);
    whitener_ = sigma_;
    logdet_sigma_ = 0.0;
    yw_white_ = y_window_;
    lead_white_.reserve(static_cast<std::size_t>(grid_->n_voxels()));
    for (int r = 0; r < grid_->n_voxels(); ++r) lead_white_.push_back(grid_->lead_field(r));
  } else {
    identity_sigma_ = false;
    sigma_ = *noise_cov;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
      throw std::domain_error("ClgModel: noise covariance is not positive definite");
    }
    logdet_sigma_ = eig.eigenvalues().array().log().sum();
    whitener_ = eig.operatorInverseSqrt();
    yw_white_ = whitener_ * y_window_;
    lead_white_.reserve(static_cast<std::size_t>(grid_->n_voxels()));
    for (int r = 0; r < grid_->n_voxels(); ++r) lead_white_.push_back(whitener_ * grid_->lead_field(r));
  }
  total_power_ = yw_white_.squaredNorm();
}

double ClgModel::prior_logdensity(const SourceConfig& cfg) const {
  if (cfg.log_lambda < params_.log_lambda_lo || cfg.log_lambda > params_.log_lambda_hi) return kNegInf;
  for (int loc : cfg.locations) {
    if (loc < 0 || loc >= grid_->n_voxels()) return kNegInf;
  }
  return log_poisson_pmf(cfg.d(), params_.poisson_mean) -
         std::log(params_.log_lambda_hi - params_.log_lambda_lo) -
         cfg.d() * std::log(static_cast<double>(grid_->n_voxels()));
}

Eigen::MatrixXd ClgModel::stacked_lead(const SourceConfig& cfg) const {
  Eigen::MatrixXd g(grid_->n_sensors(), 3 * cfg.d());
  for (int i = 0; i < cfg.d(); ++i) {
    g.middleCols(3 * i, 3) = grid_->lead_field(cfg.locations[static_cast<std::size_t>(i)]);
  }
  return g;
}

std::vector<double> ClgModel::eval_summary(const SourceConfig& cfg) const {
  evals_.bump();
  const int r3 = 3 * cfg.d();
  if (r3 == 0) return {};
  const double sqrt_lambda = std::exp(0.5 * cfg.log_lambda);
  Eigen::MatrixXd g(grid_->n_sensors(), r3);
  for (int i = 0; i < cfg.d(); ++i) {
    g.middleCols(3 * i, 3) =
        sqrt_lambda * lead_white_[static_cast<std::size_t>(cfg.locations[static_cast<std::size_t>(i)])];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU);
  const int r = static_cast<int>(svd.singularValues().size());
  const Eigen::MatrixXd proj = svd.matrixU().transpose() * yw_white_;  // r x W
  std::vector<double> stat(static_cast<std::size_t>(2 * r));
  for (int j = 0; j < r; ++j) {
    const double sv = svd.singularValues()(j);
    stat[static_cast<std::size_t>(j)] = sv * sv;
    stat[static_cast<std::size_t>(r + j)] = proj.row(j).squaredNorm();
  }
  return stat;
}

double ClgModel::log_lik_from_summary(const std::vector<double>& stat, double theta) const {
  const int k = grid_->n_sensors();
  const int w = window_length();
  const int r = static_cast<int>(stat.size() / 2);
  const double th2 = theta * theta;
  double logdet = (k - r) * std::log(th2);
  double quad = total_power_ / th2;
  for (int j = 0; j < r; ++j) {
    const double m = stat[static_cast<std::size_t>(j)];
    const double s = stat[static_cast<std::size_t>(r + j)];
    logdet += std::log(m + th2);
    quad += s / (m + th2) - s / th2;
  }
  return -0.5 * w * (k * std::log(2.0 * M_PI) + logdet_sigma_ + logdet) - 0.5 * quad;
}

double ClgModel::marginal_log_lik(const SourceConfig& cfg, double theta) const {
  if (!(theta > 0.0)) throw std::domain_error("marginal_log_lik: theta must be positive");
  return log_lik_from_summary(eval_summary(cfg), theta);
}

double ClgModel::tempered_log_lik(const State& s, double alpha) const {
  if (alpha <= 0.0) return 0.0;
  return log_lik_from_summary(s.stat, params_.theta_star / std::sqrt(alpha));
}

double ClgModel::theta_of(double alpha) const {
  if (alpha <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return params_.theta_star / std::sqrt(alpha);
}

ClgModel::State ClgModel::sample_prior(RngStream& rng) const {
  State s;
  const int d = rng.poisson(params_.poisson_mean);
  for (int i = 0; i < d; ++i) {
    s.cfg.locations.push_back(
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(grid_->n_voxels()))));
  }
  s.cfg.log_lambda = rng.uniform(params_.log_lambda_lo, params_.log_lambda_hi);
  s.stat = eval_summary(s.cfg);
  return s;
}

std::vector<double> ClgModel::coords(const State& s) const {
  std::vector<double> c;
  c.reserve(2 + s.cfg.locations.size());
  c.push_back(static_cast<double>(s.cfg.d()));
  c.push_back(s.cfg.log_lambda);
  for (int loc : s.cfg.locations) c.push_back(static_cast<double>(loc));
  return c;
}

namespace {

/// One reversible-jump mixture move shared by the RB model and the joint
/// baseline. `log_target(cfg, stat)` is the full (tempered) log posterior up
/// to a constant; proposal-asymmetry terms are added here.
template <class TargetFn>
void mixture_move(const ClgModel& model, SourceConfig& cfg, std::vector<double>& stat, RngStream& rng,
                  const TargetFn& log_target) {
  const auto& params = model.params();
  const auto& grid = model.grid();
  const double u = rng.uniform();
  const double cur = log_target(cfg, stat);

  if (u < params.p_birth) {
    SourceConfig prop = cfg;
    prop.locations.push_back(
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(grid.n_voxels()))));
    const auto prop_stat = model.eval_summary(prop);
    const double log_accept = log_target(prop, prop_stat) - cur +
                              std::log(static_cast<double>(grid.n_voxels())) -
                              std::log(static_cast<double>(prop.d()));
    if (std::log1p(-rng.uniform()) <= log_accept) {
      cfg = std::move(prop);
      stat = prop_stat;
    }
  } else if (u < params.p_birth + params.p_death) {
    if (cfg.d() == 0) return;  // death at d = 0 is a no-op
    SourceConfig prop = cfg;
    const auto i = rng.uniform_int(static_cast<std::uint64_t>(cfg.d()));
    prop.locations.erase(prop.locations.begin() + static_cast<std::ptrdiff_t>(i));
    const auto prop_stat = model.eval_summary(prop);
    const double log_accept = log_target(prop, prop_stat) - cur +
                              std::log(static_cast<double>(cfg.d())) -
                              std::log(static_cast<double>(grid.n_voxels()));
    if (std::log1p(-rng.uniform()) <= log_accept) {
      cfg = std::move(prop);
      stat = prop_stat;
    }
  } else if (u < params.p_birth + params.p_death + params.p_relocate) {
    if (cfg.d() == 0) return;
    const auto i = rng.uniform_int(static_cast<std::uint64_t>(cfg.d()));
    const int cur_loc = cfg.locations[static_cast<std::size_t>(i)];
    const auto& nbrs = grid.neighbors(cur_loc);
    if (nbrs.empty()) return;
    const int new_loc = nbrs[static_cast<std::size_t>(rng.uniform_int(nbrs.size()))];
    SourceConfig prop = cfg;
    prop.locations[static_cast<std::size_t>(i)] = new_loc;
    const auto prop_stat = model.eval_summary(prop);
    const double log_accept = log_target(prop, prop_stat) - cur +
                              std::log(static_cast<double>(nbrs.size())) -
                              std::log(static_cast<double>(grid.neighbors(new_loc).size()));
    if (std::log1p(-rng.uniform()) <= log_accept) {
      cfg = std::move(prop);
      stat = prop_stat;
    }
  } else {
    SourceConfig prop = cfg;
    prop.log_lambda = cfg.log_lambda + params.lambda_walk_sd * rng.normal();
    if (prop.log_lambda < params.log_lambda_lo || prop.log_lambda > params.log_lambda_hi) return;
    const auto prop_stat = model.eval_summary(prop);
    const double log_accept = log_target(prop, prop_stat) - cur;
    if (std::log1p(-rng.uniform()) <= log_accept) {
      cfg = std::move(prop);
      stat = prop_stat;
    }
  }
}

}  // namespace

ClgModel::State ClgModel::mcmc_sweep(const State& s, double alpha, RngStream& rng) const {
  State out = s;
  const double theta = alpha > 0.0 ? params_.theta_star / std::sqrt(alpha)
                                   : std::numeric_limits<double>::infinity();
  auto log_target = [&](const SourceConfig& cfg, const std::vector<double>& stat) {
    const double prior = prior_logdensity(cfg);
    if (prior == kNegInf) return kNegInf;
    return alpha > 0.0 ? prior + log_lik_from_summary(stat, theta) : prior;
  };
  mixture_move(*this, out.cfg, out.stat, rng, log_target);
  return out;
}

ClgModel::ConditionalPosterior ClgModel::conditional_posterior(const SourceConfig& cfg,
                                                               const Eigen::VectorXd& y,
                                                               double theta) const {
  const int m = 3 * cfg.d();
  const double lambda = std::exp(cfg.log_lambda);
  ConditionalPosterior out;
  if (m == 0) {
    out.mean = Eigen::VectorXd::Zero(0);
    out.cov = Eigen::MatrixXd::Zero(0, 0);
    return out;
  }
  const Eigen::MatrixXd g = stacked_lead(cfg);
  const Eigen::MatrixXd innovation = lambda * (g * g.transpose()) + theta * theta * sigma_;
  Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("conditional_posterior: singular innovation covariance");
  }
  const Eigen::MatrixXd gain = lambda * llt.solve(g).transpose();  // m x k
  out.mean = gain * y;
  const Eigen::MatrixXd residual_map =
      Eigen::MatrixXd::Identity(m, m) - gain * g;  // I - K mu(x2)
  out.cov = lambda * (residual_map * residual_map.transpose()) +
            theta * theta * (gain * sigma_ * gain.transpose());
  return out;
}

double ClgModel::rb_tempered_logdensity(const SourceConfig& cfg, double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("rb_tempered_logdensity: alpha in (0,1]");
  const double prior = prior_logdensity(cfg);
  if (prior == kNegInf) return kNegInf;
  return prior + marginal_log_lik(cfg, params_.theta_star / std::sqrt(alpha));
}

double ClgModel::defective_sequence_log_constant(const SourceConfig& cfg, double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::domain_error("defective_sequence_log_constant: alpha in (0,1]");
  }
  const int k = grid_->n_sensors();
  const double lambda = std::exp(cfg.log_lambda);
  const double th2 = params_.theta_star * params_.theta_star;
  Eigen::MatrixXd cov = th2 * sigma_;
  if (cfg.d() > 0) {
    const Eigen::MatrixXd g = stacked_lead(cfg);
    cov += lambda * (g * g.transpose());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("defective_sequence_log_constant: covariance not positive definite");
  }
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return gaussian_power_log_constant(k, logdet, alpha);
}

ClgJointModel::ClgJointModel(const ClgModel* rb, double gamma_shape, double gamma_scale,
                             double theta_walk_log_sd)
    : rb_(rb), gamma_shape_(gamma_shape), gamma_scale_(gamma_scale),
      theta_walk_log_sd_(theta_walk_log_sd) {}

ClgJointModel::State ClgJointModel::sample_prior(RngStream& rng) const {
  auto base = rb_->sample_prior(rng);
  State s;
  s.cfg = std::move(base.cfg);
  s.stat = std::move(base.stat);
  s.theta = rng.gamma_shape2(gamma_scale_);
  return s;
}

double ClgJointModel::log_prior(const State& s) const {
  return rb_->prior_logdensity(s.cfg) + gamma_log_pdf(s.theta, gamma_shape_, gamma_scale_);
}

double ClgJointModel::tempered_log_lik(const State& s, double alpha) const {
  if (alpha <= 0.0) return 0.0;
  return alpha * rb_->log_lik_from_summary(s.stat, s.theta);
}

std::vector<double> ClgJointModel::coords(const State& s) const {
  std::vector<double> c;
  c.reserve(3 + s.cfg.locations.size());
  c.push_back(static_cast<double>(s.cfg.d()));
  c.push_back(s.cfg.log_lambda);
  c.push_back(s.theta);
  for (int loc : s.cfg.locations) c.push_back(static_cast<double>(loc));
  return c;
}

ClgJointModel::State ClgJointModel::mcmc_sweep(const State& s, double alpha, RngStream& rng) const {
  State out = s;
  auto log_target = [&](const SourceConfig& cfg, const std::vector<double>& stat) {
    const double prior = rb_->prior_logdensity(cfg);
    if (prior == kNegInf) return kNegInf;
    return prior + alpha * rb_->log_lik_from_summary(stat, out.theta);
  };
  mixture_move(*rb_, out.cfg, out.stat, rng, log_target);

  // theta log-walk; a generic joint sampler re-evaluates the likelihood here
  const double theta_prop = out.theta * std::exp(theta_walk_log_sd_ * rng.normal());
  const auto stat_again = rb_->eval_summary(out.cfg);
  const double ll_prop = rb_->log_lik_from_summary(stat_again, theta_prop);
  const double ll_cur = rb_->log_lik_from_summary(out.stat, out.theta);
  const double log_accept = alpha * (ll_prop - ll_cur) +
                            gamma_log_pdf(theta_prop, gamma_shape_, gamma_scale_) -
                            gamma_log_pdf(out.theta, gamma_shape_, gamma_scale_) +
                            std::log(theta_prop) - std::log(out.theta);
  if (std::log1p(-rng.uniform()) <= log_accept) {
    out.theta = theta_prop;
    out.stat = stat_again;
  }
  return out;
}

}  // namespace hsmc
