#include "hsmc/models/nef.hpp"

#include <cmath>
#include <stdexcept>

namespace hsmc {

double nef_power_log_constant(const LogNormalizer& log_normalizer, double theta, double alpha) {
  if (alpha == 0.0) throw std::domain_error("nef_power_constant: alpha must be nonzero");
  const double a_scaled = log_normalizer(alpha * theta);
  const double a_base = log_normalizer(theta);
  if (!std::isfinite(a_scaled) || !std::isfinite(a_base)) {
    throw std::domain_error("nef_power_constant: parameter outside the natural domain");
  }
  return a_scaled - alpha * a_base;
}

double nef_power_constant(const LogNormalizer& log_normalizer, double theta, double alpha) {
  return std::exp(nef_power_log_constant(log_normalizer, theta, alpha));
}

double gaussian_power_log_constant(int dim, double logdet_cov, double alpha) {
  return 0.5 * ((1.0 - alpha) * (dim * std::log(2.0 * M_PI) + logdet_cov) - dim * std::log(alpha));
}

GaussianPower gaussian_power(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("gaussian_power: alpha must be positive");
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
    throw std::invalid_argument("gaussian_power: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("gaussian_power: covariance is not positive definite");
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  GaussianPower out;
  out.log_constant = gaussian_power_log_constant(static_cast<int>(cov.rows()), logdet, alpha);
  out.constant = std::exp(out.log_constant);
  out.cov = cov / alpha;
  return out;
}

double theta_of_alpha(double theta_star, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("theta_of_alpha: alpha must be positive");
  if (!(theta_star > 0.0)) throw std::domain_error("theta_of_alpha: theta_star must be positive");
  return theta_star / std::sqrt(alpha);
}

}  // namespace hsmc
