#ifndef HSMC_MODELS_NEF_HPP
#define HSMC_MODELS_NEF_HPP

#include <functional>

#include <Eigen/Dense>

namespace hsmc {

/// Natural exponential family instance p^theta(y) = exp(theta T(y) - A_theta),
/// described by its log-normalizer A.
using LogNormalizer = std::function<double(double)>;

/// The constant c with [p^theta]^alpha = c * p^{alpha*theta}:
/// c = exp(A_{alpha*theta} - alpha * A_theta). Requires alpha != 0 and
/// alpha*theta inside the natural-parameter domain (A must throw or return
/// non-finite outside it).
double nef_power_constant(const LogNormalizer& log_normalizer, double theta, double alpha);
double nef_power_log_constant(const LogNormalizer& log_normalizer, double theta, double alpha);

struct GaussianPower {
  double constant;        // multiplicative constant
  double log_constant;    // its log
  Eigen::MatrixXd cov;    // covariance of the powered density: cov / alpha
};

/// Powering an m-dimensional Gaussian: N(x; m, C)^alpha =
/// sqrt(((2*pi)^m det C)^(1-alpha) * alpha^-m) * N(x; m, C/alpha).
GaussianPower gaussian_power(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha);

/// Log of the gaussian_power constant from the covariance log-determinant.
double gaussian_power_log_constant(int dim, double logdet_cov, double alpha);

/// theta(t) = theta_star / sqrt(alpha); the hyper-parameter value whose
/// posterior the tempered density at exponent alpha coincides with.
double theta_of_alpha(double theta_star, double alpha);

}  // namespace hsmc

#endif
