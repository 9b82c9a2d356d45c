#include <doctest.h>

#include <cmath>

#include "hsmc/models/nef.hpp"
#include "hsmc/quadrature.hpp"
#include "support/oracles.hpp"

using namespace hsmc;

namespace {

// Gaussian NEF in the canonical parameter theta = 1/sigma^2 (zero mean, unit Gamma):
// exp(A_theta) = sqrt(2 pi / theta)
double gaussian_log_normalizer(double theta) {
  if (!(theta > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * std::log(2.0 * M_PI / theta);
}

// Exponential distribution with rate theta: p(x) = theta exp(-theta x),
// T(x) = -x, A_theta = -log theta
double exponential_log_normalizer(double theta) {
  if (!(theta > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -std::log(theta);
}

}  // namespace

TEST_CASE("nef power constant at alpha = 1 is exactly 1") {
  CHECK(nef_power_constant(gaussian_log_normalizer, 2.3, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nef_power_constant(exponential_log_normalizer, 0.7, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("nef power constant: standard normal at alpha = 0.5 (quadrature oracle)") {
  // oracle: integral of N(x; 0,1)^0.5 over the real line
  const double oracle = oracles::trapezoid(
      [](double x) { return std::exp(0.5 * (-0.5 * x * x - 0.5 * std::log(2.0 * M_PI))); }, -60.0,
      60.0, 200001);
  CHECK(oracle == doctest::Approx(2.2390302698404954).epsilon(1e-9));
  CHECK(nef_power_constant(gaussian_log_normalizer, 1.0, 0.5) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("nef power constant: standard normal squared") {
  const double oracle = oracles::trapezoid(
      [](double x) { return std::exp(2.0 * (-0.5 * x * x - 0.5 * std::log(2.0 * M_PI))); }, -60.0,
      60.0, 200001);
  CHECK(oracle == doctest::Approx(std::sqrt(1.0 / (2.0 * M_PI * 2.0))).epsilon(1e-10));
  CHECK(oracle == doctest::Approx(0.28209479177387814).epsilon(1e-9));
  CHECK(nef_power_constant(gaussian_log_normalizer, 1.0, 2.0) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("nef power identity holds across the instance suite by quadrature") {
  // Gaussian instances at several scales
  for (double theta : {0.5, 1.0, 3.0}) {
    for (double alpha : {0.25, 0.5, 0.8, 1.5}) {
      const double c = nef_power_constant(gaussian_log_normalizer, theta, alpha);
      const double oracle = oracles::trapezoid(
          [&](double x) {
            const double logp = -0.5 * theta * x * x - gaussian_log_normalizer(theta);
            return std::exp(alpha * logp);
          },
          -80.0, 80.0, 400001);
      CHECK(c == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
  // Exponential instances (integration over [0, inf))
  for (double theta : {0.5, 2.0}) {
    for (double alpha : {0.5, 1.5}) {
      const double c = nef_power_constant(exponential_log_normalizer, theta, alpha);
      const double oracle = oracles::trapezoid(
          [&](double x) { return std::pow(theta * std::exp(-theta * x), alpha); }, 0.0, 400.0,
          400001);
      CHECK(c == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
}

TEST_CASE("gaussian power: alpha = 1 leaves everything unchanged") {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  const auto p = gaussian_power(Eigen::VectorXd::Zero(2), cov, 1.0);
  CHECK(p.constant == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((p.cov - cov).norm() == doctest::Approx(0.0));
}

TEST_CASE("gaussian power: 1-d unit variance at alpha = 0.5") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
  const auto p = gaussian_power(Eigen::VectorXd::Zero(1), cov, 0.5);
  CHECK(p.constant == doctest::Approx(2.2390302698404954).epsilon(1e-12));
  CHECK(p.cov(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("gaussian power: 2-d identity at alpha = 0.25 matches the formula and quadrature") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  const auto p = gaussian_power(Eigen::VectorXd::Zero(2), cov, 0.25);
  // sqrt((2 pi)^{1.5} * 16); the powered 2-d density separates into 1-d factors
  CHECK(p.constant == doctest::Approx(std::sqrt(std::pow(2.0 * M_PI, 1.5) * 16.0)).epsilon(1e-12));
  const double oned = oracles::trapezoid(
      [](double x) { return std::exp(0.25 * (-0.5 * x * x - 0.5 * std::log(2.0 * M_PI))); }, -100.0,
      100.0, 400001);
  CHECK(p.constant == doctest::Approx(oned * oned).epsilon(1e-8));
  CHECK(p.cov(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("gaussian power agrees with the nef power constant on the gaussian family") {
  for (double sigma2 : {0.3, 1.0, 4.2}) {
    for (double alpha : {0.2, 0.7, 1.3}) {
      Eigen::MatrixXd cov = sigma2 * Eigen::MatrixXd::Identity(1, 1);
      const auto p = gaussian_power(Eigen::VectorXd::Zero(1), cov, alpha);
      auto log_a = [sigma2](double th) {
        if (!(th > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return 0.5 * std::log(2.0 * M_PI / th);
      };
      const double c = nef_power_constant(log_a, 1.0 / sigma2, alpha);
      CHECK(p.constant == doctest::Approx(c).epsilon(1e-10));
    }
  }
}

TEST_CASE("gaussian power rejects non-positive-definite covariance") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(gaussian_power(Eigen::VectorXd::Zero(2), cov, 0.5), std::domain_error);
}

TEST_CASE("theta_of_alpha") {
  CHECK(theta_of_alpha(0.05, 1.0) == doctest::Approx(0.05));
  CHECK(theta_of_alpha(0.05, 0.25) == doctest::Approx(0.1));
  CHECK(theta_of_alpha(0.05, 1e-4) == doctest::Approx(5.0));
  CHECK_THROWS_AS(theta_of_alpha(0.05, 0.0), std::domain_error);
  CHECK_THROWS_AS(theta_of_alpha(0.05, -1.0), std::domain_error);
}

TEST_CASE("theta_of_alpha is strictly decreasing in alpha") {
  double prev = theta_of_alpha(0.05, 1e-5);
  for (double a = 1e-4; a <= 1.0; a *= 3.0) {
    const double th = theta_of_alpha(0.05, a);
    CHECK(th < prev);
    prev = th;
  }
}
