#ifndef HSMC_TESTS_SUPPORT_ORACLES_HPP
#define HSMC_TESTS_SUPPORT_ORACLES_HPP

// Test-only reference implementations, independent of the library code paths
// they check.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "hsmc/models/toy.hpp"

namespace oracles {

// plain composite trapezoid on [a,b] with n nodes
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  double sum = 0.5 * (f(a) + f(b));
  const double h = (b - a) / (n - 1);
  for (int i = 1; i + 1 < n; ++i) sum += f(a + h * i);
  return sum * h;
}

// log of a trapezoid integral of exp(log_f), max-shifted
inline double log_trapezoid_exp(const std::function<double(double)>& log_f, double a, double b,
                                int n) {
  std::vector<double> vals(static_cast<std::size_t>(n));
  double mx = -std::numeric_limits<double>::infinity();
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    vals[static_cast<std::size_t>(i)] = log_f(a + h * i);
    mx = std::max(mx, vals[static_cast<std::size_t>(i)]);
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    sum += w * std::exp(vals[static_cast<std::size_t>(i)] - mx);
  }
  return mx + std::log(sum * h);
}

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

// log p^theta(y) for the toy dataset by quadrature over mu in [-5, 5]
inline double toy_log_evidence(const hsmc::ToyData& d, double theta, int n_nodes = 10000) {
  auto log_joint = [&](double mu) {
    double ll = 0.0;
    for (std::size_t i = 0; i < d.times.size(); ++i) {
      const double r = d.data[i] - normal_pdf(d.times[i], mu, d.waveform_sigma);
      ll += -0.5 * std::log(2.0 * M_PI * theta * theta) - r * r / (2.0 * theta * theta);
    }
    return ll - std::log(10.0);
  };
  return log_trapezoid_exp(log_joint, -5.0, 5.0, n_nodes);
}

// 2-D grid posterior over (mu, theta) for the toy model under a hyper-prior
struct ToyJointOracle {
  std::vector<double> mu_grid, log_theta_grid, theta_grid;
  double e_mu = 0.0, e_theta = 0.0, map_theta = 0.0;
  std::vector<double> theta_density;  // density in theta at theta_grid nodes

  ToyJointOracle(const hsmc::ToyData& d, const std::function<double(double)>& log_prior_theta,
                 double theta_lo, double theta_hi, int n_mu = 2001, int n_theta = 2001) {
    mu_grid.resize(static_cast<std::size_t>(n_mu));
    for (int i = 0; i < n_mu; ++i) {
      mu_grid[static_cast<std::size_t>(i)] = -5.0 + 10.0 * i / (n_mu - 1.0);
    }
    log_theta_grid.resize(static_cast<std::size_t>(n_theta));
    theta_grid.resize(static_cast<std::size_t>(n_theta));
    for (int j = 0; j < n_theta; ++j) {
      log_theta_grid[static_cast<std::size_t>(j)] =
          std::log(theta_lo) + (std::log(theta_hi) - std::log(theta_lo)) * j / (n_theta - 1.0);
      theta_grid[static_cast<std::size_t>(j)] = std::exp(log_theta_grid[static_cast<std::size_t>(j)]);
    }
    const double n_obs = static_cast<double>(d.times.size());
    std::vector<double> ssr(mu_grid.size());
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < d.times.size(); ++o) {
        const double r = d.data[o] - normal_pdf(d.times[o], mu_grid[i], d.waveform_sigma);
        s += r * r;
      }
      ssr[i] = s;
    }
    // joint over (mu, log theta), prior d(theta) jacobian included
    std::vector<std::vector<double>> log_joint(mu_grid.size(),
                                               std::vector<double>(theta_grid.size()));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
      for (std::size_t j = 0; j < theta_grid.size(); ++j) {
        const double th = theta_grid[j];
        const double ll = -0.5 * n_obs * std::log(2.0 * M_PI * th * th) - ssr[i] / (2.0 * th * th);
        log_joint[i][j] = ll + log_prior_theta(th) + std::log(th) - std::log(10.0);
        mx = std::max(mx, log_joint[i][j]);
      }
    }
    const double dlt = log_theta_grid[1] - log_theta_grid[0];
    double z = 0.0, num_mu = 0.0, num_th = 0.0;
    theta_density.assign(theta_grid.size(), 0.0);
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
      const double wi = (i == 0 || i + 1 == mu_grid.size()) ? 0.5 : 1.0;
      for (std::size_t j = 0; j < theta_grid.size(); ++j) {
        const double wj = (j == 0 || j + 1 == theta_grid.size()) ? 0.5 : 1.0;
        const double p = std::exp(log_joint[i][j] - mx) * wi * wj;
        z += p;
        num_mu += p * mu_grid[i];
        num_th += p * theta_grid[j];
        theta_density[j] += std::exp(log_joint[i][j] - mx) * wi;
      }
    }
    e_mu = num_mu / z;
    e_theta = num_th / z;
    // theta_density is in log-theta measure; convert and normalize in theta
    double zz = 0.0;
    for (std::size_t j = 0; j < theta_grid.size(); ++j) {
      theta_density[j] /= theta_grid[j];
      const double wj = (j == 0 || j + 1 == theta_grid.size()) ? 0.5 : 1.0;
      zz += theta_density[j] * theta_grid[j] * dlt * wj;
    }
    for (auto& v : theta_density) v /= zz;
    std::size_t jbest = 0;
    for (std::size_t j = 1; j < theta_grid.size(); ++j) {
      if (theta_density[j] > theta_density[jbest]) jbest = j;
    }
    map_theta = theta_grid[jbest];
  }
};

}  // namespace oracles

#endif
