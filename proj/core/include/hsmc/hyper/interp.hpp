#ifndef HSMC_HYPER_INTERP_HPP
#define HSMC_HYPER_INTERP_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace hsmc {

/// Monotone piecewise-cubic (Fritsch-Carlson / PCHIP) interpolant.
/// Shape-preserving: no overshoot between knots, reproduces knots exactly.
class PchipInterpolator {
 public:
  PchipInterpolator() = default;
  PchipInterpolator(std::span<const double> x_ascending, std::span<const double> y);

  double operator()(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace hsmc

#endif
