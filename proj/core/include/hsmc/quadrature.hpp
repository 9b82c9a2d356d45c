#ifndef HSMC_QUADRATURE_HPP
#define HSMC_QUADRATURE_HPP

#include <cmath>
#include <functional>

namespace hsmc {

namespace detail {
inline double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                            double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-8, int max_depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Golden-section maximization of f on [a,b] to relative tolerance `rel_tol`
/// in the argument; compares interior optimum against both endpoints.
template <class F>
double golden_section_max(F&& f, double a, double b, double rel_tol = 1e-6) {
  constexpr double invphi = 0.6180339887498949;
  const double a0 = a, b0 = b;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  while (b - a > rel_tol * scale) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  double best = xm, fbest = f(xm);
  // endpoints can dominate when the maximum sits on the boundary
  if (f(a0) > fbest) { best = a0; fbest = f(a0); }
  if (f(b0) > fbest) { best = b0; fbest = f(b0); }
  return best;
}

}  // namespace hsmc

#endif
