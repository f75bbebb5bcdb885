#pragma once

#include <cmath>

namespace dptails {

namespace detail {

inline double simpson_panel(double a, double fa, double fb, double b,
                            double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename Fn>
double adaptive_simpson_rec(Fn& f, double a, double fa, double b, double fb,
                            double m, double fm, double whole, double tol,
                            int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_panel(a, fa, fm, m, flm);
  const double right = simpson_panel(m, fm, fb, b, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol,
                              depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <typename Fn>
double adaptive_simpson(Fn&& f, double a, double b, double tol,
                        int max_depth = 50) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = detail::simpson_panel(a, fa, fb, b, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol,
                                      max_depth);
}

}  // namespace dptails
