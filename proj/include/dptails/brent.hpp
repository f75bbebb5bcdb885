#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

namespace dptails {

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

// Bounded scalar minimization on [a, b]: golden-section steps with parabolic
// interpolation where the fit is trustworthy. Stops when the bracket around
// the current best point shrinks below xtol.
template <typename Fn>
BrentResult brent_minimize(Fn&& f, double a, double b, double xtol = 1e-6,
                           std::size_t max_iter = 200) {
  constexpr double golden = 0.3819660112501051;
  double lo = a;
  double hi = b;
  double x = lo + golden * (hi - lo);
  double w = x;   // second-best point
  double v = x;   // previous second-best
  double fx = f(x);
  double fw = fx;
  double fv = fx;
  double delta = 0.0;   // most recent step
  double delta2 = 0.0;  // step before last

  BrentResult result;
  result.evaluations = 1;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter + 1;
    const double mid = 0.5 * (lo + hi);
    const double tol1 = xtol * std::abs(x) + xtol * 0.25;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - mid) <= tol2 - 0.5 * (hi - lo)) break;

    bool use_golden = true;
    if (std::abs(delta2) > tol1) {
      // Parabola through (x, w, v).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double prev_delta2 = delta2;
      delta2 = delta;
      if (std::abs(p) < std::abs(0.5 * q * prev_delta2) && p > q * (lo - x) &&
          p < q * (hi - x)) {
        delta = p / q;
        double u = x + delta;
        if (u - lo < tol2 || hi - u < tol2) {
          delta = (mid > x) ? tol1 : -tol1;
        }
        use_golden = false;
      }
    }
    if (use_golden) {
      delta2 = (x >= mid) ? lo - x : hi - x;
      delta = golden * delta2;
    }

    const double u =
        (std::abs(delta) >= tol1) ? x + delta : x + (delta > 0 ? tol1 : -tol1);
    const double fu = f(u);
    ++result.evaluations;

    if (fu <= fx) {
      (u >= x ? lo : hi) = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      (u < x ? lo : hi) = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }

  result.x = x;
  result.fx = fx;
  return result;
}

}  // namespace dptails
