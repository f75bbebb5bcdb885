#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dptails/errors.hpp"

namespace dptails {

// A non-empty multiset of real samples, sorted ascending. Non-finite values
// are rejected at construction rather than dropped, which would bias quantiles.
class SampleSet {
 public:
  explicit SampleSet(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw DataError("SampleSet: cannot build from an empty sample set");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) {
        throw DataError("SampleSet: non-finite sample value rejected");
      }
    }
    std::sort(values_.begin(), values_.end());
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

// Right-continuous step CDF of a sample set: F(t) = #{x_i <= t} / n.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(SampleSet samples) : samples_(std::move(samples)) {}

  double operator()(double t) const {
    const auto& v = samples_.values();
    auto count = std::upper_bound(v.begin(), v.end(), t) - v.begin();
    return static_cast<double>(count) / static_cast<double>(v.size());
  }

  const SampleSet& samples() const { return samples_; }

 private:
  SampleSet samples_;
};

// Left-continuous empirical quantile function: Q(t) = inf{y : F(y) >= t},
// i.e. the smallest order statistic whose ECDF level reaches t. Q(0) takes
// the Q(0+) convention (the first order statistic). No interpolation, so Q
// is the exact generalized inverse of the step ECDF.
class QuantileTable {
 public:
  explicit QuantileTable(SampleSet samples) : samples_(std::move(samples)) {}

  double operator()(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("QuantileTable: level must lie in [0,1]");
    }
    const auto& v = samples_.values();
    if (t == 0.0) return v.front();
    const auto n = v.size();
    // Smallest j with j/n >= t, comparing in the same arithmetic the ECDF
    // evaluates in, so Q is its exact inverse on the level grid {i/n}.
    double u = static_cast<double>(n) * t;
    std::size_t j = static_cast<std::size_t>(std::ceil(u));
    j = std::clamp<std::size_t>(j, 1, n);
    while (j > 1 &&
           static_cast<double>(j - 1) / static_cast<double>(n) >= t) {
      --j;
    }
    while (j < n && static_cast<double>(j) / static_cast<double>(n) < t) {
      ++j;
    }
    return v[j - 1];
  }

  const SampleSet& samples() const { return samples_; }

 private:
  SampleSet samples_;
};

// Dual generalized inverse of a nondecreasing left-continuous function on the
// open interval (lo, hi): sup{x : q(x) <= y} = inf{x : q(x) > y}, with
// sup(empty) = lo and inf(empty) = hi. Bisection runs down to adjacent
// doubles, so when the boundary level is representable (the usual case for a
// step function jumping at a parameter value) it is returned exactly.
template <typename Fn>
double dual_generalized_inverse(Fn&& q, double y, double lo = 0.0,
                                double hi = 1.0) {
  double a = lo;
  double b = hi;
  bool found_le = false;
  bool found_gt = false;
  for (int iter = 0; iter < 4096; ++iter) {
    double mid = std::midpoint(a, b);
    if (mid <= a || mid >= b) break;
    if (q(mid) <= y) {
      a = mid;
      found_le = true;
    } else {
      b = mid;
      found_gt = true;
    }
  }
  if (!found_gt) return hi;
  if (!found_le) return lo;
  return a;
}

// Perturbs every sample by an independent U[-sigma, sigma] draw and re-sorts.
// Ties in the output have probability zero, which is what lets the empirical
// tables behave as if the underlying law had a density.
inline SampleSet jitter(const SampleSet& samples, double sigma,
                        std::mt19937_64& rng) {
  if (!(sigma > 0.0)) {
    throw ConfigError("jitter: sigma must be positive");
  }
  std::uniform_real_distribution<double> noise(-sigma, sigma);
  std::vector<double> out;
  out.reserve(samples.size());
  for (double v : samples.values()) out.push_back(v + noise(rng));
  return SampleSet(std::move(out));
}

// Kolmogorov-Smirnov distance between the two step CDFs. Both CDFs only
// change at sample points, so the sup is attained on the union of the two
// sample sets.
inline double ks_distance(const SampleSet& a, const SampleSet& b) {
  EmpiricalCDF fa(a);
  EmpiricalCDF fb(b);
  std::vector<double> points;
  points.reserve(a.size() + b.size() + 1);
  points.insert(points.end(), a.values().begin(), a.values().end());
  points.insert(points.end(), b.values().begin(), b.values().end());
  points.push_back(std::min(a.min(), b.min()) - 1.0);
  double sup = 0.0;
  for (double t : points) sup = std::max(sup, std::abs(fa(t) - fb(t)));
  return sup;
}

}  // namespace dptails
