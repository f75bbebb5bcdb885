#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dptails/errors.hpp"
#include "dptails/rng.hpp"

namespace dptails {

// A desk-scale discrete instance of the constrained transport problem:
// per-group quantile values on the midpoint level grid t_i = (i - 1/2)/m,
// group proportions, threshold alpha and a grid-valid proportion p.
struct DiscreteInstance {
  std::vector<std::vector<double>> quantile_values;  // [group][level]
  std::vector<double> proportions;
  double alpha = 0.0;
  double p = 0.0;

  std::size_t group_count() const { return quantile_values.size(); }
  std::size_t level_count() const { return quantile_values.front().size(); }

  double level(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(level_count());
  }

  bool level_in_lower_branch(std::size_t i) const { return level(i) <= p; }

  double average_at(std::size_t i) const {
    double acc = 0.0;
    for (std::size_t s = 0; s < group_count(); ++s) {
      acc += proportions[s] * quantile_values[s][i];
    }
    return acc;
  }

  double min_value() const {
    double v = quantile_values[0][0];
    for (const auto& q : quantile_values) v = std::min(v, q.front());
    return v;
  }

  double max_value() const {
    double v = quantile_values[0][0];
    for (const auto& q : quantile_values) v = std::max(v, q.back());
    return v;
  }

  void validate() const {
    if (quantile_values.empty()) {
      throw ConfigError("oracle instance: at least one group required");
    }
    if (proportions.size() != quantile_values.size()) {
      throw ConfigError("oracle instance: one proportion per group required");
    }
    const std::size_t m = quantile_values.front().size();
    if (m == 0) throw ConfigError("oracle instance: empty level grid");
    double total = 0.0;
    for (std::size_t s = 0; s < quantile_values.size(); ++s) {
      const auto& q = quantile_values[s];
      if (q.size() != m) {
        throw ConfigError("oracle instance: ragged quantile grids");
      }
      for (std::size_t i = 1; i < m; ++i) {
        if (!(q[i] > q[i - 1])) {
          throw ConfigError(
              "oracle instance: quantile values must be strictly increasing");
        }
      }
      total += proportions[s];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError("oracle instance: proportions must sum to 1");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("oracle instance: p must lie in [0,1]");
    }
    const double k = p * static_cast<double>(m);
    if (std::abs(k - std::round(k)) > 1e-9) {
      throw ConfigError("oracle instance: p must sit on the level grid {i/m}");
    }
    if (!std::isfinite(alpha)) {
      throw ConfigError("oracle instance: alpha must be finite");
    }
  }
};

// Exact squared 2-Wasserstein distance between two uniform discrete measures
// of equal size: mean of squared differences of matched order statistics.
inline double wasserstein2_discrete(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size()) {
    throw DataError("wasserstein2_discrete: equal nonzero lengths required");
  }
  if (!std::is_sorted(a.begin(), a.end()) ||
      !std::is_sorted(b.begin(), b.end())) {
    throw ConfigError("wasserstein2_discrete: inputs must be sorted");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// Uniform candidate lattice alpha + k*step covering [minQ - 1, maxQ + 1];
// contains alpha exactly by construction.
inline std::vector<double> make_value_grid(const DiscreteInstance& instance,
                                           double step) {
  if (!(step > 0.0)) throw ConfigError("value grid: step must be positive");
  const double lo = std::min(instance.min_value() - 1.0, instance.alpha);
  const double hi =
      std::max(instance.max_value() + 1.0, instance.alpha + 2.0 * step);
  const auto k_lo =
      static_cast<long long>(std::ceil((instance.alpha - lo) / step));
  const auto k_hi =
      static_cast<long long>(std::ceil((hi - instance.alpha) / step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(k_lo + k_hi + 1));
  for (long long k = -k_lo; k <= k_hi; ++k) {
    grid.push_back(instance.alpha + static_cast<double>(k) * step);
  }
  return grid;
}

struct GridSearchResult {
  std::vector<std::vector<double>> optimal_values;  // [group][level]
  double objective = 0.0;
};

// Exhaustive per-level search over the value grid. Levels at or below p pick,
// per group, the best candidate <= alpha; levels above p pick one shared
// candidate, strictly above alpha when strict_upper is set (the xi device,
// with xi = one grid step) or at/above alpha otherwise. Per-level decoupling
// must assemble into a per-group monotone solution; that is checked and is a
// logic error if violated.
inline GridSearchResult grid_search_optimum(const DiscreteInstance& instance,
                                            const std::vector<double>& value_grid,
                                            bool strict_upper = true) {
  instance.validate();
  if (value_grid.size() < 2 ||
      !std::is_sorted(value_grid.begin(), value_grid.end())) {
    throw ConfigError("grid search: value grid must be sorted with >= 2 points");
  }
  if (value_grid.front() > instance.min_value() - 1.0 ||
      value_grid.back() < instance.max_value() + 1.0 ||
      std::find(value_grid.begin(), value_grid.end(), instance.alpha) ==
          value_grid.end()) {
    throw ConfigError(
        "grid search: value grid must cover [min Q - 1, max Q + 1] and "
        "contain alpha");
  }

  std::vector<double> lower_candidates;
  std::vector<double> upper_candidates;
  for (double v : value_grid) {
    if (v <= instance.alpha) lower_candidates.push_back(v);
    if (strict_upper ? v > instance.alpha : v >= instance.alpha) {
      upper_candidates.push_back(v);
    }
  }

  const std::size_t n_groups = instance.group_count();
  const std::size_t m = instance.level_count();
  GridSearchResult result;
  result.optimal_values.assign(n_groups, std::vector<double>(m, 0.0));

  for (std::size_t i = 0; i < m; ++i) {
    if (instance.level_in_lower_branch(i)) {
      if (lower_candidates.empty()) {
        throw ConfigError("grid search: no candidates <= alpha (grid too coarse)");
      }
      for (std::size_t s = 0; s < n_groups; ++s) {
        const double target = instance.quantile_values[s][i];
        double best_v = lower_candidates.front();
        double best_cost =
            (target - best_v) * (target - best_v);
        for (double v : lower_candidates) {
          const double cost = (target - v) * (target - v);
          if (cost < best_cost) {
            best_cost = cost;
            best_v = v;
          }
        }
        result.optimal_values[s][i] = best_v;
      }
    } else {
      if (upper_candidates.empty()) {
        throw ConfigError("grid search: no candidates above alpha (grid too coarse)");
      }
      double best_v = upper_candidates.front();
      double best_cost = 0.0;
      bool first = true;
      for (double v : upper_candidates) {
        double cost = 0.0;
        for (std::size_t s = 0; s < n_groups; ++s) {
          const double d = instance.quantile_values[s][i] - v;
          cost += instance.proportions[s] * d * d;
        }
        if (first || cost < best_cost) {
          best_cost = cost;
          best_v = v;
          first = false;
        }
      }
      for (std::size_t s = 0; s < n_groups; ++s) {
        result.optimal_values[s][i] = best_v;
      }
    }
  }

  for (std::size_t s = 0; s < n_groups; ++s) {
    for (std::size_t i = 1; i < m; ++i) {
      if (result.optimal_values[s][i] < result.optimal_values[s][i - 1]) {
        throw std::logic_error(
            "grid search: per-level optima are not monotone per group");
      }
    }
  }

  double objective = 0.0;
  for (std::size_t s = 0; s < n_groups; ++s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d =
          instance.quantile_values[s][i] - result.optimal_values[s][i];
      acc += d * d;
    }
    objective += instance.proportions[s] * acc / static_cast<double>(m);
  }
  result.objective = objective;
  return result;
}

// Reference closed form on the instance's level grid. When the star solution
// is infeasible on the grid (some upper level has average quantile <= alpha,
// the no-minimum regime) the reference switches to the xi family with
// xi = one grid step, mirroring the strict-branch device of the search.
struct ClosedFormReference {
  std::vector<std::vector<double>> values;  // [group][level]
  double objective = 0.0;
  bool minimum_attained = true;
};

inline ClosedFormReference closed_form_reference(const DiscreteInstance& instance,
                                                 double xi_step) {
  const std::size_t n_groups = instance.group_count();
  const std::size_t m = instance.level_count();
  bool minimum_attained = true;
  for (std::size_t i = 0; i < m; ++i) {
    if (!instance.level_in_lower_branch(i) &&
        instance.average_at(i) <= instance.alpha) {
      minimum_attained = false;
      break;
    }
  }
  const double slack = minimum_attained ? 0.0 : xi_step;

  ClosedFormReference ref;
  ref.minimum_attained = minimum_attained;
  ref.values.assign(n_groups, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double avg = instance.average_at(i);
    for (std::size_t s = 0; s < n_groups; ++s) {
      if (instance.level_in_lower_branch(i)) {
        ref.values[s][i] =
            std::min(instance.alpha, instance.quantile_values[s][i]);
      } else {
        ref.values[s][i] = std::max(instance.alpha + slack, avg);
      }
    }
  }
  double objective = 0.0;
  for (std::size_t s = 0; s < n_groups; ++s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = instance.quantile_values[s][i] - ref.values[s][i];
      acc += d * d;
    }
    objective += instance.proportions[s] * acc / static_cast<double>(m);
  }
  ref.objective = objective;
  return ref;
}

struct OracleReport {
  std::string check;
  bool pass = false;
  double tol = 0.0;
  double max_value_deviation = 0.0;
  double objective_deviation = 0.0;
  bool minimum_attained_regime = true;
  std::vector<double> per_level_deviation;  // max over groups, per level

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["check"] = check;
    j["pass"] = pass;
    j["tol"] = tol;
    j["max_value_deviation"] = max_value_deviation;
    j["objective_deviation"] = objective_deviation;
    j["minimum_attained_regime"] = minimum_attained_regime;
    j["per_level_deviation"] = per_level_deviation;
    return j;
  }
};

using ClosedFormFn = std::function<double(std::size_t group, std::size_t level)>;

// Cross-checks the exhaustive grid search against the closed form: pointwise
// values and objective must agree within tol. An override closed form can be
// injected as a negative control.
inline OracleReport verify_closed_form(const DiscreteInstance& instance,
                                       double tol,
                                       const std::vector<double>& value_grid,
                                       const ClosedFormFn& override_fn = {}) {
  const double step = value_grid[1] - value_grid[0];
  if (!(tol > step)) {
    throw ConfigError("verify_closed_form: tol must exceed the grid step");
  }
  GridSearchResult search = grid_search_optimum(instance, value_grid, true);
  ClosedFormReference ref = closed_form_reference(instance, step);

  OracleReport report;
  report.check = "closed_form";
  report.tol = tol;
  report.minimum_attained_regime = ref.minimum_attained;

  const std::size_t n_groups = instance.group_count();
  const std::size_t m = instance.level_count();
  report.per_level_deviation.assign(m, 0.0);
  double ref_objective = 0.0;
  if (override_fn) {
    for (std::size_t s = 0; s < n_groups; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = instance.quantile_values[s][i] - override_fn(s, i);
        acc += d * d;
      }
      ref_objective += instance.proportions[s] * acc / static_cast<double>(m);
    }
  } else {
    ref_objective = ref.objective;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t s = 0; s < n_groups; ++s) {
      const double expected = override_fn ? override_fn(s, i) : ref.values[s][i];
      const double dev = std::abs(search.optimal_values[s][i] - expected);
      report.per_level_deviation[i] = std::max(report.per_level_deviation[i], dev);
    }
    report.max_value_deviation =
        std::max(report.max_value_deviation, report.per_level_deviation[i]);
  }
  report.objective_deviation = std::abs(search.objective - ref_objective);
  report.pass = report.max_value_deviation <= tol &&
                report.objective_deviation <= tol;
  return report;
}

// Theorem-1 check at grid level: the proportion-weighted sum of squared
// Wasserstein distances between each group and its optimal family equals the
// quantile-grid objective (the same sums reordered).
inline OracleReport verify_barycenter_identity(
    const DiscreteInstance& instance, double tol,
    const std::vector<double>& value_grid) {
  GridSearchResult search = grid_search_optimum(instance, value_grid, true);
  double lhs = 0.0;
  for (std::size_t s = 0; s < instance.group_count(); ++s) {
    lhs += instance.proportions[s] *
           wasserstein2_discrete(instance.quantile_values[s],
                                 search.optimal_values[s]);
  }
  OracleReport report;
  report.check = "barycenter_identity";
  report.tol = tol;
  report.objective_deviation = std::abs(lhs - search.objective);
  report.max_value_deviation = report.objective_deviation;
  report.pass = report.objective_deviation <= tol;
  return report;
}

// Fixed fixtures plus seeded random instances: |S| in {2,3}, m in {8,16},
// strictly increasing quantiles, alpha across the value range (both Theorem-2
// regimes occur), p on the level grid.
inline std::vector<DiscreteInstance> builtin_instance_battery(
    std::uint64_t seed, std::size_t n_random = 20) {
  std::vector<DiscreteInstance> battery;

  auto midpoint_values = [](std::size_t m, auto&& fn) {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = fn((static_cast<double>(i) + 0.5) / static_cast<double>(m));
    }
    return v;
  };

  // Two-group uniform fixture: Q_0(t) = t, Q_1(t) = t + 1.
  {
    DiscreteInstance inst;
    inst.quantile_values = {midpoint_values(8, [](double t) { return t; }),
                            midpoint_values(8, [](double t) { return t + 1.0; })};
    inst.proportions = {0.5, 0.5};
    inst.alpha = 0.75;
    inst.p = 0.5;
    battery.push_back(std::move(inst));
  }
  // Identical groups.
  {
    DiscreteInstance inst;
    inst.quantile_values = {
        midpoint_values(8, [](double t) { return 2.0 * t - 1.0; }),
        midpoint_values(8, [](double t) { return 2.0 * t - 1.0; })};
    inst.proportions = {0.5, 0.5};
    inst.alpha = 0.2;
    inst.p = 0.25;
    battery.push_back(std::move(inst));
  }
  // No-minimum regime: alpha above the average quantile at p.
  {
    DiscreteInstance inst;
    inst.quantile_values = {midpoint_values(8, [](double t) { return t; }),
                            midpoint_values(8, [](double t) { return t + 0.2; })};
    inst.proportions = {0.4, 0.6};
    inst.alpha = 0.9;
    inst.p = 0.25;
    battery.push_back(std::move(inst));
  }

  auto rng = substream(seed, "oracle-battery");
  std::uniform_int_distribution<int> group_dist(2, 3);
  std::uniform_int_distribution<int> m_dist(0, 1);
  std::uniform_real_distribution<double> start_dist(-1.0, 0.0);
  std::uniform_real_distribution<double> gap_dist(0.02, 0.25);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < n_random; ++r) {
    DiscreteInstance inst;
    const int n_groups = group_dist(rng);
    const std::size_t m = m_dist(rng) == 0 ? 8 : 16;
    std::vector<double> raw_props;
    double total = 0.0;
    for (int s = 0; s < n_groups; ++s) {
      raw_props.push_back(0.2 + unit(rng));
      total += raw_props.back();
    }
    for (int s = 0; s < n_groups; ++s) {
      inst.proportions.push_back(raw_props[s] / total);
    }
    // Renormalize the last entry so the proportions sum to 1 exactly.
    double partial = 0.0;
    for (int s = 0; s + 1 < n_groups; ++s) partial += inst.proportions[s];
    inst.proportions.back() = 1.0 - partial;

    for (int s = 0; s < n_groups; ++s) {
      std::vector<double> q(m);
      double v = start_dist(rng);
      for (std::size_t i = 0; i < m; ++i) {
        v += gap_dist(rng);
        q[i] = v;
      }
      inst.quantile_values.push_back(std::move(q));
    }
    const double lo = inst.min_value();
    const double hi = inst.max_value();
    inst.alpha = lo - 0.2 + (hi - lo + 0.4) * unit(rng);
    const auto k = static_cast<std::size_t>(
        std::floor(unit(rng) * (static_cast<double>(m) + 1.0)));
    inst.p = static_cast<double>(std::min(k, m)) / static_cast<double>(m);
    inst.validate();
    battery.push_back(std::move(inst));
  }
  return battery;
}

}  // namespace dptails
