#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dptails/brent.hpp"
#include "dptails/empirical.hpp"
#include "dptails/errors.hpp"
#include "dptails/grouped.hpp"
#include "dptails/quadrature.hpp"
#include "dptails/rng.hpp"
#include "dptails/transform.hpp"

namespace dptails {

// Population risk I^alpha(p) of the optimal DP-tails transform, for injected
// per-group quantile functions:
//   sum_s p_s [ int_0^p (Q_s - min{alpha,Q_s})^2 + int_p^1 (Q_s - max{alpha,Qbar})^2 ]
// with Qbar = sum_s p_s Q_s. The integrands are piecewise smooth with kinks
// exactly where Q_s or Qbar crosses alpha, so each smooth panel is integrated
// separately.
inline double population_objective(
    const std::vector<std::function<double(double)>>& quantiles,
    const std::vector<double>& proportions, double alpha, double p,
    double tol = 1e-9) {
  if (quantiles.empty() || quantiles.size() != proportions.size()) {
    throw ConfigError("population_objective: need one proportion per group");
  }
  double total_p = 0.0;
  for (double w : proportions) total_p += w;
  if (std::abs(total_p - 1.0) > 1e-12) {
    throw ConfigError("population_objective: proportions must sum to 1");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("population_objective: p must lie in [0,1]");
  }

  auto average = [&](double x) {
    double acc = 0.0;
    for (std::size_t s = 0; s < quantiles.size(); ++s) {
      acc += proportions[s] * quantiles[s](x);
    }
    return acc;
  };

  const double panel_tol = tol / (4.0 * static_cast<double>(quantiles.size()));
  double objective = 0.0;
  for (std::size_t s = 0; s < quantiles.size(); ++s) {
    const auto& q = quantiles[s];
    double low = 0.0;
    if (p > 0.0) {
      auto integrand = [&](double x) {
        const double d = q(x) - std::min(alpha, q(x));
        return d * d;
      };
      const double cross = dual_generalized_inverse(q, alpha, 0.0, p);
      low = adaptive_simpson(integrand, 0.0, cross, panel_tol) +
            adaptive_simpson(integrand, cross, p, panel_tol);
    }
    double up = 0.0;
    if (p < 1.0) {
      auto integrand = [&](double x) {
        const double d = q(x) - std::max(alpha, average(x));
        return d * d;
      };
      const double cross = dual_generalized_inverse(average, alpha, p, 1.0);
      up = adaptive_simpson(integrand, p, cross, panel_tol) +
           adaptive_simpson(integrand, cross, 1.0, panel_tol);
    }
    objective += proportions[s] * (low + up);
  }
  return objective;
}

// The empirical objective Ihat^alpha(p): mean squared distance between the
// (jittered) base scores and their xi = 0 transform over the calibration
// pool. All tables are built once from the pooled per-group samples, so each
// score's own quantile evaluation returns the score itself and only the
// branch point moves with p. The objective is piecewise constant in p with
// breakpoints at the pooled level grid; prefix sums make each evaluation
// O(log N).
class EmpiricalPObjective {
 public:
  EmpiricalPObjective(const GroupedScores& calibration, double alpha,
                      double sigma, std::uint64_t seed)
      : alpha_(alpha) {
    struct GroupData {
      std::vector<double> z;
      double proportion;
    };
    std::map<GroupId, GroupData> data;
    const double total = static_cast<double>(calibration.total_size());
    std::vector<QuantileTable> tables;
    std::vector<double> weights;
    for (const auto& [id, samples] : calibration.groups()) {
      auto rng = substream(seed, "pobjective:" + id);
      SampleSet jittered = jitter(samples, sigma, rng);
      GroupData gd;
      gd.z = jittered.values();
      gd.proportion = static_cast<double>(samples.size()) / total;
      tables.emplace_back(jittered);
      weights.push_back(gd.proportion);
      data.emplace(id, std::move(gd));
    }

    struct Element {
      double level;
      double cost_lower;
      double cost_upper;
    };
    std::vector<Element> elements;
    elements.reserve(calibration.total_size());
    for (const auto& [id, gd] : data) {
      const std::size_t n = gd.z.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double u =
            static_cast<double>(i + 1) / static_cast<double>(n);
        const double z = gd.z[i];
        double avg = 0.0;
        for (std::size_t s = 0; s < tables.size(); ++s) {
          avg += weights[s] * tables[s](u);
        }
        const double lower = std::min(alpha, z);
        const double upper = std::max(alpha, avg);
        elements.push_back(
            {u, (z - lower) * (z - lower), (z - upper) * (z - upper)});
      }
    }
    std::sort(elements.begin(), elements.end(),
              [](const Element& a, const Element& b) { return a.level < b.level; });

    n_total_ = elements.size();
    levels_.reserve(n_total_);
    prefix_lower_.assign(n_total_ + 1, 0.0);
    suffix_upper_.assign(n_total_ + 1, 0.0);
    for (std::size_t i = 0; i < n_total_; ++i) {
      levels_.push_back(elements[i].level);
      prefix_lower_[i + 1] = prefix_lower_[i] + elements[i].cost_lower;
    }
    for (std::size_t i = n_total_; i > 0; --i) {
      suffix_upper_[i - 1] = suffix_upper_[i] + elements[i - 1].cost_upper;
    }
  }

  double alpha() const { return alpha_; }

  double operator()(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("empirical objective: p must lie in [0,1]");
    }
    if (p == 0.0) return suffix_upper_[0] / static_cast<double>(n_total_);
    const std::size_t k =
        std::upper_bound(levels_.begin(), levels_.end(), p) - levels_.begin();
    return (prefix_lower_[k] + suffix_upper_[k]) / static_cast<double>(n_total_);
  }

  // Sorted distinct levels at which the objective can change value.
  std::vector<double> breakpoints() const {
    std::vector<double> b = levels_;
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

 private:
  double alpha_;
  std::size_t n_total_ = 0;
  std::vector<double> levels_;
  std::vector<double> prefix_lower_;
  std::vector<double> suffix_upper_;
};

inline double empirical_objective(const GroupedScores& calibration,
                                  double alpha, double p, double sigma,
                                  std::uint64_t seed) {
  return EmpiricalPObjective(calibration, alpha, sigma, seed)(p);
}

enum class OptimizeMethod { grid, brent };

inline std::string to_string(OptimizeMethod m) {
  return m == OptimizeMethod::grid ? "grid" : "brent";
}

struct PObjectiveReport {
  double alpha = 0.0;
  std::vector<std::pair<double, double>> evaluations;  // (p, objective value)
  double p_hat = 0.0;
  double objective = 0.0;
  OptimizeMethod method = OptimizeMethod::grid;
  std::size_t eval_count = 0;
  bool plateau = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["method"] = dptails::to_string(method);
    j["p_hat"] = p_hat;
    j["objective"] = objective;
    j["plateau"] = plateau;
    j["eval_count"] = eval_count;
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& [p, value] : evaluations) {
      evals.push_back(nlohmann::json::array({p, value}));
    }
    j["evaluations"] = std::move(evals);
    return j;
  }
};

// Chooses the unfairness proportion p by minimizing the empirical objective.
// The grid method is exact for the piecewise-constant objective: it evaluates
// the endpoints {0,1} and the midpoints between consecutive breakpoints
// (including the stretch before the first and after the last), resolving ties
// toward the smallest p. Brent is provided for parity with the bounded-search
// variant but has no guarantee on piecewise-constant objectives.
inline PObjectiveReport optimize_p(const GroupedScores& calibration,
                                   double alpha, const DpTailsParams& params,
                                   OptimizeMethod method, std::uint64_t seed) {
  EmpiricalPObjective objective(calibration, alpha, params.sigma, seed);
  PObjectiveReport report;
  report.alpha = alpha;
  report.method = method;

  if (method == OptimizeMethod::grid) {
    std::vector<double> levels = objective.breakpoints();
    std::vector<double> candidates;
    candidates.push_back(0.0);
    double prev = 0.0;
    for (double level : levels) {
      if (level > prev) candidates.push_back(std::midpoint(prev, level));
      prev = level;
    }
    if (prev < 1.0) candidates.push_back(std::midpoint(prev, 1.0));
    candidates.push_back(1.0);

    double best_p = candidates.front();
    double best_value = objective(best_p);
    report.evaluations.push_back({best_p, best_value});
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      const double value = objective(candidates[i]);
      report.evaluations.push_back({candidates[i], value});
      if (value < best_value) {
        best_value = value;
        best_p = candidates[i];
      }
    }
    report.p_hat = best_p;
    report.objective = best_value;
  } else {
    auto traced = [&](double p) {
      const double value = objective(p);
      report.evaluations.push_back({p, value});
      return value;
    };
    BrentResult result = brent_minimize(traced, 0.0, 1.0, 1e-6, 200);
    report.p_hat = result.x;
    report.objective = result.fx;
  }

  report.eval_count = report.evaluations.size();
  std::size_t at_min = 0;
  for (const auto& [p, value] : report.evaluations) {
    if (value == report.objective) ++at_min;
  }
  report.plateau = at_min > 1;
  return report;
}

}  // namespace dptails
