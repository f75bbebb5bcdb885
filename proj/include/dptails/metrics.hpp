#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dptails/csv.hpp"
#include "dptails/empirical.hpp"
#include "dptails/errors.hpp"
#include "dptails/grouped.hpp"

namespace dptails {

inline double mse(const std::vector<double>& truth,
                  const std::vector<double>& predictions) {
  if (truth.empty() || truth.size() != predictions.size()) {
    throw DataError("mse: sequences must have equal nonzero length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predictions[i];
    acc += d * d;
  }
  return acc / static_cast<double>(truth.size());
}

// Worst pairwise KS distance across groups; the alpha -> -inf limit of the
// tail-unfairness metric.
inline double ks_unfairness(const GroupedScores& scores) {
  if (scores.group_count() < 2) {
    throw DataError("ks_unfairness: at least 2 groups required");
  }
  const auto ids = scores.group_ids();
  double worst = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      worst = std::max(worst, ks_distance(scores.at(ids[i]), scores.at(ids[j])));
    }
  }
  return worst;
}

// Tail unfairness U^alpha: worst pairwise sup-distance between group step
// CDFs restricted to [alpha, inf). The sup is exact when evaluated at alpha,
// the union sample points >= alpha, and one guard point just below the first
// such sample. alpha = -inf routes to the KS path.
inline double tail_unfairness(const GroupedScores& scores, double alpha) {
  if (scores.group_count() < 2) {
    throw DataError("tail_unfairness: at least 2 groups required");
  }
  if (std::isinf(alpha) && alpha < 0) return ks_unfairness(scores);

  std::set<double> points;
  points.insert(alpha);
  double first_above = std::numeric_limits<double>::infinity();
  for (const auto& [id, samples] : scores.groups()) {
    for (double v : samples.values()) {
      if (v >= alpha) {
        points.insert(v);
        first_above = std::min(first_above, v);
      }
    }
  }
  if (std::isfinite(first_above) && first_above > alpha) {
    points.insert(std::midpoint(alpha, first_above));
  }

  std::vector<EmpiricalCDF> cdfs;
  for (const auto& [id, samples] : scores.groups()) cdfs.emplace_back(samples);

  double worst = 0.0;
  for (double t : points) {
    for (std::size_t i = 0; i < cdfs.size(); ++i) {
      for (std::size_t j = i + 1; j < cdfs.size(); ++j) {
        worst = std::max(worst, std::abs(cdfs[i](t) - cdfs[j](t)));
      }
    }
  }
  return worst;
}

// Per-group |Fhat_s(alpha) - p|: how far each group's mass at the threshold
// sits from the target proportion.
inline std::map<GroupId, double> threshold_mass_gap(const GroupedScores& scores,
                                                    double alpha, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("threshold_mass_gap: p must lie in [0,1]");
  }
  std::map<GroupId, double> gaps;
  for (const auto& [id, samples] : scores.groups()) {
    gaps[id] = std::abs(EmpiricalCDF(samples)(alpha) - p);
  }
  return gaps;
}

struct MetricsReport {
  std::optional<double> mse{};
  double ks = 0.0;
  double tail_unfairness = 0.0;
  std::map<GroupId, double> threshold_gap;
  std::map<GroupId, std::size_t> group_sizes;
  double alpha = 0.0;
  double p = 0.0;
  double xi = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["mse"] = mse ? nlohmann::json(*mse) : nlohmann::json();
    j["ks"] = ks;
    j["tail_unfairness"] = tail_unfairness;
    j["threshold_gap"] = threshold_gap;
    j["group_sizes"] = group_sizes;
    j["alpha"] = std::isinf(alpha) ? nlohmann::json(alpha > 0 ? "+inf" : "-inf")
                                   : nlohmann::json(alpha);
    j["p"] = p;
    j["xi"] = xi;
    j["sigma"] = sigma;
    j["seed"] = seed;
    return j;
  }

  // Flat CSV row for replication aggregates; per-group columns follow the
  // sorted group order.
  std::string csv_header() const {
    std::string h = "seed,alpha,p,xi,sigma,mse,ks,tail_unfairness";
    for (const auto& [id, _] : threshold_gap) h += ",gap_" + id;
    for (const auto& [id, _] : group_sizes) h += ",n_" + id;
    return h;
  }

  std::string csv_row() const {
    std::string r = std::to_string(seed) + "," + format_double(alpha) + "," +
                    format_double(p) + "," + format_double(xi) + "," +
                    format_double(sigma) + "," +
                    (mse ? format_double(*mse) : "") + "," +
                    format_double(ks) + "," + format_double(tail_unfairness);
    for (const auto& [_, gap] : threshold_gap) r += "," + format_double(gap);
    for (const auto& [_, n] : group_sizes) r += "," + std::to_string(n);
    return r;
  }
};

// Computes every metric in one pass. Targets, when present, must align with
// the flattened per-group score order; MSE is skipped otherwise.
inline MetricsReport evaluate_metrics(
    const GroupedScores& scores, double alpha, double p, double xi,
    double sigma, std::uint64_t seed,
    const std::optional<std::pair<std::vector<double>, std::vector<double>>>&
        truth_and_predictions = std::nullopt) {
  MetricsReport report;
  report.alpha = alpha;
  report.p = p;
  report.xi = xi;
  report.sigma = sigma;
  report.seed = seed;
  report.ks = ks_unfairness(scores);
  report.tail_unfairness = dptails::tail_unfairness(scores, alpha);
  report.threshold_gap = threshold_mass_gap(scores, alpha, p);
  for (const auto& [id, samples] : scores.groups()) {
    report.group_sizes[id] = samples.size();
  }
  if (truth_and_predictions) {
    report.mse = dptails::mse(truth_and_predictions->first,
                              truth_and_predictions->second);
  }
  return report;
}

}  // namespace dptails
