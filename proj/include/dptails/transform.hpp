#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dptails/empirical.hpp"
#include "dptails/errors.hpp"
#include "dptails/grouped.hpp"
#include "dptails/rng.hpp"

namespace dptails {

// (alpha, p, xi, sigma): fairness threshold, unfairness proportion,
// strict-inequality slack, jitter width. alpha = +/-inf are legal sentinels
// (no constraint / global barycenter). sigma_transform overrides the jitter
// width at transform time; unset means "same as sigma", zero disables
// transform-time jitter for deterministic deployment.
struct DpTailsParams {
  double alpha = 0.0;
  double p = 0.5;
  double xi = 1e-5;
  double sigma = 1e-6;
  std::optional<double> sigma_transform{};

  double transform_sigma() const { return sigma_transform.value_or(sigma); }

  void validate() const {
    if (std::isnan(alpha)) throw ConfigError("params: alpha must not be NaN");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("params: p must lie in [0,1]");
    if (!(xi >= 0.0)) throw ConfigError("params: xi must be nonnegative");
    if (!(sigma > 0.0)) throw ConfigError("params: sigma must be positive");
    if (sigma_transform && !(*sigma_transform >= 0.0)) {
      throw ConfigError("params: sigma_transform must be nonnegative");
    }
  }
};

// Splits every group's samples at random into a CDF half and a quantile half.
// Odd group sizes put the extra element in the CDF half.
inline std::pair<GroupedScores, GroupedScores> split_calibration(
    const GroupedScores& scores, std::uint64_t seed) {
  std::map<GroupId, std::vector<double>> cdf_half;
  std::map<GroupId, std::vector<double>> quantile_half;
  for (const auto& [id, samples] : scores.groups()) {
    const auto& v = samples.values();
    if (v.size() < 2) {
      throw DataError("split_calibration: group '" + id +
                      "' needs at least 2 samples");
    }
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto rng = substream(seed, "split:" + id);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_cdf = (v.size() + 1) / 2;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_cdf ? cdf_half : quantile_half)[id].push_back(v[idx[i]]);
    }
  }
  return {GroupedScores::from_values(std::move(cdf_half)),
          GroupedScores::from_values(std::move(quantile_half))};
}

// Frozen per-group tables plus everything needed to apply the adjusted
// quantile transform: CDFs from the jittered CDF half, quantile tables from
// the jittered quantile half, estimated proportions, params, master seed.
// Immutable after construction and safe to share across threads.
class FittedTransform {
 public:
  struct GroupTables {
    EmpiricalCDF cdf;
    QuantileTable quantile;
    double proportion;
  };

  FittedTransform(std::map<GroupId, GroupTables> tables, DpTailsParams params,
                  std::uint64_t seed)
      : tables_(std::move(tables)), params_(params), seed_(seed) {
    params_.validate();
    if (tables_.empty()) {
      throw DataError("FittedTransform: at least one group is required");
    }
    double total = 0.0;
    for (const auto& [id, t] : tables_) {
      if (!(t.proportion > 0.0)) {
        throw DataError("FittedTransform: group '" + id +
                        "' has non-positive proportion");
      }
      total += t.proportion;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw DataError("FittedTransform: group proportions must sum to 1");
    }
  }

  const DpTailsParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<GroupId, GroupTables>& tables() const { return tables_; }

  bool has_group(const GroupId& s) const { return tables_.count(s) != 0; }

  std::vector<GroupId> group_ids() const {
    std::vector<GroupId> ids;
    for (const auto& [id, _] : tables_) ids.push_back(id);
    return ids;
  }

  double proportion(const GroupId& s) const { return group(s).proportion; }

  // sum_s p_hat_s Qhat_s(t), accumulated in group-key order so the value is
  // bit-identical no matter which group asked for it.
  double average_quantile(double t) const {
    double acc = 0.0;
    for (const auto& [id, tab] : tables_) {
      acc += tab.proportion * tab.quantile(t);
    }
    return acc;
  }

  // The adjusted quantile Qhat^xi_s: min{alpha, Qhat_s(t)} on [0,p],
  // max{alpha + xi, sum_s' p_hat_s' Qhat_s'(t)} on (p,1]. p = 0 disables the
  // lower branch entirely; p = 1 never reaches the upper branch.
  double adjusted_quantile(const GroupId& s, double t) const {
    const GroupTables& tab = group(s);
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("adjusted_quantile: level must lie in [0,1]");
    }
    if (params_.p > 0.0 && t <= params_.p) {
      return std::min(params_.alpha, tab.quantile(t));
    }
    return std::max(params_.alpha + params_.xi, average_quantile(t));
  }

  // ghat^xi_{alpha,p}(x,s): jitter the score, locate its level through the
  // group's CDF table, then evaluate the adjusted quantile at that level.
  double apply(const GroupId& s, double score, std::mt19937_64& rng) const {
    const GroupTables& tab = group(s);
    if (!std::isfinite(score)) {
      throw DataError("transform: non-finite score rejected");
    }
    double z = score;
    const double st = params_.transform_sigma();
    if (st > 0.0) {
      std::uniform_real_distribution<double> noise(-st, st);
      z += noise(rng);
    }
    return adjusted_quantile(s, tab.cdf(z));
  }

  // Elementwise transform of every group, one noise substream per
  // (seed, group, element index). Element order follows the sorted input
  // samples; the result is re-sorted by SampleSet construction.
  GroupedScores transform_batch(const GroupedScores& scores,
                                std::uint64_t seed) const {
    std::map<GroupId, std::vector<double>> out;
    for (const auto& [id, samples] : scores.groups()) {
      const auto& v = samples.values();
      std::vector<double>& dst = out[id];
      dst.reserve(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto rng = substream(seed, "transform:" + id, i);
        dst.push_back(apply(id, v[i], rng));
      }
    }
    return GroupedScores::from_values(std::move(out));
  }

  // Theorem-2 regime diagnostic: true when alpha <= sum_s p_hat_s Qhat_s(p),
  // the regime where the constrained problem attains its minimum.
  bool minimum_attained() const {
    return params_.alpha <= average_quantile(params_.p);
  }

 private:
  const GroupTables& group(const GroupId& s) const {
    auto it = tables_.find(s);
    if (it == tables_.end()) {
      throw DataError("FittedTransform: unknown group '" + s + "'");
    }
    return it->second;
  }

  std::map<GroupId, GroupTables> tables_;
  DpTailsParams params_;
  std::uint64_t seed_;
};

// Fits the transform on a calibration pool: per group, split into halves,
// jitter both halves with width sigma, build the CDF table from half 0 and
// the quantile table from half 1, and record p_hat_s = N_s / N.
inline FittedTransform fit(const GroupedScores& scores,
                           const DpTailsParams& params, std::uint64_t seed) {
  params.validate();
  auto [cdf_half, quantile_half] = split_calibration(scores, seed);
  auto proportions = scores.proportions();
  std::map<GroupId, FittedTransform::GroupTables> tables;
  for (const auto& [id, _] : scores.groups()) {
    auto rng_cdf = substream(seed, "jitter-cdf:" + id);
    auto rng_q = substream(seed, "jitter-quantile:" + id);
    tables.emplace(
        id, FittedTransform::GroupTables{
                EmpiricalCDF(jitter(cdf_half.at(id), params.sigma, rng_cdf)),
                QuantileTable(jitter(quantile_half.at(id), params.sigma, rng_q)),
                proportions.at(id)});
  }
  return FittedTransform(std::move(tables), params, seed);
}

// ---------------------------------------------------------------------------
// Population-level fixtures: the exact adjusted quantiles Q*_s / Q^xi_s built
// from injected quantile functions, used by tests and the oracle.
// ---------------------------------------------------------------------------

enum class QuantileVariant { star, xi };

class PopulationAdjustedQuantile {
 public:
  PopulationAdjustedQuantile(std::vector<std::function<double(double)>> quantiles,
                             std::vector<double> proportions,
                             DpTailsParams params, QuantileVariant variant)
      : quantiles_(std::move(quantiles)),
        proportions_(std::move(proportions)),
        params_(params),
        variant_(variant) {
    if (quantiles_.empty() || quantiles_.size() != proportions_.size()) {
      throw ConfigError(
          "population_adjusted_quantile: need one proportion per group");
    }
    double total = 0.0;
    for (double p : proportions_) total += p;
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError(
          "population_adjusted_quantile: proportions must sum to 1");
    }
    params_.validate();
  }

  std::size_t group_count() const { return quantiles_.size(); }

  double average(double t) const {
    double acc = 0.0;
    for (std::size_t s = 0; s < quantiles_.size(); ++s) {
      acc += proportions_[s] * quantiles_[s](t);
    }
    return acc;
  }

  double operator()(std::size_t group, double t) const {
    if (group >= quantiles_.size()) {
      throw ConfigError("population_adjusted_quantile: group out of range");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("population_adjusted_quantile: level must lie in [0,1]");
    }
    if (params_.p > 0.0 && t <= params_.p) {
      return std::min(params_.alpha, quantiles_[group](t));
    }
    const double slack = variant_ == QuantileVariant::xi ? params_.xi : 0.0;
    return std::max(params_.alpha + slack, average(t));
  }

 private:
  std::vector<std::function<double(double)>> quantiles_;
  std::vector<double> proportions_;
  DpTailsParams params_;
  QuantileVariant variant_;
};

inline PopulationAdjustedQuantile population_adjusted_quantile(
    std::vector<std::function<double(double)>> quantiles,
    std::vector<double> proportions, const DpTailsParams& params,
    QuantileVariant variant) {
  return PopulationAdjustedQuantile(std::move(quantiles), std::move(proportions),
                                    params, variant);
}

// ---------------------------------------------------------------------------
// Versioned JSON serialization so calibrate and transform can run as separate
// invocations. Doubles round-trip value-exact; infinities use string tags.
// ---------------------------------------------------------------------------

inline constexpr int kTransformFormatVersion = 1;

namespace detail {

inline nlohmann::json real_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline double real_from_json(const nlohmann::json& j, const std::string& what) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("transform file: bad numeric tag for " + what);
  }
  if (!j.is_number()) {
    throw DataError("transform file: expected number for " + what);
  }
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json params_to_json(const DpTailsParams& p) {
  nlohmann::json j;
  j["alpha"] = detail::real_to_json(p.alpha);
  j["p"] = p.p;
  j["xi"] = p.xi;
  j["sigma"] = p.sigma;
  j["sigma_transform"] =
      p.sigma_transform ? nlohmann::json(*p.sigma_transform) : nlohmann::json();
  return j;
}

inline DpTailsParams params_from_json(const nlohmann::json& j) {
  DpTailsParams p;
  p.alpha = detail::real_from_json(j.at("alpha"), "alpha");
  p.p = j.at("p").get<double>();
  p.xi = j.at("xi").get<double>();
  p.sigma = j.at("sigma").get<double>();
  if (j.contains("sigma_transform") && !j.at("sigma_transform").is_null()) {
    p.sigma_transform = j.at("sigma_transform").get<double>();
  }
  p.validate();
  return p;
}

inline nlohmann::json to_json(const FittedTransform& fitted) {
  nlohmann::json j;
  j["format_version"] = kTransformFormatVersion;
  j["params"] = params_to_json(fitted.params());
  j["seed"] = fitted.seed();
  j["minimum_attained"] = fitted.minimum_attained();
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [id, tab] : fitted.tables()) {
    nlohmann::json g;
    g["proportion"] = tab.proportion;
    g["cdf_samples"] = tab.cdf.samples().values();
    g["quantile_samples"] = tab.quantile.samples().values();
    groups[id] = std::move(g);
  }
  j["groups"] = std::move(groups);
  return j;
}

inline FittedTransform fitted_transform_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() != kTransformFormatVersion) {
    throw DataError("transform file: format_version mismatch (expected " +
                    std::to_string(kTransformFormatVersion) + ")");
  }
  DpTailsParams params = params_from_json(j.at("params"));
  std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  std::map<GroupId, FittedTransform::GroupTables> tables;
  for (const auto& [id, g] : j.at("groups").items()) {
    tables.emplace(
        id, FittedTransform::GroupTables{
                EmpiricalCDF(SampleSet(g.at("cdf_samples").get<std::vector<double>>())),
                QuantileTable(
                    SampleSet(g.at("quantile_samples").get<std::vector<double>>())),
                g.at("proportion").get<double>()});
  }
  return FittedTransform(std::move(tables), params, seed);
}

}  // namespace dptails
