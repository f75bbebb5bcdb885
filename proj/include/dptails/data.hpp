#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dptails/csv.hpp"
#include "dptails/errors.hpp"
#include "dptails/grouped.hpp"
#include "dptails/rng.hpp"

namespace dptails {

struct DataRow {
  std::vector<double> features;
  GroupId group;
  std::optional<double> target;
};

struct Dataset {
  std::vector<DataRow> rows;
  std::size_t feature_dim = 0;

  std::vector<GroupId> group_set() const {
    std::set<GroupId> groups;
    for (const auto& r : rows) groups.insert(r.group);
    return {groups.begin(), groups.end()};
  }

  void validate() const {
    if (rows.empty()) throw DataError("dataset: no rows");
    for (const auto& r : rows) {
      if (r.features.size() != feature_dim) {
        throw DataError("dataset: inconsistent feature dimension");
      }
    }
  }
};

// The synthetic model: X ~ N(0, I_3), S = 1{x_1 >= 0},
// Y = 3(x_1 + x_2 + x_3 + S) + eps with eps ~ N(0, noise_sd^2).
inline Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                                  double noise_sd = 1.0) {
  if (n < 1) throw ConfigError("generate_synthetic: n must be >= 1");
  auto rng = substream(seed, "synthetic");
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.feature_dim = 3;
  ds.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = normal(rng);
    const double x2 = normal(rng);
    const double x3 = normal(rng);
    const double s = x1 < 0.0 ? 0.0 : 1.0;
    const double eps = noise_sd > 0.0 ? noise_sd * normal(rng) : 0.0;
    DataRow row;
    row.features = {x1, x2, x3};
    row.group = s == 0.0 ? "0" : "1";
    row.target = 3.0 * (x1 + x2 + x3 + s) + eps;
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

// The regression function of the synthetic model, for fixtures that bypass
// the base learner.
inline double synthetic_regression(const DataRow& row) {
  const double s = row.group == "1" ? 1.0 : 0.0;
  return 3.0 * (row.features[0] + row.features[1] + row.features[2] + s);
}

struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string group_column;
  std::optional<std::string> target_column;
};

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  CsvTable table = read_csv(path);
  std::vector<std::size_t> feature_idx;
  for (const auto& name : schema.feature_columns) {
    feature_idx.push_back(table.column_index(name));
  }
  const std::size_t group_idx = table.column_index(schema.group_column);
  std::optional<std::size_t> target_idx;
  if (schema.target_column) {
    target_idx = table.column_index(*schema.target_column);
  }

  Dataset ds;
  ds.feature_dim = feature_idx.size();
  ds.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    DataRow row;
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      row.features.push_back(parse_double(fields[feature_idx[j]], r + 1,
                                          schema.feature_columns[j]));
    }
    row.group = fields[group_idx];
    if (target_idx) {
      row.target =
          parse_double(fields[*target_idx], r + 1, *schema.target_column);
    }
    ds.rows.push_back(std::move(row));
  }
  if (ds.rows.empty()) throw DataError("csv: '" + path + "' has no data rows");
  return ds;
}

// Disjoint random split into (train, calibration, test). Fractions must be
// positive and sum to 1; every part must contain every group.
inline std::array<Dataset, 3> three_way_split(const Dataset& ds,
                                              std::array<double, 3> fractions,
                                              std::uint64_t seed) {
  ds.validate();
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) {
      throw ConfigError("three_way_split: fractions must be positive");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("three_way_split: fractions must sum to 1");
  }

  std::vector<std::size_t> idx(ds.rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto rng = substream(seed, "three-way-split");
  std::shuffle(idx.begin(), idx.end(), rng);

  const auto n = static_cast<double>(ds.rows.size());
  const auto n_train = static_cast<std::size_t>(std::round(fractions[0] * n));
  const auto n_calib = static_cast<std::size_t>(std::round(fractions[1] * n));

  std::array<Dataset, 3> parts;
  for (auto& part : parts) part.feature_dim = ds.feature_dim;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t which = i < n_train ? 0 : (i < n_train + n_calib ? 1 : 2);
    parts[which].rows.push_back(ds.rows[idx[i]]);
  }

  const auto all_groups = ds.group_set();
  for (std::size_t part = 0; part < 3; ++part) {
    const auto groups = parts[part].group_set();
    for (const auto& g : all_groups) {
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) {
        throw DataError("three_way_split: group '" + g +
                        "' missing from part " + std::to_string(part) +
                        "; re-seed or enlarge the dataset");
      }
    }
  }
  return parts;
}

// Least-squares baseline on [features, group dummies, 1]. Normal equations
// with ridge jitter 1e-10; the synthetic group indicator is a deterministic
// function of x_1, so the jitter keeps the solve well posed.
struct BaseModel {
  std::vector<double> feature_coef;
  std::map<GroupId, double> group_coef;  // first (sorted) group pinned to 0
  double intercept = 0.0;

  double predict_row(const DataRow& row) const {
    if (row.features.size() != feature_coef.size()) {
      throw DataError("predict: feature dimension mismatch");
    }
    auto it = group_coef.find(row.group);
    if (it == group_coef.end()) {
      throw DataError("predict: unknown group '" + row.group + "'");
    }
    double acc = intercept + it->second;
    for (std::size_t j = 0; j < feature_coef.size(); ++j) {
      acc += feature_coef[j] * row.features[j];
    }
    return acc;
  }
};

namespace detail {

// Gaussian elimination with partial pivoting on a dense symmetric system.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const std::size_t d = b.size();
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-13) {
      throw DataError("fit_ols: design is rank deficient");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < d; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < d; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(d, 0.0);
  for (std::size_t r = d; r > 0; --r) {
    double acc = b[r - 1];
    for (std::size_t c = r; c < d; ++c) acc -= a[r - 1][c] * x[c];
    x[r - 1] = acc / a[r - 1][r - 1];
  }
  return x;
}

}  // namespace detail

inline BaseModel fit_ols(const Dataset& train) {
  train.validate();
  const auto groups = train.group_set();
  const std::size_t n_dummies = groups.size() - 1;
  const std::size_t d = train.feature_dim + n_dummies + 1;
  if (train.rows.size() <= train.feature_dim + 2 || train.rows.size() <= d) {
    throw DataError("fit_ols: not enough rows for the design");
  }
  std::map<GroupId, std::size_t> dummy_index;
  for (std::size_t g = 1; g < groups.size(); ++g) {
    dummy_index[groups[g]] = train.feature_dim + (g - 1);
  }

  auto design_row = [&](const DataRow& row) {
    std::vector<double> x(d, 0.0);
    for (std::size_t j = 0; j < train.feature_dim; ++j) x[j] = row.features[j];
    auto it = dummy_index.find(row.group);
    if (it != dummy_index.end()) x[it->second] = 1.0;
    x[d - 1] = 1.0;
    return x;
  };

  std::vector<std::vector<double>> xtx(d, std::vector<double>(d, 0.0));
  std::vector<double> xty(d, 0.0);
  for (const auto& row : train.rows) {
    if (!row.target) throw DataError("fit_ols: training rows need targets");
    const auto x = design_row(row);
    for (std::size_t i = 0; i < d; ++i) {
      xty[i] += x[i] * *row.target;
      for (std::size_t j = i; j < d; ++j) xtx[i][j] += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    xtx[i][i] += 1e-10;
    for (std::size_t j = 0; j < i; ++j) xtx[i][j] = xtx[j][i];
  }

  const auto beta = detail::solve_linear(std::move(xtx), std::move(xty));
  BaseModel model;
  model.feature_coef.assign(beta.begin(), beta.begin() + train.feature_dim);
  model.group_coef[groups[0]] = 0.0;
  for (std::size_t g = 1; g < groups.size(); ++g) {
    model.group_coef[groups[g]] = beta[train.feature_dim + (g - 1)];
  }
  model.intercept = beta[d - 1];
  for (double c : model.feature_coef) {
    if (!std::isfinite(c)) throw DataError("fit_ols: non-finite coefficients");
  }
  return model;
}

inline GroupedScores predict(const BaseModel& model, const Dataset& ds) {
  std::map<GroupId, std::vector<double>> scores;
  for (const auto& row : ds.rows) {
    scores[row.group].push_back(model.predict_row(row));
  }
  return GroupedScores::from_values(std::move(scores));
}

// Row-aligned predictions, for error metrics against targets.
inline std::vector<double> predict_rows(const BaseModel& model,
                                        const Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.rows.size());
  for (const auto& row : ds.rows) out.push_back(model.predict_row(row));
  return out;
}

}  // namespace dptails
