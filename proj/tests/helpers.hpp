#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dptails/grouped.hpp"

namespace testutil {

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n,
                                         double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline dptails::GroupedScores random_grouped(std::mt19937_64& rng,
                                             std::size_t groups,
                                             std::size_t per_group,
                                             double lo = -2.0, double hi = 2.0) {
  std::map<dptails::GroupId, std::vector<double>> values;
  for (std::size_t g = 0; g < groups; ++g) {
    values["g" + std::to_string(g)] = random_values(rng, per_group, lo, hi);
  }
  return dptails::GroupedScores::from_values(std::move(values));
}

}  // namespace testutil
