#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dptails/empirical.hpp"
#include "dptails/errors.hpp"

namespace dptails {

// Sensitive-attribute label. Opaque; drawn from a finite set.
using GroupId = std::string;

// Per-group sample multisets of base predictions, with the counts N_s and
// N = sum_s N_s they induce. The empirical stand-in for the conditional laws.
class GroupedScores {
 public:
  explicit GroupedScores(std::map<GroupId, SampleSet> groups)
      : groups_(std::move(groups)) {
    if (groups_.empty()) {
      throw DataError("GroupedScores: at least one group is required");
    }
    total_ = 0;
    for (const auto& [id, samples] : groups_) total_ += samples.size();
  }

  static GroupedScores from_values(std::map<GroupId, std::vector<double>> values) {
    std::map<GroupId, SampleSet> groups;
    for (auto& [id, v] : values) {
      if (v.empty()) {
        throw DataError("GroupedScores: group '" + id + "' is empty");
      }
      groups.emplace(id, SampleSet(std::move(v)));
    }
    return GroupedScores(std::move(groups));
  }

  const std::map<GroupId, SampleSet>& groups() const { return groups_; }
  std::size_t total_size() const { return total_; }
  std::size_t group_count() const { return groups_.size(); }

  const SampleSet& at(const GroupId& id) const {
    auto it = groups_.find(id);
    if (it == groups_.end()) {
      throw DataError("GroupedScores: unknown group '" + id + "'");
    }
    return it->second;
  }

  bool contains(const GroupId& id) const { return groups_.count(id) != 0; }

  std::vector<GroupId> group_ids() const {
    std::vector<GroupId> ids;
    ids.reserve(groups_.size());
    for (const auto& [id, _] : groups_) ids.push_back(id);
    return ids;
  }

  // Estimated group proportions p_s = N_s / N.
  std::map<GroupId, double> proportions() const {
    std::map<GroupId, double> p;
    for (const auto& [id, samples] : groups_) {
      p[id] = static_cast<double>(samples.size()) / static_cast<double>(total_);
    }
    return p;
  }

 private:
  std::map<GroupId, SampleSet> groups_;
  std::size_t total_ = 0;
};

}  // namespace dptails
