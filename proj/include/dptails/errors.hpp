#pragma once

#include <stdexcept>
#include <string>

namespace dptails {

// Invalid parameters, schema problems, unreadable files. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data that violates a contract: empty groups, unknown group labels,
// non-finite samples, version mismatches. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dptails
