#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nlimb {

// Dimension or layout disagreement between arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or failed factorizations.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration. `key()` names the offending setting when known.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::invalid_argument(key.empty() ? what : key + ": " + what),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Precondition violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Checkpoint could not be read back.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure inside one environment instance during rollout collection.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(std::size_t design_index, const std::string& what)
      : std::runtime_error("design " + std::to_string(design_index) + ": " +
                           what),
        design_index_(design_index) {}
  std::size_t design_index() const noexcept { return design_index_; }

 private:
  std::size_t design_index_;
};

}  // namespace nlimb
