#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcount {

/// A model parameter violates the family's validity constraints.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Observed data incompatible with a model (e.g. a count outside the support).
class DataError : public std::runtime_error {
public:
  DataError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  explicit DataError(const std::string& what)
      : std::runtime_error(what), index_(0) {}

  /// 1-based time index / row of the offending observation (0 if unknown).
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// Every particle carries zero weight: the data are (numerically) impossible
/// under the current parameters.
class LikelihoodUnderflow : public std::runtime_error {
public:
  LikelihoodUnderflow(const std::string& what, std::size_t time)
      : std::runtime_error(what), time_(time) {}

  std::size_t time() const noexcept { return time_; }

private:
  std::size_t time_;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcount
