#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bibc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside its documented domain (sizes, signs, ranges).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Matrix argument lacking a required structural property
/// (Hermitian, positive definite).
class MatrixError : public Error {
 public:
  using Error::Error;
};

/// Value outside the range of a function being inverted.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Raw agent action that cannot be applied (non-finite, wrong length).
class ActionError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A tag's energy-harvesting requirement cannot be met.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::size_t tag, const std::string& what)
      : Error("tag " + std::to_string(tag) + ": " + what), tag_(tag) {}
  std::size_t tag() const noexcept { return tag_; }

 private:
  std::size_t tag_;
};

/// Metrics files that cannot be compared with each other.
class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace bibc
