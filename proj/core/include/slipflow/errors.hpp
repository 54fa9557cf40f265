#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slipflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition on user-supplied parameters.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path + ": " + what), key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

/// A caller broke an operator contract (e.g. ghosts not filled).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (e.g. negative density).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf detected in the state.
class NumericalBlowup : public Error {
 public:
  explicit NumericalBlowup(const std::string& what, std::int64_t step = -1)
      : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Density fell below the negative clip tolerance.
class PositivityError : public NumericalBlowup {
 public:
  using NumericalBlowup::NumericalBlowup;
};

/// The stable time step fell below dt_min.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// Right-hand side of a divergence problem has nonzero mean.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or mismatched checkpoint file.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace slipflow
