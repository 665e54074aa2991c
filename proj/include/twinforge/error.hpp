#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twinforge {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a formula or operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Full-order solver failure (instability, NaN, invariant violation).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double time_s)
      : Error(what + " at t=" + std::to_string(time_s) + " s"), time_s_(time_s) {}
  double time() const noexcept { return time_s_; }

 private:
  double time_s_;
};

class ModelCorruptError : public Error {
 public:
  using Error::Error;
};

class RolloutDivergedError : public Error {
 public:
  RolloutDivergedError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Malformed or incompatible file contents.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace twinforge
