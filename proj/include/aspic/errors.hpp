#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aspic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (non-positive temperature, non-finite cost, unnormalized weights, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent shapes or sizes between the inputs of an operation.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-finite iterate, line search did not bracket, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Simulation diverged: a state component left the admissible range.
class RolloutError : public NumericalError {
 public:
  RolloutError(const std::string& what, std::size_t step) : NumericalError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A rollout inside a batch failed; carries the offending rollout index.
class BatchError : public Error {
 public:
  BatchError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace aspic
