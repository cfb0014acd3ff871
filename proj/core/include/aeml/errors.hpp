#pragma once

#include <stdexcept>
#include <string>

namespace aeml {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension/shape mismatch between a field and the grid it is applied to.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Medium with non-positive density or wavespeed.
class InvalidMediumError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf detected during time integration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_ = -1;
};

/// Violation of the trajectory-store put/get contract.
class StorageContractError : public Error {
 public:
  using Error::Error;
};

/// hessian_vector invoked before the gradient populated the forward store.
class OrderingError : public StorageContractError {
 public:
  using StorageContractError::StorageContractError;
};

/// Iterative solver failed to converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Bad training/dataset input (NaN records, length mismatch, empty set).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary stream or file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace aeml
