#pragma once

#include <stdexcept>
#include <string>

namespace ntfa {

/// A caller violated a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Tensor shapes do not line up for the requested operation.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A file on disk is malformed, truncated, or missing.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced NaN or Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ntfa
