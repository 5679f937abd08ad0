#pragma once

#include <stdexcept>
#include <string>

namespace ifan {

// Contract and validation failures. The CLI maps these onto exit code 1.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

class BoundsError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ManifestError : public ContractError {
 public:
  using ContractError::ContractError;
};

class CompatibilityError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Numerical breakdown during training (non-finite loss or tensor).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system and decoding failures. The CLI maps these onto exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace ifan
