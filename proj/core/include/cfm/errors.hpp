#pragma once

#include <stdexcept>
#include <string>

namespace cfm {

//! Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

//! Operand dimensions do not match an operator or space contract.
//! The message names both shapes involved.
class DimensionError : public Error {
 public:
  using Error::Error;
};

//! Invalid argument value (negative threshold, out-of-range index, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

//! A dense numerical routine failed (SVD did not converge, singular system).
class NumericalError : public Error {
 public:
  using Error::Error;
};

//! File / serialization problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfm
