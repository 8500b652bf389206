#pragma once

#include <stdexcept>
#include <string>

namespace cpdm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two grids that must share a shape do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpdm
