#pragma once

#include <stdexcept>
#include <string>

namespace pcelqr {

/// Base class of everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix shapes or index ranges are inconsistent.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Input data violates a documented contract (non-PSD weight, bad scenario
/// field, ...). Messages name the offending field or matrix.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// An algorithm failed at run time: non-convergent iteration, non-PD
/// innovation matrix, spectral radius >= 1, defective eigenvector matrix.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

/// A file could not be read or is not syntactically valid.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace pcelqr
