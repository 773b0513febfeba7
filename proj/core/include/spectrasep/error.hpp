#pragma once

#include <stdexcept>
#include <string>

namespace spectrasep {

// Base of every exception thrown by the library. The CLI maps
// ValidationError subclasses to exit code 2 and everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input rejected before any computation: malformed file, bad schema,
// violated precondition on user-supplied data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class GeometryError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AnnotationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IngestionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Numerical or statistical precondition failure inside an algorithm
// (single-class labels, empty mask, undefined test statistic, ...).
class ComputationError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectrasep
