#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ini {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Raised by gradient requests on outputs that carry no computation record.
class DetachedError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// A vector norm fell below the documented epsilon. `which()` names the
/// argument that collapsed.
class DegenerateNormError : public Error {
 public:
  DegenerateNormError(std::string which, double norm);
  const std::string& which() const noexcept { return which_; }
  double norm() const noexcept { return norm_; }

 private:
  std::string which_;
  double norm_;
};

class BudgetExceededError : public Error {
 public:
  BudgetExceededError(std::size_t budget, std::size_t spent, std::size_t requested);
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ArchitectureMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Dataset file violates its schema; the message carries the row or byte
/// offset of the first violation.
class SchemaError : public FormatError {
 public:
  using FormatError::FormatError;
};

class SeparationError : public Error {
 public:
  using Error::Error;
};

class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t iteration, std::string loss_name);
  std::size_t iteration() const noexcept { return iteration_; }
  const std::string& loss_name() const noexcept { return loss_name_; }

 private:
  std::size_t iteration_;
  std::string loss_name_;
};

class ThresholdViolationError : public Error {
 public:
  ThresholdViolationError(double benign_accuracy, double threshold);
  double benign_accuracy() const noexcept { return benign_accuracy_; }
  double threshold() const noexcept { return threshold_; }

 private:
  double benign_accuracy_;
  double threshold_;
};

/// Pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ini
