#pragma once

#include <stdexcept>
#include <string>

namespace jeval {

// Contract violations on inputs: bad probabilities, malformed files, missing
// label classes, mismatched pairings. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// |J| at or below the hard floor: the correction divides by J, so the
// estimate is unidentifiable. The CLI maps this to exit code 3.
class DegenerateJError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A calibration set with no z_true=0 or no z_true=1 items; q0 or q1 has no
// estimate and every J-based correction is undefined.
class MissingClassError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyCalibrationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyTestSetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Judge scores constant on calibration, so the tuning-weight denominator is
// zero. Callers fall back to lambda = 0 (labeled-mean only) when tuning.
class ZeroJudgeVarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Comparison requested across arms whose test item ids do not align.
class UnpairedItemsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Calibration pairs fed to an estimator for a different model's test set.
class ModelMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An item with zero judge runs where at least one is required.
class EmptyRunsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Record is syntactically valid but misses required fields.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Two records share (item_id, model_id, judge_id).
class DuplicateRecordError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A calibration design's labeled-data requirement is not met.
class InsufficientCalibrationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Simulation parameters imply operating rates outside [0,1].
class InvalidRatesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed input line; message carries the origin and line number.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Free-text answer extraction found no recognizable answer statement.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Degenerate-resample redraw budget exhausted for some bootstrap replicate.
// Has the same practical meaning as DegenerateJError (exit code 3): the data
// sit too close to J = 0 for resampling to be stable.
class ResampleExhaustedError : public DegenerateJError {
 public:
  using DegenerateJError::DegenerateJError;
};

}  // namespace jeval
