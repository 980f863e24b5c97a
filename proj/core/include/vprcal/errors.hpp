#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vprcal {

enum class ErrorCode {
  kNearPiRotation,
  kDuplicateKeyframe,
  kDimensionMismatch,
  kUnknownKeyframe,
  kEmptyStore,
  kUnknownNode,
  kNonChainOdometry,
  kNonSpdInformation,
  kMalformedLine,
  kMissingVertex,
  kSingularNormalEquations,
  kInputLengthMismatch,
  kIoFailure,
  kSchemaViolation,
  kDegenerateDistance,
  kRejectedTupleInTrainingSet,
  kMissingDescriptor,
  kInvalidConfig,
  kEmptyThresholds,
  kEmptyTuples,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code lets
/// callers (and the CLI exit-code mapping) branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the text parsers; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line_number, const std::string& message);

  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::size_t line_number_;
};

}  // namespace vprcal
