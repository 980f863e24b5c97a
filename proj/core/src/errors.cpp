#include "vprcal/errors.hpp"

namespace vprcal {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNearPiRotation: return "NearPiRotation";
    case ErrorCode::kDuplicateKeyframe: return "DuplicateKeyframe";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownKeyframe: return "UnknownKeyframe";
    case ErrorCode::kEmptyStore: return "EmptyStore";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kNonChainOdometry: return "NonChainOdometry";
    case ErrorCode::kNonSpdInformation: return "NonSpdInformation";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingVertex: return "MissingVertex";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kInputLengthMismatch: return "InputLengthMismatch";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDegenerateDistance: return "DegenerateDistance";
    case ErrorCode::kRejectedTupleInTrainingSet: return "RejectedTupleInTrainingSet";
    case ErrorCode::kMissingDescriptor: return "MissingDescriptor";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyThresholds: return "EmptyThresholds";
    case ErrorCode::kEmptyTuples: return "EmptyTuples";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::size_t line_number, const std::string& message)
    : Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_number) + ": " + message),
      line_number_(line_number) {}

}  // namespace vprcal
