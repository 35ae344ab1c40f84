#include "fairlens/error.hpp"

namespace fairlens {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidSelection: return "InvalidSelection";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kDegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::kEmptyPositiveSet: return "EmptyPositiveSet";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kInsufficientItems: return "InsufficientItems";
    case ErrorCode::kInvalidBins: return "InvalidBins";
    case ErrorCode::kRankError: return "RankError";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kTruncationError: return "TruncationError";
    case ErrorCode::kDataError: return "DataError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kVersionError: return "VersionError";
    case ErrorCode::kChecksumError: return "ChecksumError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

ErrorClass ErrorClassOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidK:
    case ErrorCode::kInvalidBins:
    case ErrorCode::kTooSmall:
      return ErrorClass::kConfig;
    case ErrorCode::kRankError:
    case ErrorCode::kDegenerateVariance:
    case ErrorCode::kDegenerateDenominator:
    case ErrorCode::kDegenerateVector:
    case ErrorCode::kDomainError:
      return ErrorClass::kNumeric;
    default:
      return ErrorClass::kData;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace fairlens
