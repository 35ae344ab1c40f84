#ifndef FAIRLENS_ERROR_HPP_
#define FAIRLENS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fairlens {

// Failure kinds raised by the toolkit. Each maps onto one of the CLI exit
// classes (config, data, numeric) through ErrorClassOf().
enum class ErrorCode {
  kInvalidArgument,
  kInvalidSelection,
  kEmptyGroup,
  kEmptySelection,
  kDegenerateDenominator,
  kEmptyPositiveSet,
  kShapeError,
  kInvalidK,
  kEmptyInput,
  kDegenerateVector,
  kInsufficientItems,
  kInvalidBins,
  kRankError,
  kDegenerateVariance,
  kInsufficientSamples,
  kDomainError,
  kDegenerateLabels,
  kTooSmall,
  kFormatError,
  kTruncationError,
  kDataError,
  kSchemaError,
  kVersionError,
  kChecksumError,
  kConfigError,
  kIoError,
};

enum class ErrorClass { kConfig, kData, kNumeric };

const char* ErrorCodeName(ErrorCode code);
ErrorClass ErrorClassOf(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  // Message without the code name prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fairlens

#endif  // FAIRLENS_ERROR_HPP_
