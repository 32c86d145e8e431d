#ifndef CAM_ERROR_HPP_
#define CAM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cam {

enum class ErrorCode {
  kInvalidArgument,
  kConfigError,
  // data errors
  kEmptyClass,
  kDimMismatch,
  kLabelOutOfRange,
  kInsufficientSamples,
  kFormatError,
  kEmptyFile,
  // numerical errors
  kNotSymmetric,
  kNonPositiveDiagonal,
  kCholeskyFailure,
  kFactorizationMissing,
  kMissingGaussians,
  kTooFewPrototypes,
  kNonFiniteLoss,
};

const char* error_code_name(ErrorCode code);

/// Process exit code contract: 0 success, 1 usage/config, 2 data, 3 numerical.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::kCholeskyFailure: return "CholeskyFailure";
    case ErrorCode::kFactorizationMissing: return "FactorizationMissing";
    case ErrorCode::kMissingGaussians: return "MissingGaussians";
    case ErrorCode::kTooFewPrototypes: return "TooFewPrototypes";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
  }
  return "UnknownError";
}

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfigError:
      return 1;
    case ErrorCode::kEmptyClass:
    case ErrorCode::kDimMismatch:
    case ErrorCode::kLabelOutOfRange:
    case ErrorCode::kInsufficientSamples:
    case ErrorCode::kFormatError:
    case ErrorCode::kEmptyFile:
      return 2;
    default:
      return 3;
  }
}

}  // namespace cam

#endif  // CAM_ERROR_HPP_
