#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbm {

enum class ErrorKind {
  kNotNifti,
  kUnsupportedDatatype,
  kTruncatedFile,
  kDimensionError,
  kDimensionMismatch,
  kIoFailure,
  kGeometryMismatch,
  kBadThreshold,
  kBadLabel,
  kBadProbability,
  kBadArgument,
  kNoBrainVoxels,
  kZeroVariance,
  kBadAngle,
  kEmptyInput,
  kRegionMismatch,
  kTooFewRaters,
  kDegenerateInput,
  kNoMatchedCases,
  kUnreadableVolume,
  kBadCsv,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so
// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gbm
