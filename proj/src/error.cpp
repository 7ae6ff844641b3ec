#include "gbm/error.hpp"

namespace gbm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotNifti: return "NotNifti";
    case ErrorKind::kUnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorKind::kTruncatedFile: return "TruncatedFile";
    case ErrorKind::kDimensionError: return "DimensionError";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kGeometryMismatch: return "GeometryMismatch";
    case ErrorKind::kBadThreshold: return "BadThreshold";
    case ErrorKind::kBadLabel: return "BadLabel";
    case ErrorKind::kBadProbability: return "BadProbability";
    case ErrorKind::kBadArgument: return "BadArgument";
    case ErrorKind::kNoBrainVoxels: return "NoBrainVoxels";
    case ErrorKind::kZeroVariance: return "ZeroVariance";
    case ErrorKind::kBadAngle: return "BadAngle";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kRegionMismatch: return "RegionMismatch";
    case ErrorKind::kTooFewRaters: return "TooFewRaters";
    case ErrorKind::kDegenerateInput: return "DegenerateInput";
    case ErrorKind::kNoMatchedCases: return "NoMatchedCases";
    case ErrorKind::kUnreadableVolume: return "UnreadableVolume";
    case ErrorKind::kBadCsv: return "BadCsv";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace gbm
