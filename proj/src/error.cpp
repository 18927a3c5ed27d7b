#include "gr/error.hpp"

namespace gr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kNoForwardPass: return "no forward pass";
    case ErrorCode::kUnknownLayer: return "unknown layer";
    case ErrorCode::kInvalidArchitecture: return "invalid architecture";
    case ErrorCode::kEmptyDataset: return "empty dataset";
    case ErrorCode::kInsufficientClass: return "insufficient class samples";
    case ErrorCode::kAllFiltered: return "all neurons filtered";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated input";
    case ErrorCode::kCountMismatch: return "count mismatch";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kConfig: return "config error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace gr
