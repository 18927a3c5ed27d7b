#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gr {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kNoForwardPass,
  kUnknownLayer,
  kInvalidArchitecture,
  kEmptyDataset,
  kInsufficientClass,
  kAllFiltered,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kCountMismatch,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as this exception; `code()` lets
/// callers and tests distinguish failure kinds without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace gr
