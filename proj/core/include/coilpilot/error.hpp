#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coilpilot {

enum class ErrorCode {
  kInvalidSpec,
  kOutOfRange,
  kBelowFloor,
  kInvalidLengths,
  kDuplicatePoint,
  kDoubleLoad,
  kNotCoupled,
  kSaturated,
  kNonMonotoneData,
  kSchemaMismatch,
  kConfig,
  kProtocol,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All recoverable library failures are reported through this type. The
// code is stable and mirrors the error names used in the wire protocol.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace coilpilot
