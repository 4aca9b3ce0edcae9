#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bnn {

/// Failure categories. The CLI maps each category onto a distinct exit code.
enum class ErrorCode {
  Io,
  Parse,
  Validation,
  UnsupportedVersion,
  LengthMismatch,
  NonBinaryValue,
  ShapeMismatch,
  OddSpatialDim,
  ConfigNotApplicable,
  BadRange,
  IncompleteTable,
  ModelHashMismatch,
  LabelOutOfRange,
  InvalidArgument,
  AlreadyExists,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace bnn
