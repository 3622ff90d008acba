#pragma once

#include <stdexcept>
#include <string>

namespace chl {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kIo = 3,
  kFormat = 4,
  kNumeric = 5,
  kInternal = 6,
};

// Every failure raised by the library carries one of the codes above so the
// C boundary can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

[[noreturn]] inline void throw_dimension(const std::string& operand,
                                         const std::string& detail) {
  throw Error(ErrorCode::kDimensionMismatch,
              "dimension mismatch in '" + operand + "': " + detail);
}

[[noreturn]] inline void throw_io(const std::string& what) {
  throw Error(ErrorCode::kIo, what);
}

[[noreturn]] inline void throw_format(const std::string& what) {
  throw Error(ErrorCode::kFormat, what);
}

[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorCode::kNumeric, what);
}

}  // namespace chl
