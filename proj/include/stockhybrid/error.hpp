#pragma once

#include <stdexcept>
#include <string>

namespace stockhybrid {

// Mirrors the SHY_E_* codes of the C API one-to-one.
enum class ErrorCode {
  ok = 0,
  invalid_argument = 1,
  domain = 2,
  missing_data = 3,
  out_of_range = 4,
  schema = 5,
  config = 6,
  insufficient_data = 7,
  not_converged = 8,
  unsupported = 9,
  io = 10,
  parse = 11,
  empty_report = 12,
  internal = 13,
};

const char* to_string(ErrorCode code);

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

}  // namespace stockhybrid
