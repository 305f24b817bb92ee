#pragma once

#include <stdexcept>
#include <string>

namespace ockl {

// Every failure raised by the library carries a short machine-readable code
// ("invalid_argument", "missing_entry", "protocol_error", ...) next to the
// human-readable message. The CLI prints both as a JSON error object.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const char* code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ockl
