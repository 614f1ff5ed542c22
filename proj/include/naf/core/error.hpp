#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace naf {

/// Machine-readable failure category. The CLI prints it as the first token
/// of its one-line error message.
enum class ErrorKind {
  invalid_input,
  invalid_shape,
  invalid_config,
  invalid_dataset,
  decode,
  estimation_failure,
  lookup,
  io,
  usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace naf
