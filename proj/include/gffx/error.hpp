#pragma once

#include <stdexcept>
#include <string>

namespace gffx {

enum class ErrorKind {
  invalid_parameters,
  invalid_config,
  generation_failed,
  singular_operator,
  degenerate_operator,
  operator_quality,
  size_limit,
  io_error,
};

const char* to_string(ErrorKind k) noexcept;

/// Single exception type for the whole library; `kind` is what callers
/// dispatch on (the CLI maps every kind except statistical failure to exit 2).
/// Pipelines re-throw with `stage` set so failures carry their stage tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  Error(ErrorKind kind, const std::string& message, const std::string& stage)
      : std::runtime_error(stage + ": " + to_string(kind) + ": " + message),
        kind_(kind),
        message_(message),
        stage_(stage) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline const char* to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::invalid_parameters: return "invalid-parameters";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::generation_failed: return "generation-failed";
    case ErrorKind::singular_operator: return "singular-operator";
    case ErrorKind::degenerate_operator: return "degenerate-operator";
    case ErrorKind::operator_quality: return "operator-quality";
    case ErrorKind::size_limit: return "size-limit";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace gffx
