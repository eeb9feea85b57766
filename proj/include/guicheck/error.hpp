#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guicheck {

enum class ErrorCode {
  SyntaxError,
  UnknownOp,
  MissingField,
  InvalidScript,
  InvalidMetadata,
  DanglingReference,
  SessionDead,
  StaleNode,
  NotFound,
  EmptyPool,
  TooFew,
  LengthMismatch,
  EmptyInput,
  ReasonerError,
  StaleWorkspace,
  LaunchFailed,
  IoError,
  ProtocolError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace guicheck
