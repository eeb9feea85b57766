#include "guicheck/error.hpp"

namespace guicheck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownOp: return "UnknownOp";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::InvalidMetadata: return "InvalidMetadata";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::SessionDead: return "SessionDead";
    case ErrorCode::StaleNode: return "StaleNode";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::TooFew: return "TooFew";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ReasonerError: return "ReasonerError";
    case ErrorCode::StaleWorkspace: return "StaleWorkspace";
    case ErrorCode::LaunchFailed: return "LaunchFailed";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace guicheck
