#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ponte {

enum class ErrorCode {
  // prompting
  MissingCondition,
  UnexpectedCondition,
  EmptyText,
  BraceInInput,
  InvalidTemplate,
  UnknownTemplate,
  // numerics
  DimensionMismatch,
  ZeroVector,
  EmptyInput,
  LengthMismatch,
  ZeroVariance,
  KTooLarge,
  NonPositiveDistanceCount,
  DegenerateInput,
  PerplexityTooLarge,
  InvalidArgument,
  // ingestion
  MissingColumn,
  ParseError,
  Io,
  // backend
  EmptyBatch,
  BackendUnreachable,
  BackendRejected,
  ProtocolError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingCondition: return "MissingCondition";
    case ErrorCode::UnexpectedCondition: return "UnexpectedCondition";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::BraceInInput: return "BraceInInput";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NonPositiveDistanceCount: return "NonPositiveDistanceCount";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::PerplexityTooLarge: return "PerplexityTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

/// True for failures that originate in the embedding service rather than in
/// user input. The CLI maps these to exit code 3.
constexpr bool is_backend_error(ErrorCode code) {
  return code == ErrorCode::BackendUnreachable || code == ErrorCode::BackendRejected ||
         code == ErrorCode::ProtocolError;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string &message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) { throw Error(code, message); }

}  // namespace ponte
