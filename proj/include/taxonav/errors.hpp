#pragma once

#include <stdexcept>
#include <string>

namespace taxonav {

enum class ErrorCode {
  // taxonomy
  DuplicateId,
  MultipleRoots,
  NoRoot,
  DanglingParent,
  CycleDetected,
  UnknownNode,
  // scoring
  UnknownPlaceholder,
  NoScoreFound,
  TransportError,
  AuthError,
  // vectors
  ZeroVector,
  DimensionMismatch,
  MissingEmbedding,
  EmptyStore,
  // search
  EmptyChildList,
  // eval
  EmptySample,
  EmptyEvaluation,
  UnknownQueryId,
  // general
  InvalidConfig,
  InvalidInput,
  IoError,
};

const char* error_code_name(ErrorCode code);

// Base for all engine errors. Carries a machine-checkable code next to the
// human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Bad inputs: malformed files, violated preconditions, invalid configuration.
// The CLI maps these to exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failures while running: I/O, transport, scorer breakdowns.
// The CLI maps these to exit status 2.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace taxonav
