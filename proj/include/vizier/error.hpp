#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vizier {

// Stable machine-readable codes; the service layer exposes them verbatim.
enum class ErrorCode {
  Syntax,
  MissingHost,
  UnknownStatement,
  DuplicateColumn,
  UnknownColumn,
  UnknownRowId,
  UnknownPage,
  UnresolvedRef,
  Io,
  EmptyTarget,
  InvalidArgument,
  PositionalNotCompilable,
  UnsupportedPattern,
  NoCandidate,
  DuplicateBranchName,
  UnknownBranch,
  ReplayMismatch,
  StaleSuggestion,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vizier
