#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace postedit {

enum class ErrorCode {
  // corpus
  EmptyDocument,
  InfeasibleBalance,
  InvalidArgument,
  // metrics
  LengthMismatch,
  EmptyReference,
  MissingSegment,
  OutOfRangeScore,
  MalformedInput,
  // experiment
  CountMismatch,
  // session
  OutOfBounds,
  NonMonotonicSeq,
  MalformedStream,
  // annotation
  UnknownType,
  DegenerateMarginals,
  NoMatchedPairs,
  NoUCPs,
  // analytics
  UnfinalizedSession,
  MissingReference,
  ZeroTime,
  ZeroDenominator,
  // service
  AlignmentMismatch,
  DuplicateId,
  NotFound,
  NotAssigned,
  OutOfRange,
  SeqGap,
  LeaseLost,
  ValidationFailed,
  InvalidState,
  Unauthorized,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so callers
// (the HTTP layer in particular) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace postedit
