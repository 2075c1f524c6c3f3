#include "postedit/error.hpp"

namespace postedit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::InfeasibleBalance: return "InfeasibleBalance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::MissingSegment: return "MissingSegment";
    case ErrorCode::OutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NonMonotonicSeq: return "NonMonotonicSeq";
    case ErrorCode::MalformedStream: return "MalformedStream";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
    case ErrorCode::NoMatchedPairs: return "NoMatchedPairs";
    case ErrorCode::NoUCPs: return "NoUCPs";
    case ErrorCode::UnfinalizedSession: return "UnfinalizedSession";
    case ErrorCode::MissingReference: return "MissingReference";
    case ErrorCode::ZeroTime: return "ZeroTime";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotAssigned: return "NotAssigned";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::SeqGap: return "SeqGap";
    case ErrorCode::LeaseLost: return "LeaseLost";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace postedit
