#include "evtrack/error.hpp"

namespace evtrack {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptyEntitySet: return "EmptyEntitySet";
    case ErrorCode::NegativeGap: return "NegativeGap";
    case ErrorCode::InvalidHitCount: return "InvalidHitCount";
    case ErrorCode::DuplicatePost: return "DuplicatePost";
    case ErrorCode::UnknownPost: return "UnknownPost";
    case ErrorCode::StaleTimestamp: return "StaleTimestamp";
    case ErrorCode::FutureQuery: return "FutureQuery";
    case ErrorCode::NotCore: return "NotCore";
    case ErrorCode::InconsistentDelta: return "InconsistentDelta";
    case ErrorCode::InconsistentState: return "InconsistentState";
    case ErrorCode::EmptyEvent: return "EmptyEvent";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace evtrack
