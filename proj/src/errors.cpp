#include "taxonav/errors.hpp"

namespace taxonav {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::DanglingParent: return "DanglingParent";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::NoScoreFound: return "NoScoreFound";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::EmptyChildList: return "EmptyChildList";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::UnknownQueryId: return "UnknownQueryId";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace taxonav
