#include "reid/error.hpp"

namespace reid {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedCode: return "MalformedCode";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateContour: return "DegenerateContour";
    case ErrorCode::BadScale: return "BadScale";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::IndexTooSmall: return "IndexTooSmall";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DuplicateEvent: return "DuplicateEvent";
    case ErrorCode::DuplicatePhoto: return "DuplicatePhoto";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::SightingResolved: return "SightingResolved";
    case ErrorCode::NoBoxes: return "NoBoxes";
    case ErrorCode::NotCoded: return "NotCoded";
    case ErrorCode::AlreadyAssigned: return "AlreadyAssigned";
    case ErrorCode::UnknownIndividual: return "UnknownIndividual";
    case ErrorCode::VersionConflict: return "VersionConflict";
    case ErrorCode::StorageFault: return "StorageFault";
    case ErrorCode::FeedUnreachable: return "FeedUnreachable";
    case ErrorCode::MalformedEvent: return "MalformedEvent";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::InsufficientData: return "InsufficientData";
  }
  return "Unknown";
}

}  // namespace reid
