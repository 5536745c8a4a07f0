#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reid {

enum class ErrorCode {
  // seek
  MalformedCode,
  UnknownSymbol,
  SchemaMismatch,
  EmptyInput,
  // contour
  DegenerateContour,
  BadScale,
  // match
  EmptyGallery,
  IndexTooSmall,
  // registry
  NotFound,
  DuplicateEvent,
  DuplicatePhoto,
  ValidationError,
  OutOfBounds,
  SightingResolved,
  NoBoxes,
  NotCoded,
  AlreadyAssigned,
  UnknownIndividual,
  VersionConflict,
  StorageFault,
  // ingest
  FeedUnreachable,
  MalformedEvent,
  // service
  Unauthorized,
  Forbidden,
  // eval
  InsufficientData,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every recoverable failure in the library. The code is
/// stable and is what the HTTP layer and the CLI map to statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reid
