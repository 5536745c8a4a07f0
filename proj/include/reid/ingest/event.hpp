#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "reid/time.hpp"

namespace reid::ingest {

inline constexpr const char* kElephantSightingType = "elephant_sighting";

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

/// One field event as delivered by the feed.
struct IngestEvent {
  std::string external_id;
  std::string event_type = kElephantSightingType;
  Timestamp time{};
  std::optional<GeoPoint> location;
  std::string reporter;
  std::optional<int> group_size;
  std::string composition;

  bool operator==(const IngestEvent&) const = default;
};

/// Wire record -> event. Throws MalformedEvent when a required field is
/// missing or mistyped. A null or absent location is allowed here; the
/// registry rejects it when a group sighting is created.
IngestEvent event_from_json(const nlohmann::json& record);
nlohmann::json event_to_json(const IngestEvent& event);

}  // namespace reid::ingest
