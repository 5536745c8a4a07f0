#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/contour/contour.hpp"
#include "reid/ingest/event.hpp"
#include "reid/seek.hpp"
#include "reid/time.hpp"

namespace reid::registry {

/// Entity ids come from one registry-wide sequence.
using Id = std::int64_t;

enum class GroupStatus { Open, Annotated, Resolved };
std::string_view to_string(GroupStatus s) noexcept;
GroupStatus group_status_from_string(std::string_view s);

struct GroupSighting {
  Id id = 0;
  std::string event_ref;
  Timestamp timestamp{};
  ingest::GeoPoint location;
  std::string reporter;
  std::optional<int> group_size;
  std::string notes;
  GroupStatus status = GroupStatus::Open;
  std::vector<Id> photos;
  std::int64_t version = 1;

  bool operator==(const GroupSighting&) const = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Rect&) const = default;
};

struct BoundingBox {
  Id id = 0;
  Id photo = 0;
  Rect rect;
  int subgroup_index = 1;

  bool operator==(const BoundingBox&) const = default;
};

struct Photo {
  Id id = 0;
  Id group_sighting = 0;
  std::string content_hash;
  std::string filename;
  int width = 0;
  int height = 0;
  int preview_width = 0;
  int preview_height = 0;
  bool preview_downscaled = false;
  std::vector<BoundingBox> boxes;
  std::int64_t version = 1;

  bool operator==(const Photo&) const = default;
};

/// A traced ear edge. `asset` names the image it was traced on as
/// "original:<photo id>"; imported or synthetic contours may carry another
/// free-form tag.
struct ContourRecord {
  contour::Side side = contour::Side::Right;
  std::string asset;
  contour::Points<double> points;

  bool operator==(const ContourRecord& o) const {
    return side == o.side && asset == o.asset && points.rows() == o.points.rows() && points == o.points;
  }
};

struct IndividualSighting {
  Id id = 0;
  Id group_sighting = 0;
  int subgroup_index = 1;
  Timestamp timestamp{};
  std::optional<seek::SeekCode> code;
  std::vector<ContourRecord> contours;
  std::optional<Id> individual;
  std::int64_t version = 1;

  bool operator==(const IndividualSighting&) const = default;
};

struct Individual {
  Id id = 0;
  std::string name;
  std::vector<Id> sightings;  // ordered by (timestamp, id)

  bool operator==(const Individual&) const = default;
};

struct AuditEntry {
  std::int64_t seq = 0;
  std::string at;
  std::string actor;
  std::string op;
  std::string subject_kind;
  Id subject_id = 0;
  nlohmann::json payload;

  bool operator==(const AuditEntry&) const = default;
};

/// Complete registry state. Also the in-memory form of a dump.
struct RegistryData {
  std::string schema_version;
  Id next_id = 1;
  std::int64_t version = 0;  // sequence number of the last audit entry
  std::map<Id, GroupSighting> groups;
  std::map<Id, Photo> photos;
  std::map<Id, IndividualSighting> sightings;
  std::map<Id, Individual> individuals;

  bool operator==(const RegistryData&) const = default;

  const IndividualSighting& sighting(Id id) const;
  const Individual& individual(Id id) const;
  /// Code of the most recent coded sighting, if any.
  std::optional<seek::SeekCode> latest_code(Id individual) const;
};

/// Every referential-integrity problem found, empty when consistent.
std::vector<std::string> integrity_violations(const RegistryData& data);

nlohmann::json to_json(const GroupSighting& g);
nlohmann::json to_json(const Photo& p);
nlohmann::json to_json(const BoundingBox& b);
nlohmann::json to_json(const ContourRecord& c);
nlohmann::json to_json(const IndividualSighting& s);
nlohmann::json to_json(const Individual& i);
nlohmann::json to_json(const AuditEntry& a);

GroupSighting group_from_json(const nlohmann::json& j);
Photo photo_from_json(const nlohmann::json& j);
BoundingBox box_from_json(const nlohmann::json& j);
ContourRecord contour_from_json(const nlohmann::json& j);
IndividualSighting sighting_from_json(const nlohmann::json& j, const seek::Schema& schema);
Individual individual_from_json(const nlohmann::json& j);
AuditEntry audit_from_json(const nlohmann::json& j);

// Dump: {"format": "reid-registry-dump", "format_version": 1, "schema_version",
//        "next_id", "registry_version", "group_sightings": [...], "photos": [...],
//        "individual_sightings": [...], "individuals": [...], "audit": [...]}
inline constexpr const char* kDumpFormat = "reid-registry-dump";
inline constexpr int kDumpFormatVersion = 1;

nlohmann::json to_dump(const RegistryData& data, const std::vector<AuditEntry>& audit = {});
RegistryData data_from_dump(const nlohmann::json& dump, const seek::Schema& schema = seek::Schema::builtin());
std::vector<AuditEntry> audit_from_dump(const nlohmann::json& dump);

}  // namespace reid::registry
