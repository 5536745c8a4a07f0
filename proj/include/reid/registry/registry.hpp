#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reid/registry/blob_store.hpp"
#include "reid/registry/model.hpp"

namespace reid::registry {

struct NewIndividual {
  std::string name;
};

using AssignTarget = std::variant<Id, NewIndividual>;

struct BoxInput {
  Rect rect;
  int subgroup_index = 1;
};

struct RegistryOptions {
  std::filesystem::path database = ":memory:";  // SQLite file
  std::filesystem::path blob_dir;               // empty: photo uploads disabled
  const seek::Schema* schema = &seek::Schema::builtin();
};

/// Sighting registry. State lives in memory and is written through to a
/// single SQLite file; every mutation is one transaction that also appends
/// to the audit log, and the log alone is enough to rebuild the state.
///
/// Thread-safe. Mutations taking an `expected_version` fail with
/// VersionConflict when the record changed since the caller read it.
class Registry {
 public:
  explicit Registry(RegistryOptions opts = {});
  ~Registry();
  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  const seek::Schema& schema() const noexcept { return *schema_; }
  const BlobStore* blobs() const noexcept { return blobs_.get(); }

  std::int64_t version() const;
  /// Changes whenever the confirmed gallery (assignments, or codes and
  /// contours of assigned sightings) changes.
  std::uint64_t gallery_revision() const;

  RegistryData data() const;
  std::vector<AuditEntry> audit(std::int64_t after_seq = 0) const;
  std::vector<AuditEntry> audit_for(std::string_view subject_kind, Id subject_id) const;

  GroupSighting group(Id id) const;
  std::vector<GroupSighting> groups() const;
  std::optional<Id> group_for_event(const std::string& event_ref) const;
  Photo photo(Id id) const;
  IndividualSighting sighting(Id id) const;
  std::vector<IndividualSighting> sightings_of(Id group) const;
  Individual individual(Id id) const;
  std::vector<Individual> individuals() const;

  GroupSighting create_group_sighting(const ingest::IngestEvent& event, const std::string& actor);

  Photo add_photo(Id group, std::string_view bytes, const std::string& filename, const std::string& actor,
                  std::optional<std::int64_t> expected_group_version = {});

  /// Replaces the photo's box set.
  Photo add_boxes(Id photo, const std::vector<BoxInput>& boxes, const std::string& actor,
                  std::optional<std::int64_t> expected_photo_version = {});

  /// One sighting per distinct subgroup index in the group. Idempotent.
  std::vector<IndividualSighting> derive_individual_sightings(Id group, const std::string& actor);

  IndividualSighting set_seek_code(Id sighting, const seek::SeekCode& code, const std::string& actor,
                                   std::optional<std::int64_t> expected_version = {});

  /// Contours must reference an original photo of the sighting's group.
  IndividualSighting add_contour(Id sighting, const ContourRecord& contour, const std::string& actor,
                                 std::optional<std::int64_t> expected_version = {});

  Individual assign_to_individual(Id sighting, const AssignTarget& target, const std::string& actor,
                                  std::optional<std::int64_t> expected_version = {});

  /// Moves an assigned sighting to another (or a new) individual.
  Individual reassign(Id sighting, const AssignTarget& target, const std::string& actor,
                      std::optional<std::int64_t> expected_version = {});

  /// Loads a complete state into an empty registry.
  void import_data(const RegistryData& data, const std::string& actor);

  /// Re-applies an audit log to an empty registry.
  void replay(const std::vector<AuditEntry>& log);

 private:
  struct Pending {
    std::string op;
    nlohmann::json payload;
  };
  struct Store;

  void commit(std::vector<Pending> ops, const std::string& actor);
  void ensure_empty() const;

  const seek::Schema* schema_;
  std::unique_ptr<BlobStore> blobs_;
  std::unique_ptr<Store> store_;
  mutable std::mutex mutex_;
  RegistryData data_;
  std::uint64_t gallery_revision_ = 0;
};

}  // namespace reid::registry
