#include <algorithm>
#include <set>

#include "reid/error.hpp"
#include "reid/registry/model.hpp"

namespace reid::registry {

using nlohmann::json;

std::string_view to_string(GroupStatus s) noexcept {
  switch (s) {
    case GroupStatus::Open: return "open";
    case GroupStatus::Annotated: return "annotated";
    case GroupStatus::Resolved: return "resolved";
  }
  return "open";
}

GroupStatus group_status_from_string(std::string_view s) {
  if (s == "open") return GroupStatus::Open;
  if (s == "annotated") return GroupStatus::Annotated;
  if (s == "resolved") return GroupStatus::Resolved;
  throw Error(ErrorCode::ValidationError, "unknown group status '" + std::string(s) + "'");
}

const IndividualSighting& RegistryData::sighting(Id id) const {
  auto it = sightings.find(id);
  if (it == sightings.end()) throw Error(ErrorCode::NotFound, "no individual sighting " + std::to_string(id));
  return it->second;
}

const Individual& RegistryData::individual(Id id) const {
  auto it = individuals.find(id);
  if (it == individuals.end()) throw Error(ErrorCode::UnknownIndividual, "no individual " + std::to_string(id));
  return it->second;
}

std::optional<seek::SeekCode> RegistryData::latest_code(Id id) const {
  const auto& ind = individual(id);
  for (auto it = ind.sightings.rbegin(); it != ind.sightings.rend(); ++it) {
    const auto& s = sighting(*it);
    if (s.code) return s.code;
  }
  return std::nullopt;
}

std::vector<std::string> integrity_violations(const RegistryData& d) {
  std::vector<std::string> out;
  auto bad = [&](std::string msg) { out.push_back(std::move(msg)); };
  std::set<std::string> events;
  std::set<Id> ids;
  auto claim = [&](Id id, const char* what) {
    if (id <= 0 || id >= d.next_id) bad(std::string(what) + " " + std::to_string(id) + " outside id sequence");
    if (!ids.insert(id).second) bad("id " + std::to_string(id) + " used twice");
  };

  for (const auto& [id, g] : d.groups) {
    claim(id, "group");
    if (g.id != id) bad("group key mismatch " + std::to_string(id));
    if (!events.insert(g.event_ref).second) bad("event " + g.event_ref + " linked twice");
    if (g.location.latitude < -90 || g.location.latitude > 90 || g.location.longitude < -180 ||
        g.location.longitude > 180) {
      bad("group " + std::to_string(id) + " location out of range");
    }
    for (Id p : g.photos) {
      auto it = d.photos.find(p);
      if (it == d.photos.end() || it->second.group_sighting != id) {
        bad("group " + std::to_string(id) + " lists foreign photo " + std::to_string(p));
      }
    }
  }
  for (const auto& [id, p] : d.photos) {
    claim(id, "photo");
    auto g = d.groups.find(p.group_sighting);
    if (g == d.groups.end()) {
      bad("photo " + std::to_string(id) + " is orphaned");
    } else if (std::count(g->second.photos.begin(), g->second.photos.end(), id) != 1) {
      bad("photo " + std::to_string(id) + " missing from its group");
    }
    for (const auto& b : p.boxes) {
      claim(b.id, "box");
      if (b.photo != id) bad("box " + std::to_string(b.id) + " points at another photo");
      if (b.subgroup_index < 1) bad("box " + std::to_string(b.id) + " has no subgroup");
      const auto& r = b.rect;
      if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > p.width || r.y + r.h > p.height) {
        bad("box " + std::to_string(b.id) + " outside photo bounds");
      }
    }
  }
  std::set<std::pair<Id, int>> subgroups;
  for (const auto& [id, s] : d.sightings) {
    claim(id, "sighting");
    if (!d.groups.count(s.group_sighting)) bad("sighting " + std::to_string(id) + " is orphaned");
    if (!subgroups.insert({s.group_sighting, s.subgroup_index}).second) {
      bad("two sightings for group " + std::to_string(s.group_sighting) + " subgroup " +
          std::to_string(s.subgroup_index));
    }
    if (s.individual) {
      auto it = d.individuals.find(*s.individual);
      if (it == d.individuals.end()) {
        bad("sighting " + std::to_string(id) + " assigned to missing individual");
      } else if (std::count(it->second.sightings.begin(), it->second.sightings.end(), id) != 1) {
        bad("sighting " + std::to_string(id) + " missing from its individual's history");
      }
    }
  }
  for (const auto& [id, ind] : d.individuals) {
    claim(id, "individual");
    const IndividualSighting* prev = nullptr;
    for (Id sid : ind.sightings) {
      auto it = d.sightings.find(sid);
      if (it == d.sightings.end() || it->second.individual != id) {
        bad("individual " + std::to_string(id) + " lists sighting " + std::to_string(sid) + " it does not own");
        continue;
      }
      const auto& s = it->second;
      if (prev && std::pair(prev->timestamp, prev->id) >= std::pair(s.timestamp, s.id)) {
        bad("individual " + std::to_string(id) + " history out of order");
      }
      prev = &s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const GroupSighting& g) {
  json j{{"id", g.id},
         {"event_ref", g.event_ref},
         {"timestamp", format_utc(g.timestamp)},
         {"location", {{"latitude", g.location.latitude}, {"longitude", g.location.longitude}}},
         {"reporter", g.reporter},
         {"notes", g.notes},
         {"status", to_string(g.status)},
         {"photos", g.photos},
         {"version", g.version}};
  j["group_size"] = g.group_size ? json(*g.group_size) : json(nullptr);
  return j;
}

json to_json(const BoundingBox& b) {
  return {{"id", b.id},
          {"photo_id", b.photo},
          {"x", b.rect.x},
          {"y", b.rect.y},
          {"w", b.rect.w},
          {"h", b.rect.h},
          {"subgroup_index", b.subgroup_index}};
}

json to_json(const Photo& p) {
  json boxes = json::array();
  for (const auto& b : p.boxes) boxes.push_back(to_json(b));
  return {{"id", p.id},
          {"group_sighting_id", p.group_sighting},
          {"content_hash", p.content_hash},
          {"filename", p.filename},
          {"width", p.width},
          {"height", p.height},
          {"preview_width", p.preview_width},
          {"preview_height", p.preview_height},
          {"preview_downscaled", p.preview_downscaled},
          {"boxes", boxes},
          {"version", p.version}};
}

json to_json(const ContourRecord& c) {
  json pts = json::array();
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) pts.push_back({c.points(i, 0), c.points(i, 1)});
  return {{"side", contour::to_string(c.side)}, {"asset", c.asset}, {"points", pts}};
}

json to_json(const IndividualSighting& s) {
  json contours = json::array();
  for (const auto& c : s.contours) contours.push_back(to_json(c));
  json j{{"id", s.id},
         {"group_sighting_id", s.group_sighting},
         {"subgroup_index", s.subgroup_index},
         {"timestamp", format_utc(s.timestamp)},
         {"contours", contours},
         {"version", s.version}};
  j["seek_code"] = s.code ? json(seek::format_code(*s.code)) : json(nullptr);
  j["individual_id"] = s.individual ? json(*s.individual) : json(nullptr);
  return j;
}

json to_json(const Individual& i) { return {{"id", i.id}, {"name", i.name}, {"sightings", i.sightings}}; }

json to_json(const AuditEntry& a) {
  return {{"seq", a.seq},         {"at", a.at},
          {"actor", a.actor},     {"op", a.op},
          {"subject_kind", a.subject_kind}, {"subject_id", a.subject_id},
          {"payload", a.payload}};
}

namespace {

Timestamp time_field(const json& j, const char* key) {
  auto t = parse_utc(j.at(key).get<std::string>());
  if (!t) throw Error(ErrorCode::ValidationError, std::string("bad timestamp in field ") + key);
  return *t;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("bad ") + what + " record: " + e.what());
  }
}

}  // namespace

GroupSighting group_from_json(const json& j) {
  return guarded("group sighting", [&] {
    GroupSighting g;
    g.id = j.at("id").get<Id>();
    g.event_ref = j.at("event_ref").get<std::string>();
    g.timestamp = time_field(j, "timestamp");
    g.location = {j.at("location").at("latitude").get<double>(), j.at("location").at("longitude").get<double>()};
    g.reporter = j.value("reporter", std::string{});
    g.notes = j.value("notes", std::string{});
    if (j.contains("group_size") && !j["group_size"].is_null()) g.group_size = j["group_size"].get<int>();
    g.status = group_status_from_string(j.at("status").get<std::string>());
    g.photos = j.value("photos", std::vector<Id>{});
    g.version = j.value("version", std::int64_t{1});
    return g;
  });
}

BoundingBox box_from_json(const json& j) {
  return guarded("box", [&] {
    BoundingBox b;
    b.id = j.value("id", Id{0});
    b.photo = j.value("photo_id", Id{0});
    b.rect = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
    b.subgroup_index = j.at("subgroup_index").get<int>();
    return b;
  });
}

Photo photo_from_json(const json& j) {
  return guarded("photo", [&] {
    Photo p;
    p.id = j.at("id").get<Id>();
    p.group_sighting = j.at("group_sighting_id").get<Id>();
    p.content_hash = j.at("content_hash").get<std::string>();
    p.filename = j.value("filename", std::string{});
    p.width = j.at("width").get<int>();
    p.height = j.at("height").get<int>();
    p.preview_width = j.value("preview_width", 0);
    p.preview_height = j.value("preview_height", 0);
    p.preview_downscaled = j.value("preview_downscaled", false);
    for (const auto& b : j.value("boxes", json::array())) p.boxes.push_back(box_from_json(b));
    p.version = j.value("version", std::int64_t{1});
    return p;
  });
}

ContourRecord contour_from_json(const json& j) {
  return guarded("contour", [&] {
    ContourRecord c;
    c.side = contour::side_from_string(j.at("side").get<std::string>());
    c.asset = j.value("asset", std::string{});
    const auto& pts = j.at("points");
    c.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!pts[i].is_array() || pts[i].size() != 2) {
        throw Error(ErrorCode::ValidationError, "contour point " + std::to_string(i) + " is not an [x, y] pair");
      }
      c.points(static_cast<Eigen::Index>(i), 0) = pts[i][0].get<double>();
      c.points(static_cast<Eigen::Index>(i), 1) = pts[i][1].get<double>();
    }
    return c;
  });
}

IndividualSighting sighting_from_json(const json& j, const seek::Schema& schema) {
  return guarded("individual sighting", [&] {
    IndividualSighting s;
    s.id = j.at("id").get<Id>();
    s.group_sighting = j.at("group_sighting_id").get<Id>();
    s.subgroup_index = j.at("subgroup_index").get<int>();
    s.timestamp = time_field(j, "timestamp");
    if (j.contains("seek_code") && !j["seek_code"].is_null()) {
      s.code = seek::parse_code(j["seek_code"].get<std::string>(), schema);
    }
    for (const auto& c : j.value("contours", json::array())) s.contours.push_back(contour_from_json(c));
    if (j.contains("individual_id") && !j["individual_id"].is_null()) s.individual = j["individual_id"].get<Id>();
    s.version = j.value("version", std::int64_t{1});
    return s;
  });
}

Individual individual_from_json(const json& j) {
  return guarded("individual", [&] {
    Individual i;
    i.id = j.at("id").get<Id>();
    i.name = j.value("name", std::string{});
    i.sightings = j.value("sightings", std::vector<Id>{});
    return i;
  });
}

AuditEntry audit_from_json(const json& j) {
  return guarded("audit", [&] {
    AuditEntry a;
    a.seq = j.at("seq").get<std::int64_t>();
    a.at = j.at("at").get<std::string>();
    a.actor = j.at("actor").get<std::string>();
    a.op = j.at("op").get<std::string>();
    a.subject_kind = j.at("subject_kind").get<std::string>();
    a.subject_id = j.at("subject_id").get<Id>();
    a.payload = j.at("payload");
    return a;
  });
}

json to_dump(const RegistryData& d, const std::vector<AuditEntry>& audit) {
  json j{{"format", kDumpFormat},
         {"format_version", kDumpFormatVersion},
         {"schema_version", d.schema_version},
         {"next_id", d.next_id},
         {"registry_version", d.version}};
  auto& groups = j["group_sightings"] = json::array();
  for (const auto& [id, g] : d.groups) groups.push_back(to_json(g));
  auto& photos = j["photos"] = json::array();
  for (const auto& [id, p] : d.photos) photos.push_back(to_json(p));
  auto& sightings = j["individual_sightings"] = json::array();
  for (const auto& [id, s] : d.sightings) sightings.push_back(to_json(s));
  auto& individuals = j["individuals"] = json::array();
  for (const auto& [id, i] : d.individuals) individuals.push_back(to_json(i));
  auto& log = j["audit"] = json::array();
  for (const auto& a : audit) log.push_back(to_json(a));
  return j;
}

RegistryData data_from_dump(const json& j, const seek::Schema& schema) {
  return guarded("dump", [&] {
    if (j.value("format", std::string{}) != kDumpFormat) {
      throw Error(ErrorCode::ValidationError, "not a registry dump");
    }
    if (j.value("format_version", 0) != kDumpFormatVersion) {
      throw Error(ErrorCode::ValidationError, "unsupported dump format version");
    }
    RegistryData d;
    d.schema_version = j.at("schema_version").get<std::string>();
    if (d.schema_version != schema.version()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "dump uses seek schema '" + d.schema_version + "', active is '" + schema.version() + "'");
    }
    d.next_id = j.at("next_id").get<Id>();
    d.version = j.value("registry_version", std::int64_t{0});
    for (const auto& g : j.value("group_sightings", json::array())) {
      auto v = group_from_json(g);
      d.groups.emplace(v.id, std::move(v));
    }
    for (const auto& p : j.value("photos", json::array())) {
      auto v = photo_from_json(p);
      d.photos.emplace(v.id, std::move(v));
    }
    for (const auto& s : j.value("individual_sightings", json::array())) {
      auto v = sighting_from_json(s, schema);
      d.sightings.emplace(v.id, std::move(v));
    }
    for (const auto& i : j.value("individuals", json::array())) {
      auto v = individual_from_json(i);
      d.individuals.emplace(v.id, std::move(v));
    }
    return d;
  });
}

std::vector<AuditEntry> audit_from_dump(const json& j) {
  std::vector<AuditEntry> out;
  for (const auto& a : j.value("audit", json::array())) out.push_back(audit_from_json(a));
  return out;
}

}  // namespace reid::registry
