#include "reid/registry/registry.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <sqlite3.h>

#include "reid/contour/contour.hpp"
#include "reid/error.hpp"

namespace reid::registry {

using nlohmann::json;

namespace {

// Each entry upgrades the database by one version (PRAGMA user_version).
constexpr std::array<const char*, 2> kMigrations = {
    R"sql(
CREATE TABLE meta (
  key   TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE group_sightings (
  id        INTEGER PRIMARY KEY,
  event_ref TEXT NOT NULL UNIQUE,
  status    TEXT NOT NULL,
  version   INTEGER NOT NULL,
  body      TEXT NOT NULL
);
CREATE TABLE photos (
  id                INTEGER PRIMARY KEY,
  group_sighting_id INTEGER NOT NULL REFERENCES group_sightings(id),
  content_hash      TEXT NOT NULL,
  version           INTEGER NOT NULL,
  body              TEXT NOT NULL,
  UNIQUE (group_sighting_id, content_hash)
);
CREATE TABLE boxes (
  id             INTEGER PRIMARY KEY,
  photo_id       INTEGER NOT NULL REFERENCES photos(id) ON DELETE CASCADE,
  subgroup_index INTEGER NOT NULL CHECK (subgroup_index > 0),
  body           TEXT NOT NULL
);
CREATE TABLE individuals (
  id   INTEGER PRIMARY KEY,
  body TEXT NOT NULL
);
CREATE TABLE individual_sightings (
  id                INTEGER PRIMARY KEY,
  group_sighting_id INTEGER NOT NULL REFERENCES group_sightings(id),
  subgroup_index    INTEGER NOT NULL,
  individual_id     INTEGER REFERENCES individuals(id),
  version           INTEGER NOT NULL,
  body              TEXT NOT NULL,
  UNIQUE (group_sighting_id, subgroup_index)
);
CREATE TABLE audit_log (
  seq          INTEGER PRIMARY KEY,
  at           TEXT NOT NULL,
  actor        TEXT NOT NULL,
  op           TEXT NOT NULL,
  subject_kind TEXT NOT NULL,
  subject_id   INTEGER NOT NULL,
  payload      TEXT NOT NULL
);
)sql",
    R"sql(
CREATE INDEX audit_subject ON audit_log (subject_kind, subject_id);
CREATE INDEX boxes_photo ON boxes (photo_id);
)sql",
};

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::StorageFault, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind_null(int i) {
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  /// True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::StorageFault, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }
  void run() {
    step();
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

struct Touched {
  std::set<Id> groups;
  std::set<Id> photos;
  std::set<Id> sightings;
  std::set<Id> individuals;
  bool everything = false;
  bool gallery = false;
};

struct Subject {
  std::string kind;
  Id id = 0;
};

void insert_into_history(RegistryData& d, Individual& ind, Id sighting) {
  const auto& s = d.sightings.at(sighting);
  auto pos = std::find_if(ind.sightings.begin(), ind.sightings.end(), [&](Id other) {
    const auto& o = d.sightings.at(other);
    return std::pair(s.timestamp, s.id) < std::pair(o.timestamp, o.id);
  });
  ind.sightings.insert(pos, sighting);
}

void refresh_group_status(RegistryData& d, GroupSighting& g) {
  bool any_box = false;
  for (Id p : g.photos) any_box = any_box || !d.photos.at(p).boxes.empty();
  bool any_sighting = false;
  bool all_assigned = true;
  for (const auto& [id, s] : d.sightings) {
    if (s.group_sighting != g.id) continue;
    any_sighting = true;
    all_assigned = all_assigned && s.individual.has_value();
  }
  if (any_sighting && all_assigned) {
    g.status = GroupStatus::Resolved;
  } else {
    g.status = any_box ? GroupStatus::Annotated : GroupStatus::Open;
  }
}

void attach(RegistryData& d, IndividualSighting& s, const json& p, Touched& t) {
  Id target;
  if (p.contains("new_individual")) {
    target = d.next_id++;
    d.individuals.emplace(target, Individual{target, p["new_individual"].value("name", std::string{}), {}});
  } else {
    target = p.at("individual").get<Id>();
  }
  s.individual = target;
  insert_into_history(d, d.individuals.at(target), s.id);
  ++s.version;
  t.individuals.insert(target);
  t.sightings.insert(s.id);
  t.gallery = true;
  auto& g = d.groups.at(s.group_sighting);
  refresh_group_status(d, g);
  ++g.version;
  t.groups.insert(g.id);
}

/// The only code path that mutates registry state. Inputs were validated by
/// the caller (or come from a trusted audit log).
Subject apply_op(RegistryData& d, const std::string& op, const json& p, const seek::Schema& schema, Touched& t) {
  if (op == "create_group_sighting") {
    const auto e = ingest::event_from_json(p.at("event"));
    GroupSighting g;
    g.id = d.next_id++;
    g.event_ref = e.external_id;
    g.timestamp = e.time;
    g.location = *e.location;
    g.reporter = e.reporter;
    g.group_size = e.group_size;
    g.notes = e.composition;
    d.groups.emplace(g.id, g);
    t.groups.insert(g.id);
    return {"group_sighting", g.id};
  }
  if (op == "add_photo") {
    Photo ph;
    ph.id = d.next_id++;
    ph.group_sighting = p.at("group").get<Id>();
    ph.content_hash = p.at("content_hash").get<std::string>();
    ph.filename = p.value("filename", std::string{});
    ph.width = p.at("width").get<int>();
    ph.height = p.at("height").get<int>();
    ph.preview_width = p.value("preview_width", 0);
    ph.preview_height = p.value("preview_height", 0);
    ph.preview_downscaled = p.value("preview_downscaled", false);
    auto& g = d.groups.at(ph.group_sighting);
    g.photos.push_back(ph.id);
    ++g.version;
    d.photos.emplace(ph.id, ph);
    t.groups.insert(g.id);
    t.photos.insert(ph.id);
    return {"photo", ph.id};
  }
  if (op == "set_boxes") {
    auto& ph = d.photos.at(p.at("photo").get<Id>());
    ph.boxes.clear();
    for (const auto& jb : p.at("boxes")) {
      BoundingBox b = box_from_json(jb);
      b.id = d.next_id++;
      b.photo = ph.id;
      ph.boxes.push_back(b);
    }
    ++ph.version;
    auto& g = d.groups.at(ph.group_sighting);
    refresh_group_status(d, g);
    ++g.version;
    t.photos.insert(ph.id);
    t.groups.insert(g.id);
    return {"photo", ph.id};
  }
  if (op == "create_individual_sighting") {
    auto& g = d.groups.at(p.at("group").get<Id>());
    IndividualSighting s;
    s.id = d.next_id++;
    s.group_sighting = g.id;
    s.subgroup_index = p.at("subgroup_index").get<int>();
    s.timestamp = g.timestamp;
    d.sightings.emplace(s.id, s);
    refresh_group_status(d, g);
    ++g.version;
    t.groups.insert(g.id);
    t.sightings.insert(s.id);
    return {"individual_sighting", s.id};
  }
  if (op == "set_seek_code") {
    auto& s = d.sightings.at(p.at("sighting").get<Id>());
    s.code = seek::parse_code(p.at("code").get<std::string>(), schema);
    ++s.version;
    t.sightings.insert(s.id);
    t.gallery = t.gallery || s.individual.has_value();
    return {"individual_sighting", s.id};
  }
  if (op == "add_contour") {
    auto& s = d.sightings.at(p.at("sighting").get<Id>());
    s.contours.push_back(contour_from_json(p.at("contour")));
    ++s.version;
    t.sightings.insert(s.id);
    t.gallery = t.gallery || s.individual.has_value();
    return {"individual_sighting", s.id};
  }
  if (op == "assign") {
    auto& s = d.sightings.at(p.at("sighting").get<Id>());
    attach(d, s, p, t);
    return {"individual_sighting", s.id};
  }
  if (op == "reassign") {
    auto& s = d.sightings.at(p.at("sighting").get<Id>());
    auto& old = d.individuals.at(*s.individual);
    old.sightings.erase(std::remove(old.sightings.begin(), old.sightings.end(), s.id), old.sightings.end());
    t.individuals.insert(old.id);
    attach(d, s, p, t);
    return {"individual_sighting", s.id};
  }
  if (op == "import") {
    const auto version = d.version;
    d = data_from_dump(p.at("data"), schema);
    d.version = version;
    t.everything = true;
    t.gallery = true;
    return {"registry", 0};
  }
  throw Error(ErrorCode::StorageFault, "unknown audit op '" + op + "'");
}

void check_version(std::int64_t actual, std::optional<std::int64_t> expected, const std::string& what) {
  if (expected && *expected != actual) {
    throw Error(ErrorCode::VersionConflict, what + " is at version " + std::to_string(actual) +
                                                ", request expected " + std::to_string(*expected));
  }
}

json assign_payload(Id sighting, const AssignTarget& target) {
  json p{{"sighting", sighting}};
  if (const auto* id = std::get_if<Id>(&target)) {
    p["individual"] = *id;
  } else {
    p["new_individual"] = {{"name", std::get<NewIndividual>(target).name}};
  }
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// SQLite store

struct Registry::Store {
  sqlite3* db = nullptr;

  Store(const std::filesystem::path& path, const std::string& schema_version) {
    if (sqlite3_open(path.c_str(), &db) != SQLITE_OK) {
      std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
      sqlite3_close(db);
      throw Error(ErrorCode::StorageFault, "cannot open registry " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db, 5000);
    exec("PRAGMA foreign_keys = ON");
    if (path != ":memory:") exec("PRAGMA journal_mode = WAL");
    migrate();
    auto stored = meta("schema_version");
    if (!stored) {
      set_meta("schema_version", schema_version);
    } else if (*stored != schema_version) {
      throw Error(ErrorCode::SchemaMismatch,
                  "registry uses seek schema '" + *stored + "', active is '" + schema_version + "'");
    }
  }
  ~Store() { sqlite3_close(db); }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw Error(ErrorCode::StorageFault, "sqlite: " + msg);
    }
  }

  void migrate() {
    Stmt q(db, "PRAGMA user_version");
    q.step();
    const auto current = static_cast<std::size_t>(q.integer(0));
    if (current > kMigrations.size()) {
      throw Error(ErrorCode::StorageFault, "registry database is newer than this build");
    }
    for (std::size_t v = current; v < kMigrations.size(); ++v) {
      exec("BEGIN IMMEDIATE");
      try {
        exec(kMigrations[v]);
        exec("PRAGMA user_version = " + std::to_string(v + 1));
        exec("COMMIT");
      } catch (...) {
        exec("ROLLBACK");
        throw;
      }
    }
  }

  std::optional<std::string> meta(const std::string& key) {
    Stmt q(db, "SELECT value FROM meta WHERE key = ?");
    q.bind(1, key);
    if (!q.step()) return std::nullopt;
    return q.text(0);
  }

  void set_meta(const std::string& key, const std::string& value) {
    Stmt q(db, "INSERT INTO meta (key, value) VALUES (?, ?) ON CONFLICT(key) DO UPDATE SET value = excluded.value");
    q.bind(1, key).bind(2, value).run();
  }

  RegistryData load(const seek::Schema& schema) {
    RegistryData d;
    d.schema_version = schema.version();
    d.next_id = std::stoll(meta("next_id").value_or("1"));
    d.version = std::stoll(meta("version").value_or("0"));
    {
      Stmt q(db, "SELECT body FROM group_sightings ORDER BY id");
      while (q.step()) {
        auto g = group_from_json(json::parse(q.text(0)));
        d.groups.emplace(g.id, std::move(g));
      }
    }
    {
      Stmt q(db, "SELECT body FROM photos ORDER BY id");
      while (q.step()) {
        auto p = photo_from_json(json::parse(q.text(0)));
        d.photos.emplace(p.id, std::move(p));
      }
    }
    {
      Stmt q(db, "SELECT body FROM boxes ORDER BY id");
      while (q.step()) {
        auto b = box_from_json(json::parse(q.text(0)));
        d.photos.at(b.photo).boxes.push_back(b);
      }
    }
    {
      Stmt q(db, "SELECT body FROM individuals ORDER BY id");
      while (q.step()) {
        auto i = individual_from_json(json::parse(q.text(0)));
        d.individuals.emplace(i.id, std::move(i));
      }
    }
    {
      Stmt q(db, "SELECT body FROM individual_sightings ORDER BY id");
      while (q.step()) {
        auto s = sighting_from_json(json::parse(q.text(0)), schema);
        d.sightings.emplace(s.id, std::move(s));
      }
    }
    return d;
  }

  void persist(const RegistryData& d, const Touched& t, const std::vector<AuditEntry>& entries) {
    exec("BEGIN IMMEDIATE");
    try {
      if (t.everything) {
        exec("DELETE FROM individual_sightings; DELETE FROM boxes; DELETE FROM photos; "
             "DELETE FROM individuals; DELETE FROM group_sightings;");
      }
      auto pick = [&](const auto& all, const std::set<Id>& ids) {
        std::vector<Id> out;
        if (t.everything) {
          for (const auto& [id, v] : all) out.push_back(id);
        } else {
          out.assign(ids.begin(), ids.end());
        }
        return out;
      };

      Stmt group(db,
                 "INSERT INTO group_sightings (id, event_ref, status, version, body) VALUES (?, ?, ?, ?, ?) "
                 "ON CONFLICT(id) DO UPDATE SET status = excluded.status, version = excluded.version, "
                 "body = excluded.body");
      for (Id id : pick(d.groups, t.groups)) {
        const auto& g = d.groups.at(id);
        group.bind(1, g.id).bind(2, g.event_ref).bind(3, std::string(to_string(g.status))).bind(4, g.version);
        group.bind(5, to_json(g).dump()).run();
      }

      Stmt photo(db,
                 "INSERT INTO photos (id, group_sighting_id, content_hash, version, body) VALUES (?, ?, ?, ?, ?) "
                 "ON CONFLICT(id) DO UPDATE SET version = excluded.version, body = excluded.body");
      Stmt clear_boxes(db, "DELETE FROM boxes WHERE photo_id = ?");
      Stmt box(db, "INSERT INTO boxes (id, photo_id, subgroup_index, body) VALUES (?, ?, ?, ?)");
      for (Id id : pick(d.photos, t.photos)) {
        const auto& p = d.photos.at(id);
        json body = to_json(p);
        body.erase("boxes");
        photo.bind(1, p.id).bind(2, p.group_sighting).bind(3, p.content_hash).bind(4, p.version);
        photo.bind(5, body.dump()).run();
        clear_boxes.bind(1, p.id).run();
        for (const auto& b : p.boxes) {
          box.bind(1, b.id).bind(2, b.photo).bind(3, std::int64_t{b.subgroup_index}).bind(4, to_json(b).dump()).run();
        }
      }

      Stmt individual(db,
                      "INSERT INTO individuals (id, body) VALUES (?, ?) "
                      "ON CONFLICT(id) DO UPDATE SET body = excluded.body");
      for (Id id : pick(d.individuals, t.individuals)) {
        const auto& i = d.individuals.at(id);
        individual.bind(1, i.id).bind(2, to_json(i).dump()).run();
      }

      Stmt sighting(db,
                    "INSERT INTO individual_sightings (id, group_sighting_id, subgroup_index, individual_id, "
                    "version, body) VALUES (?, ?, ?, ?, ?, ?) ON CONFLICT(id) DO UPDATE SET "
                    "individual_id = excluded.individual_id, version = excluded.version, body = excluded.body");
      for (Id id : pick(d.sightings, t.sightings)) {
        const auto& s = d.sightings.at(id);
        sighting.bind(1, s.id).bind(2, s.group_sighting).bind(3, std::int64_t{s.subgroup_index});
        if (s.individual) {
          sighting.bind(4, *s.individual);
        } else {
          sighting.bind_null(4);
        }
        sighting.bind(5, s.version).bind(6, to_json(s).dump()).run();
      }

      Stmt audit(db,
                 "INSERT INTO audit_log (seq, at, actor, op, subject_kind, subject_id, payload) "
                 "VALUES (?, ?, ?, ?, ?, ?, ?)");
      for (const auto& e : entries) {
        audit.bind(1, e.seq).bind(2, e.at).bind(3, e.actor).bind(4, e.op).bind(5, e.subject_kind);
        audit.bind(6, e.subject_id).bind(7, e.payload.dump()).run();
      }
      set_meta("next_id", std::to_string(d.next_id));
      set_meta("version", std::to_string(d.version));
      exec("COMMIT");
    } catch (...) {
      exec("ROLLBACK");
      throw;
    }
  }

  std::vector<AuditEntry> read_audit(Stmt& q) {
    std::vector<AuditEntry> out;
    while (q.step()) {
      out.push_back({q.integer(0), q.text(1), q.text(2), q.text(3), q.text(4), q.integer(5), json::parse(q.text(6))});
    }
    return out;
  }

  std::vector<AuditEntry> audit(std::int64_t after) {
    Stmt q(db, "SELECT seq, at, actor, op, subject_kind, subject_id, payload FROM audit_log WHERE seq > ? ORDER BY seq");
    q.bind(1, after);
    return read_audit(q);
  }

  std::vector<AuditEntry> audit_for(const std::string& kind, Id id) {
    Stmt q(db,
           "SELECT seq, at, actor, op, subject_kind, subject_id, payload FROM audit_log "
           "WHERE subject_kind = ? AND subject_id = ? ORDER BY seq");
    q.bind(1, kind).bind(2, id);
    return read_audit(q);
  }
};

// ---------------------------------------------------------------------------
// Registry

Registry::Registry(RegistryOptions opts)
    : schema_(opts.schema), store_(std::make_unique<Store>(opts.database, opts.schema->version())) {
  if (!opts.blob_dir.empty()) blobs_ = std::make_unique<BlobStore>(opts.blob_dir);
  data_ = store_->load(*schema_);
}

Registry::~Registry() = default;

void Registry::commit(std::vector<Pending> ops, const std::string& actor) {
  Touched touched;
  std::vector<AuditEntry> entries;
  const std::string at = format_utc(now_utc());
  try {
    for (auto& op : ops) {
      const Subject subject = apply_op(data_, op.op, op.payload, *schema_, touched);
      entries.push_back({++data_.version, at, actor, op.op, subject.kind, subject.id, std::move(op.payload)});
    }
    store_->persist(data_, touched, entries);
  } catch (const std::exception& e) {
    data_ = store_->load(*schema_);
    throw Error(ErrorCode::StorageFault, std::string("registry write failed: ") + e.what());
  }
  if (touched.gallery) ++gallery_revision_;
}

void Registry::ensure_empty() const {
  if (data_.version != 0 || data_.next_id != 1) {
    throw Error(ErrorCode::ValidationError, "registry is not empty");
  }
}

std::int64_t Registry::version() const {
  std::lock_guard lock(mutex_);
  return data_.version;
}

std::uint64_t Registry::gallery_revision() const {
  std::lock_guard lock(mutex_);
  return gallery_revision_;
}

RegistryData Registry::data() const {
  std::lock_guard lock(mutex_);
  return data_;
}

std::vector<AuditEntry> Registry::audit(std::int64_t after_seq) const {
  std::lock_guard lock(mutex_);
  return store_->audit(after_seq);
}

std::vector<AuditEntry> Registry::audit_for(std::string_view kind, Id id) const {
  std::lock_guard lock(mutex_);
  return store_->audit_for(std::string(kind), id);
}

GroupSighting Registry::group(Id id) const {
  std::lock_guard lock(mutex_);
  auto it = data_.groups.find(id);
  if (it == data_.groups.end()) throw Error(ErrorCode::NotFound, "no group sighting " + std::to_string(id));
  return it->second;
}

std::vector<GroupSighting> Registry::groups() const {
  std::lock_guard lock(mutex_);
  std::vector<GroupSighting> out;
  for (const auto& [id, g] : data_.groups) out.push_back(g);
  return out;
}

std::optional<Id> Registry::group_for_event(const std::string& event_ref) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, g] : data_.groups) {
    if (g.event_ref == event_ref) return id;
  }
  return std::nullopt;
}

Photo Registry::photo(Id id) const {
  std::lock_guard lock(mutex_);
  auto it = data_.photos.find(id);
  if (it == data_.photos.end()) throw Error(ErrorCode::NotFound, "no photo " + std::to_string(id));
  return it->second;
}

IndividualSighting Registry::sighting(Id id) const {
  std::lock_guard lock(mutex_);
  return data_.sighting(id);
}

std::vector<IndividualSighting> Registry::sightings_of(Id group) const {
  std::lock_guard lock(mutex_);
  if (!data_.groups.count(group)) throw Error(ErrorCode::NotFound, "no group sighting " + std::to_string(group));
  std::vector<IndividualSighting> out;
  for (const auto& [id, s] : data_.sightings) {
    if (s.group_sighting == group) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.subgroup_index < b.subgroup_index; });
  return out;
}

Individual Registry::individual(Id id) const {
  std::lock_guard lock(mutex_);
  return data_.individual(id);
}

std::vector<Individual> Registry::individuals() const {
  std::lock_guard lock(mutex_);
  std::vector<Individual> out;
  for (const auto& [id, i] : data_.individuals) out.push_back(i);
  return out;
}

GroupSighting Registry::create_group_sighting(const ingest::IngestEvent& event, const std::string& actor) {
  if (event.external_id.empty()) throw Error(ErrorCode::ValidationError, "event has no external id");
  if (!event.location) throw Error(ErrorCode::ValidationError, "event " + event.external_id + " lacks coordinates");
  const auto& loc = *event.location;
  if (!(loc.latitude >= -90 && loc.latitude <= 90 && loc.longitude >= -180 && loc.longitude <= 180)) {
    throw Error(ErrorCode::ValidationError, "event " + event.external_id + " has coordinates out of range");
  }
  std::lock_guard lock(mutex_);
  for (const auto& [id, g] : data_.groups) {
    if (g.event_ref == event.external_id) {
      throw Error(ErrorCode::DuplicateEvent, "event " + event.external_id + " already linked to group " +
                                                 std::to_string(id));
    }
  }
  const Id id = data_.next_id;
  commit({{"create_group_sighting", {{"event", ingest::event_to_json(event)}}}}, actor);
  return data_.groups.at(id);
}

Photo Registry::add_photo(Id group, std::string_view bytes, const std::string& filename, const std::string& actor,
                          std::optional<std::int64_t> expected_group_version) {
  if (!blobs_) throw Error(ErrorCode::ValidationError, "photo storage is not configured");
  {
    std::lock_guard lock(mutex_);
    auto it = data_.groups.find(group);
    if (it == data_.groups.end()) throw Error(ErrorCode::NotFound, "no group sighting " + std::to_string(group));
    if (it->second.status == GroupStatus::Resolved) {
      throw Error(ErrorCode::SightingResolved, "group sighting " + std::to_string(group) + " is resolved");
    }
  }
  const StoredImage img = blobs_->put(bytes);

  std::lock_guard lock(mutex_);
  const auto& g = data_.groups.at(group);
  check_version(g.version, expected_group_version, "group sighting " + std::to_string(group));
  for (Id p : g.photos) {
    if (data_.photos.at(p).content_hash == img.content_hash) {
      throw Error(ErrorCode::DuplicatePhoto, "photo already uploaded to this group as " + std::to_string(p));
    }
  }
  const Id id = data_.next_id;
  commit({{"add_photo",
           {{"group", group},
            {"content_hash", img.content_hash},
            {"filename", filename},
            {"width", img.width},
            {"height", img.height},
            {"preview_width", img.preview_width},
            {"preview_height", img.preview_height},
            {"preview_downscaled", img.preview_downscaled}}}},
         actor);
  return data_.photos.at(id);
}

Photo Registry::add_boxes(Id photo_id, const std::vector<BoxInput>& boxes, const std::string& actor,
                          std::optional<std::int64_t> expected_photo_version) {
  std::lock_guard lock(mutex_);
  auto it = data_.photos.find(photo_id);
  if (it == data_.photos.end()) throw Error(ErrorCode::NotFound, "no photo " + std::to_string(photo_id));
  const Photo& ph = it->second;
  if (data_.groups.at(ph.group_sighting).status == GroupStatus::Resolved) {
    throw Error(ErrorCode::SightingResolved, "group sighting " + std::to_string(ph.group_sighting) + " is resolved");
  }
  check_version(ph.version, expected_photo_version, "photo " + std::to_string(photo_id));
  json list = json::array();
  for (const auto& b : boxes) {
    const auto& r = b.rect;
    if (r.w <= 0 || r.h <= 0) throw Error(ErrorCode::ValidationError, "box width and height must be positive");
    if (b.subgroup_index < 1) throw Error(ErrorCode::ValidationError, "subgroup index must be positive");
    if (r.x < 0 || r.y < 0 || static_cast<std::int64_t>(r.x) + r.w > ph.width ||
        static_cast<std::int64_t>(r.y) + r.h > ph.height) {
      throw Error(ErrorCode::OutOfBounds, "box exceeds the " + std::to_string(ph.width) + "x" +
                                              std::to_string(ph.height) + " photo");
    }
    list.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}, {"subgroup_index", b.subgroup_index}});
  }
  commit({{"set_boxes", {{"photo", photo_id}, {"boxes", list}}}}, actor);
  return data_.photos.at(photo_id);
}

std::vector<IndividualSighting> Registry::derive_individual_sightings(Id group, const std::string& actor) {
  std::vector<IndividualSighting> out;
  {
    std::lock_guard lock(mutex_);
    auto it = data_.groups.find(group);
    if (it == data_.groups.end()) throw Error(ErrorCode::NotFound, "no group sighting " + std::to_string(group));
    std::set<int> indices;
    for (Id p : it->second.photos) {
      for (const auto& b : data_.photos.at(p).boxes) indices.insert(b.subgroup_index);
    }
    if (indices.empty()) throw Error(ErrorCode::NoBoxes, "group sighting " + std::to_string(group) + " has no boxes");
    for (const auto& [id, s] : data_.sightings) {
      if (s.group_sighting == group) indices.erase(s.subgroup_index);
    }
    std::vector<Pending> ops;
    for (int idx : indices) ops.push_back({"create_individual_sighting", {{"group", group}, {"subgroup_index", idx}}});
    if (!ops.empty()) commit(std::move(ops), actor);
  }
  return sightings_of(group);
}

IndividualSighting Registry::set_seek_code(Id sighting_id, const seek::SeekCode& code, const std::string& actor,
                                           std::optional<std::int64_t> expected_version) {
  if (code.schema_version() != schema_->version()) {
    throw Error(ErrorCode::SchemaMismatch, "code uses seek schema '" + code.schema_version() + "', active is '" +
                                               schema_->version() + "'");
  }
  std::lock_guard lock(mutex_);
  const auto& s = data_.sighting(sighting_id);
  check_version(s.version, expected_version, "individual sighting " + std::to_string(sighting_id));
  commit({{"set_seek_code", {{"sighting", sighting_id}, {"code", seek::format_code(code)}}}}, actor);
  return data_.sightings.at(sighting_id);
}

IndividualSighting Registry::add_contour(Id sighting_id, const ContourRecord& record, const std::string& actor,
                                         std::optional<std::int64_t> expected_version) {
  constexpr std::string_view kOriginal = "original:";
  if (record.asset.starts_with("preview:")) {
    throw Error(ErrorCode::ValidationError, "contours must be traced on original photos, not previews");
  }
  if (!record.asset.starts_with(kOriginal)) {
    throw Error(ErrorCode::ValidationError, "contour asset must be 'original:<photo id>'");
  }
  Id photo_id = 0;
  try {
    photo_id = std::stoll(record.asset.substr(kOriginal.size()));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ValidationError, "bad contour asset '" + record.asset + "'");
  }
  // Rejects degenerate input before it reaches the log.
  contour::normalize_contour(contour::Contour<double>{record.points, record.side, {}});

  std::lock_guard lock(mutex_);
  const auto& s = data_.sighting(sighting_id);
  auto ph = data_.photos.find(photo_id);
  if (ph == data_.photos.end() || ph->second.group_sighting != s.group_sighting) {
    throw Error(ErrorCode::ValidationError, "contour asset is not a photo of this group sighting");
  }
  check_version(s.version, expected_version, "individual sighting " + std::to_string(sighting_id));
  commit({{"add_contour", {{"sighting", sighting_id}, {"contour", to_json(record)}}}}, actor);
  return data_.sightings.at(sighting_id);
}

Individual Registry::assign_to_individual(Id sighting_id, const AssignTarget& target, const std::string& actor,
                                          std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(mutex_);
  const auto& s = data_.sighting(sighting_id);
  if (!s.code) throw Error(ErrorCode::NotCoded, "sighting " + std::to_string(sighting_id) + " has no SEEK code");
  if (s.individual) {
    throw Error(ErrorCode::AlreadyAssigned, "sighting " + std::to_string(sighting_id) + " already belongs to " +
                                                std::to_string(*s.individual));
  }
  if (const auto* id = std::get_if<Id>(&target)) data_.individual(*id);
  check_version(s.version, expected_version, "individual sighting " + std::to_string(sighting_id));
  commit({{"assign", assign_payload(sighting_id, target)}}, actor);
  return data_.individuals.at(*data_.sightings.at(sighting_id).individual);
}

Individual Registry::reassign(Id sighting_id, const AssignTarget& target, const std::string& actor,
                              std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(mutex_);
  const auto& s = data_.sighting(sighting_id);
  if (!s.individual) {
    throw Error(ErrorCode::ValidationError, "sighting " + std::to_string(sighting_id) + " is not assigned yet");
  }
  if (const auto* id = std::get_if<Id>(&target)) {
    data_.individual(*id);
    if (*id == *s.individual) throw Error(ErrorCode::ValidationError, "sighting already belongs to that individual");
  }
  check_version(s.version, expected_version, "individual sighting " + std::to_string(sighting_id));
  commit({{"reassign", assign_payload(sighting_id, target)}}, actor);
  return data_.individuals.at(*data_.sightings.at(sighting_id).individual);
}

void Registry::import_data(const RegistryData& incoming, const std::string& actor) {
  if (incoming.schema_version != schema_->version()) {
    throw Error(ErrorCode::SchemaMismatch, "import uses seek schema '" + incoming.schema_version + "'");
  }
  if (auto problems = integrity_violations(incoming); !problems.empty()) {
    throw Error(ErrorCode::ValidationError, "import rejected: " + problems.front());
  }
  std::lock_guard lock(mutex_);
  ensure_empty();
  json dump = to_dump(incoming);
  dump.erase("audit");
  commit({{"import", {{"data", std::move(dump)}}}}, actor);
}

void Registry::replay(const std::vector<AuditEntry>& log) {
  std::lock_guard lock(mutex_);
  ensure_empty();
  Touched touched;
  try {
    for (const auto& e : log) {
      if (e.seq != data_.version + 1) throw Error(ErrorCode::ValidationError, "audit log has a gap");
      const Subject subject = apply_op(data_, e.op, e.payload, *schema_, touched);
      if (subject.kind != e.subject_kind || subject.id != e.subject_id) {
        throw Error(ErrorCode::ValidationError, "audit entry " + std::to_string(e.seq) + " replays to a different subject");
      }
      data_.version = e.seq;
    }
    touched.everything = true;
    store_->persist(data_, touched, log);
  } catch (...) {
    data_ = store_->load(*schema_);
    throw;
  }
  ++gallery_revision_;
}

}  // namespace reid::registry
