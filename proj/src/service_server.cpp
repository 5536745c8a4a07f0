#include "reid/service/server.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "reid/gallery.hpp"
#include "reid/ingest/sync.hpp"
#include "reid/match/snapshot.hpp"
#include "reid/service/index_manager.hpp"

namespace reid::service {

using nlohmann::json;
using registry::Id;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownIndividual:
      return 404;
    case ErrorCode::DuplicateEvent:
    case ErrorCode::DuplicatePhoto:
    case ErrorCode::SightingResolved:
    case ErrorCode::AlreadyAssigned:
    case ErrorCode::VersionConflict:
    case ErrorCode::EmptyGallery:
      return 409;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::FeedUnreachable:
      return 502;
    case ErrorCode::StorageFault:
      return 500;
    default:
      return 400;
  }
}

json matches_to_json(const std::vector<match::RankedMatch>& ranked, std::size_t top_k) {
  json out = json::array();
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    const auto& m = ranked[i];
    out.push_back({{"rank", m.rank},
                   {"individual_id", std::stoll(m.individual)},
                   {"seek_distance", m.seek_distance},
                   {"contour_score", m.contour_score},
                   {"fused_score", m.fused_score}});
  }
  return out;
}

namespace {

using Handler = std::function<json(const httplib::Request&, httplib::Response&, const User&)>;

Id path_id(const httplib::Request& req, std::size_t group = 1) { return std::stoll(req.matches[group].str()); }

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ValidationError, "request body is not valid JSON");
  return j;
}

std::optional<std::int64_t> version_field(const json& body) {
  if (!body.contains("version") || body["version"].is_null()) return std::nullopt;
  if (!body["version"].is_number_integer()) throw Error(ErrorCode::ValidationError, "version must be an integer");
  return body["version"].get<std::int64_t>();
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback, std::size_t lo = 1) {
  if (!req.has_param(name)) return fallback;
  const std::string raw = req.get_param_value(name);
  long long v = 0;
  try {
    std::size_t used = 0;
    v = std::stoll(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ValidationError, std::string(name) + " must be an integer");
  }
  if (v < static_cast<long long>(lo)) {
    throw Error(ErrorCode::ValidationError, std::string(name) + " must be at least " + std::to_string(lo));
  }
  return static_cast<std::size_t>(v);
}

template <typename T>
json page_of(const std::vector<T>& items, const httplib::Request& req) {
  const std::size_t page = size_param(req, "page", 1);
  const std::size_t page_size = std::min<std::size_t>(size_param(req, "page_size", 100), 1000);
  json out = json::array();
  for (std::size_t i = (page - 1) * page_size; i < items.size() && i < page * page_size; ++i) {
    out.push_back(registry::to_json(items[i]));
  }
  return {{"items", out}, {"page", page}, {"page_size", page_size}, {"total", items.size()}};
}

registry::AssignTarget assign_target(const json& body) {
  if (body.contains("individual_id") && !body["individual_id"].is_null()) {
    if (!body["individual_id"].is_number_integer()) {
      throw Error(ErrorCode::ValidationError, "individual_id must be an integer");
    }
    return body["individual_id"].get<Id>();
  }
  if (body.contains("new_individual")) {
    const auto& n = body["new_individual"];
    return registry::NewIndividual{n.is_object() ? n.value("name", std::string{}) : std::string{}};
  }
  throw Error(ErrorCode::ValidationError, "give either individual_id or new_individual");
}

std::string image_type(std::string_view bytes) {
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
  if (bytes.size() >= 8 && bytes.substr(0, 8) == "\x89PNG\r\n\x1a\n") return "image/png";
  return "application/octet-stream";
}

json photo_json(const registry::Photo& p) {
  json j = registry::to_json(p);
  j["preview_url"] = "/api/v1/photos/" + std::to_string(p.id) + "/preview";
  j["original_url"] = "/api/v1/photos/" + std::to_string(p.id) + "/original";
  return j;
}

}  // namespace

struct ApiServer::Impl {
  ServiceConfig cfg;
  std::unique_ptr<seek::Schema> schema;
  std::unique_ptr<registry::Registry> reg;
  std::unique_ptr<IndexManager> index;
  ingest::FeedClient feed;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), feed(cfg.feed) {
    if (cfg.schema_path) schema = std::make_unique<seek::Schema>(seek::Schema::load(*cfg.schema_path));
    const seek::Schema* active = schema ? schema.get() : &seek::Schema::builtin();
    std::filesystem::create_directories(cfg.blob_dir);
    reg = std::make_unique<registry::Registry>(registry::RegistryOptions{cfg.db_path, cfg.blob_dir, active});
    index = std::make_unique<IndexManager>(*reg, cfg.contour);
    routes();
  }

  void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    res.status = http_status(code);
    json body{{"error", {{"code", to_string(code)}, {"message", message}}}};
    res.set_content(body.dump(), "application/json");
  }

  httplib::Server::Handler wrap(std::optional<Role> min_role, Handler h) {
    return [this, min_role, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        User anonymous{"anonymous", "", Role::Annotator};
        const User* user = &anonymous;
        if (min_role) {
          const std::string auth = req.get_header_value("Authorization");
          const std::string prefix = "Bearer ";
          user = auth.rfind(prefix, 0) == 0 ? cfg.user_for_token(auth.substr(prefix.size())) : nullptr;
          if (!user) throw Error(ErrorCode::Unauthorized, "missing or unknown bearer token");
          if (user->role < *min_role) {
            throw Error(ErrorCode::Forbidden, "role " + std::string(to_string(user->role)) + " may not do this; needs " +
                                                  std::string(to_string(*min_role)));
          }
        }
        json body = h(req, res, *user);
        const auto version = reg->version();
        res.set_header("X-Registry-Version", std::to_string(version));
        if (!body.is_null()) {
          if (body.is_object()) body["registry_version"] = version;
          res.set_content(body.dump(), "application/json");
        }
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::ValidationError, std::string("bad request body: ") + e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        send_error(res, ErrorCode::StorageFault, e.what());
      }
    };
  }

  json index_json(const IndexState& s) const {
    return {{"generation", s.generation},
            {"gallery_revision", s.gallery_revision},
            {"individuals", s.individuals},
            {"descriptors", s.index ? s.index->size() : 0},
            {"dimension", s.index ? s.index->dimension() : 0},
            {"schema_version", reg->schema().version()},
            {"stale", s.gallery_revision != reg->gallery_revision()}};
  }

  void routes() {
    const std::string api = "/api/v1";

    http.Get(api + "/health", wrap(std::nullopt, [this](auto&, auto&, const User&) -> json {
               return {{"status", "ok"}, {"schema_version", reg->schema().version()}};
             }));

    http.Get(api + "/schema", wrap(Role::Annotator, [this](auto&, auto&, const User&) -> json {
               return reg->schema().to_json();
             }));

    // events
    http.Get(api + "/events", wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) -> json {
               Timestamp since{};
               if (req.has_param("since")) {
                 auto t = parse_utc(req.get_param_value("since"));
                 if (!t) throw Error(ErrorCode::ValidationError, "since must be an ISO-8601 instant");
                 since = *t;
               }
               json items = json::array();
               for (const auto& e : feed.fetch_active_events(since)) {
                 json j = ingest::event_to_json(e);
                 const auto linked = reg->group_for_event(e.external_id);
                 j["group_sighting_id"] = linked ? json(*linked) : json(nullptr);
                 items.push_back(std::move(j));
               }
               return {{"items", items}};
             }));

    http.Post(api + "/events/sync",
              wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User& user) -> json {
                const json body = parse_body(req);
                Timestamp since{};
                if (body.contains("since")) {
                  auto t = parse_utc(body["since"].get<std::string>());
                  if (!t) throw Error(ErrorCode::ValidationError, "since must be an ISO-8601 instant");
                  since = *t;
                }
                const auto r = ingest::sync_events(*reg, feed.fetch_active_events(since), user.name);
                json created = json::array();
                for (const auto& g : r.created) created.push_back(registry::to_json(g));
                return {{"created", created}, {"already_linked", r.already_linked}, {"rejected", r.rejected}};
              }));

    // group sightings
    http.Post(api + "/group-sightings",
              wrap(Role::Annotator, [this](const httplib::Request& req, httplib::Response& res, const User& user) -> json {
                const json body = parse_body(req);
                ingest::IngestEvent event;
                if (body.contains("event")) {
                  event = ingest::event_from_json(body["event"]);
                } else if (body.contains("event_id")) {
                  const auto id = body["event_id"].get<std::string>();
                  const auto events = feed.fetch_active_events(Timestamp{});
                  const auto it = std::find_if(events.begin(), events.end(),
                                               [&](const ingest::IngestEvent& e) { return e.external_id == id; });
                  if (it == events.end()) throw Error(ErrorCode::NotFound, "feed has no sighting event " + id);
                  event = *it;
                } else {
                  throw Error(ErrorCode::ValidationError, "give either event or event_id");
                }
                res.status = 201;
                return registry::to_json(reg->create_group_sighting(event, user.name));
              }));

    http.Get(api + "/group-sightings", wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) {
               return page_of(reg->groups(), req);
             }));

    http.Get(api + R"(/group-sightings/(\d+))",
             wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) -> json {
               const Id id = path_id(req);
               json j = registry::to_json(reg->group(id));
               json sightings = json::array();
               for (const auto& s : reg->sightings_of(id)) sightings.push_back(registry::to_json(s));
               j["individual_sightings"] = sightings;
               return j;
             }));

    http.Post(api + R"(/group-sightings/(\d+)/photos)",
              wrap(Role::Annotator, [this](const httplib::Request& req, httplib::Response& res, const User& user) -> json {
                if (!req.is_multipart_form_data() || !req.has_file("file")) {
                  throw Error(ErrorCode::ValidationError, "expected a multipart upload with a 'file' part");
                }
                const auto file = req.get_file_value("file");
                std::optional<std::int64_t> expected;
                if (req.has_file("version")) expected = std::stoll(req.get_file_value("version").content);
                res.status = 201;
                return photo_json(reg->add_photo(path_id(req), file.content, file.filename, user.name, expected));
              }));

    http.Post(api + R"(/group-sightings/(\d+)/individual-sightings)",
              wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User& user) -> json {
                json items = json::array();
                for (const auto& s : reg->derive_individual_sightings(path_id(req), user.name)) {
                  items.push_back(registry::to_json(s));
                }
                return {{"items", items}};
              }));

    // photos
    http.Get(api + R"(/photos/(\d+))", wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) {
               return photo_json(reg->photo(path_id(req)));
             }));

    http.Get(api + R"(/photos/(\d+)/preview)",
             wrap(Role::Annotator, [this](const httplib::Request& req, httplib::Response& res, const User&) -> json {
               const auto p = reg->photo(path_id(req));
               if (!reg->blobs()) throw Error(ErrorCode::StorageFault, "photo storage is not configured");
               res.set_content(reg->blobs()->read_preview(p.content_hash), "image/jpeg");
               return nullptr;
             }));

    http.Get(api + R"(/photos/(\d+)/original)",
             wrap(Role::Annotator, [this](const httplib::Request& req, httplib::Response& res, const User&) -> json {
               const auto p = reg->photo(path_id(req));
               if (!reg->blobs()) throw Error(ErrorCode::StorageFault, "photo storage is not configured");
               const std::string bytes = reg->blobs()->read_original(p.content_hash);
               res.set_content(bytes, image_type(bytes));
               return nullptr;
             }));

    http.Put(api + R"(/photos/(\d+)/boxes)",
             wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User& user) -> json {
               const json body = parse_body(req);
               std::vector<registry::BoxInput> boxes;
               for (const auto& b : body.at("boxes")) {
                 boxes.push_back({{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()},
                                  b.at("subgroup_index").get<int>()});
               }
               return photo_json(reg->add_boxes(path_id(req), boxes, user.name, version_field(body)));
             }));

    // individual sightings
    http.Get(api + R"(/individual-sightings/(\d+))",
             wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) -> json {
               return registry::to_json(reg->sighting(path_id(req)));
             }));

    http.Put(api + R"(/individual-sightings/(\d+)/seek)",
             wrap(Role::Coder, [this](const httplib::Request& req, auto&, const User& user) -> json {
               const json body = parse_body(req);
               const auto code = seek::parse_code(body.at("code").get<std::string>(), reg->schema());
               return registry::to_json(reg->set_seek_code(path_id(req), code, user.name, version_field(body)));
             }));

    http.Post(api + R"(/individual-sightings/(\d+)/contours)",
              wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User& user) -> json {
                const json body = parse_body(req);
                const auto contour = registry::contour_from_json(body);
                return registry::to_json(reg->add_contour(path_id(req), contour, user.name, version_field(body)));
              }));

    http.Get(api + R"(/individual-sightings/(\d+)/matches)",
             wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) -> json {
               const auto sighting = reg->sighting(path_id(req));
               const std::size_t top_k = size_param(req, "top_k", cfg.default_top_k);
               const auto query = make_query(sighting, cfg.contour);
               const auto state = index->current();
               json out{{"sighting_id", sighting.id},
                        {"index_generation", state->generation},
                        {"gallery_size", state->entries.size()},
                        {"top_k", top_k},
                        {"fusion",
                         {{"curv_coefficient", cfg.fusion.curv_coefficient}, {"lnbnn_k", cfg.fusion.lnbnn_k}}}};
               if (state->entries.empty()) {
                 out["gallery_empty"] = true;
                 out["action"] = "create_new_individual";
                 out["matches"] = json::array();
                 return out;
               }
               const auto ranked = match::rank_candidates(query, state->entries, state->index ? &*state->index : nullptr,
                                                          cfg.fusion);
               json matches = matches_to_json(ranked, top_k);
               for (auto& m : matches) m["individual_name"] = reg->individual(m["individual_id"].get<Id>()).name;
               out["gallery_empty"] = false;
               out["matches"] = matches;
               return out;
             }));

    http.Post(api + R"(/individual-sightings/(\d+)/assign)",
              wrap(Role::Reviewer, [this](const httplib::Request& req, auto&, const User& user) -> json {
                const json body = parse_body(req);
                return registry::to_json(
                    reg->assign_to_individual(path_id(req), assign_target(body), user.name, version_field(body)));
              }));

    http.Post(api + R"(/individual-sightings/(\d+)/reassign)",
              wrap(Role::Reviewer, [this](const httplib::Request& req, auto&, const User& user) -> json {
                const json body = parse_body(req);
                return registry::to_json(
                    reg->reassign(path_id(req), assign_target(body), user.name, version_field(body)));
              }));

    // individuals
    auto individual_json = [this](const registry::Individual& ind, const registry::RegistryData& data) {
      json j = registry::to_json(ind);
      const auto code = data.latest_code(ind.id);
      j["latest_seek_code"] = code ? json(seek::format_code(*code)) : json(nullptr);
      return j;
    };

    http.Get(api + "/individuals",
             wrap(Role::Annotator, [this, individual_json](const httplib::Request& req, auto&, const User&) -> json {
               const auto data = reg->data();
               json items = json::array();
               const std::size_t page = size_param(req, "page", 1);
               const std::size_t page_size = std::min<std::size_t>(size_param(req, "page_size", 100), 1000);
               std::size_t i = 0;
               for (const auto& [id, ind] : data.individuals) {
                 if (i >= (page - 1) * page_size && i < page * page_size) items.push_back(individual_json(ind, data));
                 ++i;
               }
               return {{"items", items}, {"page", page}, {"page_size", page_size}, {"total", data.individuals.size()}};
             }));

    http.Get(api + R"(/individuals/(\d+))",
             wrap(Role::Annotator, [this, individual_json](const httplib::Request& req, auto&, const User&) -> json {
               const auto data = reg->data();
               return individual_json(data.individual(path_id(req)), data);
             }));

    // registry dump and audit
    http.Get(api + "/export", wrap(Role::Annotator, [this](auto&, auto&, const User&) -> json {
               return registry::to_dump(reg->data(), reg->audit());
             }));

    http.Post(api + "/import", wrap(Role::Admin, [this](const httplib::Request& req, auto&, const User& user) -> json {
                const json body = parse_body(req);
                reg->import_data(registry::data_from_dump(body, reg->schema()), user.name);
                return {{"imported", true}};
              }));

    http.Get(api + "/audit", wrap(Role::Annotator, [this](const httplib::Request& req, auto&, const User&) -> json {
               std::vector<registry::AuditEntry> entries;
               if (req.has_param("subject_kind")) {
                 entries = reg->audit_for(req.get_param_value("subject_kind"),
                                          static_cast<Id>(size_param(req, "subject_id", 0, 0)));
               } else {
                 entries = reg->audit(static_cast<std::int64_t>(size_param(req, "after", 0, 0)));
               }
               json items = json::array();
               for (const auto& e : entries) items.push_back(registry::to_json(e));
               return {{"items", items}};
             }));

    // index
    http.Get(api + "/index", wrap(Role::Annotator, [this](auto&, auto&, const User&) -> json {
               return index_json(*index->current());
             }));

    http.Post(api + "/index/rebuild", wrap(Role::Reviewer, [this](auto&, auto&, const User&) -> json {
                return index_json(*index->rebuild());
              }));

    http.Get(api + "/index/snapshot",
             wrap(Role::Annotator, [this](auto&, httplib::Response& res, const User&) -> json {
               const auto state = index->current();
               if (!state->index) throw Error(ErrorCode::NotFound, "the index holds no descriptors");
               std::ostringstream out;
               match::write_snapshot(out, *state->index);
               res.set_header("X-Index-Generation", std::to_string(state->generation));
               res.set_content(out.str(), "application/octet-stream");
               return nullptr;
             }));
  }
};

ApiServer::ApiServer(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start() {
  auto& i = *impl_;
  i.port = i.cfg.port == 0 ? i.http.bind_to_any_port(i.cfg.bind)
                           : (i.http.bind_to_port(i.cfg.bind, i.cfg.port) ? i.cfg.port : -1);
  if (i.port < 0) throw Error(ErrorCode::StorageFault, "cannot bind " + i.cfg.bind + ":" + std::to_string(i.cfg.port));
  i.thread = std::thread([&i] { i.http.listen_after_bind(); });
  i.http.wait_until_ready();
  spdlog::info("serving on {}", base_url());
  return i.port;
}

void ApiServer::run() {
  auto& i = *impl_;
  i.port = i.cfg.port;
  spdlog::info("serving on {}", base_url());
  if (!i.http.listen(i.cfg.bind, i.cfg.port)) {
    throw Error(ErrorCode::StorageFault, "cannot listen on " + i.cfg.bind + ":" + std::to_string(i.cfg.port));
  }
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const noexcept { return impl_->port; }

std::string ApiServer::base_url() const { return "http://" + impl_->cfg.bind + ":" + std::to_string(impl_->port); }

}  // namespace reid::service
