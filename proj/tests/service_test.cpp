#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "e2e_workflow.hpp"
#include "reid/eval/synth.hpp"
#include "reid/gallery.hpp"
#include "reid/match/snapshot.hpp"
#include "reid/service/config.hpp"
#include "support.hpp"

using namespace reid;
using namespace reid::service;
using nlohmann::json;
using testing_support::Api;

namespace {

const std::string kApi = "/api/v1";

json elephant_event(const std::string& id) {
  return {{"id", id},
          {"event_type", "elephant_sighting"},
          {"time", "2023-06-14T07:42:00Z"},
          {"location", {{"latitude", -1.45}, {"longitude", 35.12}}},
          {"reported_by", {{"username", "ranger"}}}};
}

// A live server over a scratch directory, with a feed that may be unreachable.
struct Live {
  testing_support::TempDir dir;
  ingest::MockFeedServer feed;
  std::unique_ptr<ApiServer> server;

  explicit Live(std::vector<json> events = {}) : feed(std::move(events)) {
    feed.start();
    server = std::make_unique<ApiServer>(testing_support::service_config(dir.path(), feed.base_url()));
    server->start();
  }
  Api as(const std::string& token) const { return Api(server->base_url(), token); }
};

registry::RegistryData gallery_of(std::size_t individuals, std::uint64_t seed) {
  eval::SynthOptions o;
  o.individuals = individuals;
  o.seed = seed;
  return eval::synth_population(o);
}

// group -> photo with one box -> one derived sighting; returns (photo, sighting)
std::pair<registry::Id, registry::Id> one_sighting(Api& ann, const std::string& event_id) {
  auto r = ann.post(kApi + "/group-sightings", {{"event", elephant_event(event_id)}});
  EXPECT_EQ(r.status, 201) << r.raw;
  const auto g = r.body["id"].get<registry::Id>();
  r = ann.upload(kApi + "/group-sightings/" + std::to_string(g) + "/photos",
                 testing_support::png_bytes(64, 48, static_cast<int>(g)), "a.png");
  EXPECT_EQ(r.status, 201) << r.raw;
  const auto p = r.body["id"].get<registry::Id>();
  r = ann.put(kApi + "/photos/" + std::to_string(p) + "/boxes",
              {{"boxes", {{{"x", 1}, {"y", 1}, {"w", 10}, {"h", 10}, {"subgroup_index", 1}}}}});
  EXPECT_EQ(r.status, 200) << r.raw;
  r = ann.post(kApi + "/group-sightings/" + std::to_string(g) + "/individual-sightings", json::object());
  EXPECT_EQ(r.status, 200) << r.raw;
  return {p, r.body["items"][0]["id"].get<registry::Id>()};
}

}  // namespace

TEST(Service, HttpStatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::UnknownIndividual), 404);
  EXPECT_EQ(http_status(ErrorCode::VersionConflict), 409);
  EXPECT_EQ(http_status(ErrorCode::DuplicatePhoto), 409);
  EXPECT_EQ(http_status(ErrorCode::AlreadyAssigned), 409);
  EXPECT_EQ(http_status(ErrorCode::Unauthorized), 401);
  EXPECT_EQ(http_status(ErrorCode::Forbidden), 403);
  EXPECT_EQ(http_status(ErrorCode::FeedUnreachable), 502);
  EXPECT_EQ(http_status(ErrorCode::StorageFault), 500);
  EXPECT_EQ(http_status(ErrorCode::MalformedCode), 400);
  EXPECT_EQ(http_status(ErrorCode::ValidationError), 400);
}

TEST(Service, ConfigFromJson) {
  const json j{{"port", 9000},
               {"db_path", "var/reid.db"},
               {"feed", {{"base_url", "http://feed:1"}, {"page_size", 50}, {"timeout_s", 3}}},
               {"fusion", {{"curv_coefficient", 0.25}, {"lnbnn_k", 3}, {"side_policy", "per_side"}}},
               {"default_top_k", 7},
               {"users", {{{"name", "a"}, {"token", "t"}, {"role", "reviewer"}}}}};
  const auto cfg = config_from_json(j, "/srv");
  EXPECT_EQ(cfg.port, 9000);
  EXPECT_EQ(cfg.db_path, std::filesystem::path("/srv/var/reid.db"));
  EXPECT_EQ(cfg.feed.page_size, 50);
  EXPECT_EQ(cfg.feed.timeout, std::chrono::seconds(3));
  EXPECT_EQ(cfg.fusion.curv_coefficient, 0.25);
  EXPECT_EQ(cfg.fusion.side_policy, match::SidePolicy::PerSide);
  EXPECT_EQ(cfg.default_top_k, 7u);
  ASSERT_NE(cfg.user_for_token("t"), nullptr);
  EXPECT_EQ(cfg.user_for_token("t")->role, Role::Reviewer);
  EXPECT_EQ(cfg.user_for_token("x"), nullptr);
  for (auto r : {Role::Annotator, Role::Coder, Role::Reviewer, Role::Admin}) EXPECT_EQ(role_from_string(to_string(r)), r);

  json bad = j;
  bad["users"][0]["role"] = "owner";
  EXPECT_THROW(config_from_json(bad), Error);
}

TEST(Service, ShippedConfigAndFixturesLoad) {
  const std::filesystem::path data = REID_DATA_DIR;
  const auto cfg = load_config(data / "service.example.json");
  EXPECT_EQ(cfg.users.size(), 4u);
  EXPECT_EQ(cfg.db_path, data / "var/reid.db");
  EXPECT_EQ(cfg.default_top_k, 15u);

  // two good sightings, a poaching report and a broken record
  const auto fixtures = ingest::load_fixtures((data / "feed_fixtures.json").string());
  ingest::MockFeedServer feed(fixtures);
  feed.start();
  ingest::FeedConfig fc;
  fc.base_url = feed.base_url();
  const ingest::FeedClient client(fc, [] { return *parse_utc("2023-06-15T12:00:00Z"); });
  EXPECT_EQ(client.fetch_active_events(*parse_utc("2000-01-01T00:00:00Z")).size(), 2u);
  EXPECT_EQ(client.last_skipped(), 1u);
}

TEST(Service, HappyPath) {
  testing_support::TempDir dir;
  const auto rep = testing_support::run_happy_path(dir.path());
  for (const auto& p : rep.problems) ADD_FAILURE() << p;
  EXPECT_EQ(rep.individuals, 2u);
  EXPECT_TRUE(rep.audit_replays);
  EXPECT_GT(rep.audit_entries, 10u);
}

TEST(Service, HealthSchemaAndErrorBodies) {
  Live live;
  auto anon = live.as("");
  auto r = anon.get(kApi + "/health");
  EXPECT_EQ(r.status, 200);

  r = live.as("tok-annotator").get(kApi + "/schema");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["version"], "seek-1.0");

  r = live.as("tok-annotator").get(kApi + "/group-sightings/424242");
  EXPECT_EQ(r.status, 404);
  ASSERT_TRUE(r.body.contains("error")) << r.raw;
  EXPECT_EQ(r.body["error"]["code"], "NotFound");
  EXPECT_TRUE(r.body["error"]["message"].is_string());

  r = live.as("tok-annotator").post(kApi + "/group-sightings", json::object());
  EXPECT_EQ(r.status, 400);
}

TEST(Service, RoleEnforcement) {
  Live live;
  auto ann = live.as("tok-annotator");
  const auto [photo, sid] = one_sighting(ann, "e1");
  const std::string seek = kApi + "/individual-sightings/" + std::to_string(sid) + "/seek";
  const json code{{"code", "F:AD:T2:U:U:N1:U:X0"}};

  auto r = live.as("").put(seek, code);
  EXPECT_EQ(r.status, 401);
  EXPECT_EQ(r.body["error"]["code"], "Unauthorized");
  EXPECT_EQ(live.as("forged").put(seek, code).status, 401);
  r = ann.put(seek, code);
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(r.body["error"]["code"], "Forbidden");
  EXPECT_EQ(live.as("tok-coder").put(seek, code).status, 200);

  const std::string assign = kApi + "/individual-sightings/" + std::to_string(sid) + "/assign";
  const json fresh{{"new_individual", {{"name", "A"}}}};
  EXPECT_EQ(live.as("tok-coder").post(assign, fresh).status, 403);
  EXPECT_EQ(live.as("tok-reviewer").post(kApi + "/import", json::object()).status, 403);
  EXPECT_EQ(live.as("tok-admin").post(assign, fresh).status, 200);
}

TEST(Service, ConflictingEditsOneWins) {
  Live live;
  auto ann = live.as("tok-annotator");
  const auto [photo, sid] = one_sighting(ann, "e1");
  const auto version = ann.get(kApi + "/photos/" + std::to_string(photo)).body["version"];

  // two annotators submit against the same version at once
  std::array<int, 2> status{};
  std::vector<std::thread> clients;
  for (int i = 0; i < 2; ++i) {
    clients.emplace_back([&, i] {
      auto api = live.as("tok-annotator");
      const json boxes = {{{"x", 2 + i}, {"y", 2}, {"w", 9}, {"h", 9}, {"subgroup_index", 1}}};
      status[static_cast<std::size_t>(i)] =
          api.put(kApi + "/photos/" + std::to_string(photo) + "/boxes", {{"version", version}, {"boxes", boxes}}).status;
    });
  }
  for (auto& t : clients) t.join();
  std::sort(status.begin(), status.end());
  EXPECT_EQ(status, (std::array<int, 2>{200, 409}));

  auto r = live.as("tok-coder").put(kApi + "/individual-sightings/" + std::to_string(sid) + "/seek",
                                    {{"code", "F:AD:T2:U:U:N1:U:X0"}, {"version", 0}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error"]["code"], "VersionConflict");
}

TEST(Service, PreviewContourRejected) {
  Live live;
  auto ann = live.as("tok-annotator");
  const auto [photo, sid] = one_sighting(ann, "e1");
  registry::ContourRecord rec{contour::Side::Left, "", contour::Points<double>(40, 2)};
  for (Eigen::Index i = 0; i < 40; ++i) rec.points.row(i) << static_cast<double>(i), std::cos(0.3 * static_cast<double>(i));
  auto body = testing_support::contour_body(rec, photo, 0);
  body.erase("version");
  body["asset"] = "preview:" + std::to_string(photo);
  auto r = ann.post(kApi + "/individual-sightings/" + std::to_string(sid) + "/contours", body);
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "ValidationError");

  body["asset"] = "original:" + std::to_string(photo);
  r = ann.post(kApi + "/individual-sightings/" + std::to_string(sid) + "/contours", body);
  EXPECT_EQ(r.status, 200) << r.raw;
}

TEST(Service, EmptyGalleryAndUncodedQuery) {
  Live live;
  auto ann = live.as("tok-annotator");
  const auto [photo, sid] = one_sighting(ann, "e1");
  const std::string matches = kApi + "/individual-sightings/" + std::to_string(sid) + "/matches";
  auto r = ann.get(matches);
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "NotCoded");

  live.as("tok-coder").put(kApi + "/individual-sightings/" + std::to_string(sid) + "/seek", {{"code", "M:AD:T0:U:U:N1:U:X0"}});
  r = ann.get(matches);
  ASSERT_EQ(r.status, 200) << r.raw;
  EXPECT_EQ(r.body["gallery_empty"], true);
  EXPECT_EQ(r.body["action"], "create_new_individual");
  EXPECT_TRUE(r.body["matches"].empty());
}

TEST(Service, TopKAndOfflineSnapshotAgree) {
  Live live;
  const auto population = gallery_of(10, 21);
  ASSERT_EQ(live.as("tok-admin").post(kApi + "/import", registry::to_dump(population)).status, 200);
  auto ann = live.as("tok-annotator");
  const auto query_id = population.individuals.begin()->second.sightings[1];
  const std::string matches = kApi + "/individual-sightings/" + std::to_string(query_id) + "/matches";

  auto r = ann.get(matches + "?top_k=15");
  ASSERT_EQ(r.status, 200) << r.raw;
  EXPECT_EQ(r.body["gallery_size"], 10);
  const auto served = r.body["matches"];
  ASSERT_EQ(served.size(), 10u);
  EXPECT_EQ(ann.get(matches + "?top_k=5").body["matches"].size(), 5u);
  EXPECT_EQ(ann.get(matches).body["matches"].size(), 10u);  // default 15
  EXPECT_EQ(ann.get(matches + "?top_k=0").status, 400);

  // the snapshot plus the exported registry reproduce the served scores bit for bit
  auto snap = httplib::Client(live.server->base_url())
                  .Get(kApi + "/index/snapshot", httplib::Headers{{"Authorization", "Bearer tok-annotator"}});
  ASSERT_TRUE(snap);
  ASSERT_EQ(snap->status, 200);
  EXPECT_EQ(snap->get_header_value("X-Index-Generation"), std::to_string(r.body["index_generation"].get<std::uint64_t>()));
  std::istringstream in(snap->body);
  const auto index = match::read_snapshot(in);
  const auto data = registry::data_from_dump(ann.get(kApi + "/export").body);
  const contour::ContourConfig ccfg;
  const auto gallery = build_gallery(data, ccfg);
  const auto offline =
      match::rank_candidates(make_query(data.sighting(query_id), ccfg), gallery.entries, &index, match::FusionConfig{});
  ASSERT_EQ(offline.size(), served.size());
  for (std::size_t i = 0; i < offline.size(); ++i) {
    EXPECT_EQ(served[i]["rank"], offline[i].rank);
    EXPECT_EQ(std::to_string(served[i]["individual_id"].get<registry::Id>()), offline[i].individual);
    EXPECT_EQ(served[i]["seek_distance"].get<double>(), offline[i].seek_distance);
    EXPECT_EQ(served[i]["contour_score"].get<double>(), offline[i].contour_score);
    EXPECT_EQ(served[i]["fused_score"].get<double>(), offline[i].fused_score);
  }
  EXPECT_EQ(served[0]["individual_id"], population.individuals.begin()->first);
}

TEST(Service, IndexStatusAndRebuild) {
  Live live;
  auto ann = live.as("tok-annotator");
  auto r = ann.get(kApi + "/index");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["individuals"], 0);
  EXPECT_EQ(r.body["schema_version"], "seek-1.0");
  EXPECT_EQ(ann.get(kApi + "/index/snapshot").status, 404);

  live.as("tok-admin").post(kApi + "/import", registry::to_dump(gallery_of(4, 5)));
  r = ann.get(kApi + "/index");
  EXPECT_EQ(r.body["individuals"], 4);
  EXPECT_GT(r.body["descriptors"].get<std::size_t>(), 0u);
  EXPECT_EQ(r.body["stale"], false);
  const auto generation = r.body["generation"].get<std::uint64_t>();

  EXPECT_EQ(ann.post(kApi + "/index/rebuild", json::object()).status, 403);
  r = live.as("tok-reviewer").post(kApi + "/index/rebuild", json::object());
  ASSERT_EQ(r.status, 200);
  EXPECT_GT(r.body["generation"].get<std::uint64_t>(), generation);
}

TEST(Service, FeedSyncAndListing) {
  Live live({elephant_event("s1"), elephant_event("s2")});
  auto ann = live.as("tok-annotator");
  auto r = ann.get(kApi + "/events");
  ASSERT_EQ(r.status, 200) << r.raw;
  ASSERT_EQ(r.body["items"].size(), 2u);
  EXPECT_TRUE(r.body["items"][0]["group_sighting_id"].is_null());

  r = ann.post(kApi + "/events/sync", json::object());
  ASSERT_EQ(r.status, 200) << r.raw;
  EXPECT_EQ(r.body["created"].size(), 2u);
  r = ann.post(kApi + "/events/sync", json::object());
  EXPECT_EQ(r.body["already_linked"], 2);
  EXPECT_FALSE(ann.get(kApi + "/events").body["items"][0]["group_sighting_id"].is_null());

  r = ann.get(kApi + "/group-sightings?page=1&page_size=1");
  EXPECT_EQ(r.body["total"], 2);
  EXPECT_EQ(r.body["items"].size(), 1u);
  EXPECT_EQ(ann.post(kApi + "/group-sightings", {{"event_id", "s1"}}).status, 409);

  live.feed.fail_next(100);
  r = ann.get(kApi + "/events");
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(r.body["error"]["code"], "FeedUnreachable");
}

TEST(Service, PhotosServedBack) {
  Live live;
  auto ann = live.as("tok-annotator");
  auto r = ann.post(kApi + "/group-sightings", {{"event", elephant_event("e1")}});
  const auto g = r.body["id"].get<registry::Id>();
  const auto big = testing_support::png_bytes(2000, 1000, 3);
  r = ann.upload(kApi + "/group-sightings/" + std::to_string(g) + "/photos", big, "big.png");
  ASSERT_EQ(r.status, 201) << r.raw;
  const auto id = std::to_string(r.body["id"].get<registry::Id>());
  EXPECT_EQ(ann.upload(kApi + "/group-sightings/" + std::to_string(g) + "/photos", big, "again.png").status, 409);

  httplib::Client raw(live.server->base_url());
  const httplib::Headers auth{{"Authorization", "Bearer tok-annotator"}};
  auto res = raw.Get(kApi + "/photos/" + id + "/original", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, big);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  res = raw.Get(kApi + "/photos/" + id + "/preview", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/jpeg");
  EXPECT_EQ(testing_support::decoded_size(res->body), cv::Size(1280, 640));

  // boxes outside the photo are refused
  r = ann.put(kApi + "/photos/" + id + "/boxes",
              {{"boxes", {{{"x", 1990}, {"y", 1}, {"w", 50}, {"h", 10}, {"subgroup_index", 1}}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "OutOfBounds");
}

TEST(Service, ReassignAndAudit) {
  Live live;
  auto ann = live.as("tok-annotator");
  auto rev = live.as("tok-reviewer");
  const auto [photo, sid] = one_sighting(ann, "e1");
  const std::string base = kApi + "/individual-sightings/" + std::to_string(sid);
  live.as("tok-coder").put(base + "/seek", {{"code", "F:AD:T2:U:U:N1:U:X0"}});
  auto r = rev.post(base + "/assign", {{"new_individual", {{"name", "Ada"}}}});
  ASSERT_EQ(r.status, 200) << r.raw;
  const auto first = r.body["id"].get<registry::Id>();
  EXPECT_EQ(rev.post(base + "/assign", {{"individual_id", first}}).status, 409);
  EXPECT_EQ(rev.post(base + "/reassign", {{"individual_id", 987654}}).status, 404);
  r = rev.post(base + "/reassign", {{"new_individual", {{"name", "Bea"}}}});
  ASSERT_EQ(r.status, 200) << r.raw;
  EXPECT_NE(r.body["id"], first);

  r = ann.get(kApi + "/individuals");
  EXPECT_EQ(r.body["total"], 2);
  r = ann.get(kApi + "/individuals/" + std::to_string(first));
  EXPECT_TRUE(r.body["sightings"].empty());

  r = ann.get(kApi + "/audit?subject_kind=individual_sighting&subject_id=" + std::to_string(sid));
  EXPECT_EQ(r.body["items"].size(), ann.get(base).body["version"].get<std::size_t>());
  const auto all = ann.get(kApi + "/audit").body["items"];
  const auto tail = ann.get(kApi + "/audit?after=2").body["items"];
  EXPECT_EQ(tail.size() + 2, all.size());
}
