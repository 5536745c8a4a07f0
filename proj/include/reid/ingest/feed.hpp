#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/ingest/event.hpp"

namespace reid::ingest {

// Feed wire format (a minimal subset of a REST event API):
//
//   GET <base_url>/api/v1.0/activity/events?since=<ISO-8601>&page=<n>&page_size=<m>
//   Authorization: Bearer <token>
//
//   200 {"data": {"count": <total>, "page": <n>, "page_size": <m>,
//                 "next": <url of page n+1> | null, "results": [<record>, ...]}}
//
//   record: {"id": str, "event_type": str, "time": ISO-8601,
//            "location": {"latitude": num, "longitude": num} | null,
//            "reported_by": {"username": str},
//            "event_details": {"group_size": int, "composition": str}}
inline constexpr const char* kEventsPath = "/api/v1.0/activity/events";

struct FeedConfig {
  std::string base_url = "http://127.0.0.1:8090";
  std::string token;
  int page_size = 100;
  int retries = 3;                                   // extra attempts per page
  std::chrono::milliseconds backoff{200};            // doubled after each failure
  std::chrono::seconds timeout{5};
  std::chrono::seconds future_tolerance{300};        // clock skew accepted with a warning
};

/// Pulls elephant-sighting events from the feed. Records that fail to parse
/// are skipped and logged; other event types are ignored; ids are deduped.
class FeedClient {
 public:
  explicit FeedClient(FeedConfig cfg, std::function<Timestamp()> clock = now_utc);

  /// Events strictly newer than `since`. Throws FeedUnreachable after the
  /// retries are spent, Unauthorized when the feed rejects the token.
  std::vector<IngestEvent> fetch_active_events(Timestamp since) const;

  /// Raw pages, for diagnostics.
  std::size_t last_page_count() const noexcept { return pages_; }
  std::size_t last_skipped() const noexcept { return skipped_; }

 private:
  nlohmann::json get_page(Timestamp since, int page) const;

  FeedConfig cfg_;
  std::function<Timestamp()> clock_;
  mutable std::size_t pages_ = 0;
  mutable std::size_t skipped_ = 0;
};

/// Development feed serving fixture records over the wire format above.
/// Fixtures are served verbatim (malformed ones included); those with a
/// parseable time are filtered by `since`.
class MockFeedServer {
 public:
  explicit MockFeedServer(std::vector<nlohmann::json> fixtures, std::string token = {});
  ~MockFeedServer();
  MockFeedServer(const MockFeedServer&) = delete;
  MockFeedServer& operator=(const MockFeedServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

  int port() const noexcept { return port_; }
  std::string base_url() const;
  /// The next `n` requests answer 503.
  void fail_next(int n);
  std::size_t requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::string host_;
};

/// Loads fixtures from a JSON file holding either an array of records or a
/// feed page ({"data": {"results": [...]}}).
std::vector<nlohmann::json> load_fixtures(const std::string& path);

}  // namespace reid::ingest
