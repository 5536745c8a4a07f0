#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "reid/error.hpp"
#include "reid/ingest/feed.hpp"

namespace reid::ingest {

FeedClient::FeedClient(FeedConfig cfg, std::function<Timestamp()> clock)
    : cfg_(std::move(cfg)), clock_(std::move(clock)) {
  if (cfg_.page_size < 1) throw Error(ErrorCode::ValidationError, "feed page size must be positive");
}

nlohmann::json FeedClient::get_page(Timestamp since, int page) const {
  httplib::Client cli(cfg_.base_url);
  cli.set_connection_timeout(cfg_.timeout);
  cli.set_read_timeout(cfg_.timeout);
  if (!cfg_.token.empty()) cli.set_bearer_token_auth(cfg_.token);
  const httplib::Params params{{"since", format_utc(since)},
                               {"page", std::to_string(page)},
                               {"page_size", std::to_string(cfg_.page_size)}};

  auto delay = cfg_.backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("feed: retrying page {} in {} ms ({})", page, delay.count(), last_error);
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = cli.Get(kEventsPath, params, httplib::Headers{});
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::Unauthorized, "feed rejected the token (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("data") || !body["data"].is_object() ||
        !body["data"].contains("results") || !body["data"]["results"].is_array()) {
      last_error = "unexpected page body";
      continue;
    }
    return body["data"];
  }
  throw Error(ErrorCode::FeedUnreachable, "feed " + cfg_.base_url + " unreachable: " + last_error);
}

std::vector<IngestEvent> FeedClient::fetch_active_events(Timestamp since) const {
  pages_ = 0;
  skipped_ = 0;
  const Timestamp horizon = clock_() + cfg_.future_tolerance;
  const Timestamp now = clock_();
  std::vector<IngestEvent> out;
  std::set<std::string> seen;
  for (int page = 1;; ++page) {
    const auto data = get_page(since, page);
    ++pages_;
    for (const auto& record : data["results"]) {
      IngestEvent e;
      try {
        e = event_from_json(record);
      } catch (const Error& err) {
        ++skipped_;
        spdlog::warn("feed: skipping malformed record: {}", err.what());
        continue;
      }
      if (e.event_type != kElephantSightingType) continue;
      if (e.time <= since) continue;
      if (e.time > horizon) {
        ++skipped_;
        spdlog::warn("feed: dropping event {} dated {}, beyond the clock skew tolerance", e.external_id,
                     format_utc(e.time));
        continue;
      }
      if (e.time > now) spdlog::warn("feed: event {} is dated in the future ({})", e.external_id, format_utc(e.time));
      if (!seen.insert(e.external_id).second) continue;
      out.push_back(std::move(e));
    }
    if (!data.contains("next") || data["next"].is_null()) break;
  }
  return out;
}

struct MockFeedServer::Impl {
  std::vector<nlohmann::json> fixtures;
  std::string token;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  int failures = 0;
  std::size_t requests = 0;
};

MockFeedServer::MockFeedServer(std::vector<nlohmann::json> fixtures, std::string token)
    : impl_(std::make_unique<Impl>()) {
  impl_->fixtures = std::move(fixtures);
  impl_->token = std::move(token);
  Impl* impl = impl_.get();
  impl->server.Get(kEventsPath, [impl, this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(impl->mutex);
      ++impl->requests;
      if (impl->failures > 0) {
        --impl->failures;
        res.status = 503;
        return;
      }
    }
    if (!impl->token.empty() && req.get_header_value("Authorization") != "Bearer " + impl->token) {
      res.status = 401;
      res.set_content(R"({"status":{"code":401,"message":"Authentication credentials were not provided."}})",
                      "application/json");
      return;
    }
    std::optional<Timestamp> since;
    if (req.has_param("since")) {
      since = parse_utc(req.get_param_value("since"));
      if (!since) {
        res.status = 400;
        return;
      }
    }
    auto int_param = [&](const char* name, int fallback) {
      if (!req.has_param(name)) return fallback;
      try {
        return std::stoi(req.get_param_value(name));
      } catch (const std::exception&) {
        return -1;
      }
    };
    const int page = int_param("page", 1);
    const int page_size = int_param("page_size", 100);
    if (page < 1 || page_size < 1) {
      res.status = 400;
      return;
    }

    std::vector<const nlohmann::json*> visible;
    for (const auto& f : impl->fixtures) {
      if (since && f.is_object() && f.contains("time") && f["time"].is_string()) {
        auto t = parse_utc(f["time"].get<std::string>());
        if (t && *t <= *since) continue;
      }
      visible.push_back(&f);
    }
    const std::size_t begin = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(page_size);
    const std::size_t end = std::min(visible.size(), begin + static_cast<std::size_t>(page_size));
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) results.push_back(*visible[i]);

    nlohmann::json next = nullptr;
    if (end < visible.size()) {
      std::string url = base_url() + kEventsPath + "?page=" + std::to_string(page + 1) +
                        "&page_size=" + std::to_string(page_size);
      if (since) url += "&since=" + httplib::detail::encode_query_param(format_utc(*since));
      next = url;
    }
    nlohmann::json body{{"data",
                         {{"count", visible.size()},
                          {"page", page},
                          {"page_size", page_size},
                          {"next", next},
                          {"results", results}}}};
    res.set_content(body.dump(), "application/json");
  });
}

MockFeedServer::~MockFeedServer() { stop(); }

int MockFeedServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(ErrorCode::StorageFault, "mock feed: cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockFeedServer::run(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::StorageFault, "mock feed: cannot listen");
}

void MockFeedServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockFeedServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void MockFeedServer::fail_next(int n) {
  std::lock_guard lock(impl_->mutex);
  impl_->failures = n;
}

std::size_t MockFeedServer::requests() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->requests;
}

std::vector<nlohmann::json> load_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open fixtures " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ValidationError, "fixtures " + path + " are not JSON");
  if (j.is_object() && j.contains("data")) j = j["data"].value("results", nlohmann::json::array());
  if (!j.is_array()) throw Error(ErrorCode::ValidationError, "fixtures must be an array of records");
  return {j.begin(), j.end()};
}

}  // namespace reid::ingest
