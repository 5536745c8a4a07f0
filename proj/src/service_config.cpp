#include "reid/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "reid/error.hpp"

namespace reid::service {

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Annotator: return "annotator";
    case Role::Coder: return "coder";
    case Role::Reviewer: return "reviewer";
    case Role::Admin: return "admin";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  if (s == "annotator") return Role::Annotator;
  if (s == "coder") return Role::Coder;
  if (s == "reviewer") return Role::Reviewer;
  if (s == "admin") return Role::Admin;
  throw Error(ErrorCode::ValidationError, "unknown role '" + std::string(s) + "'");
}

const User* ServiceConfig::user_for_token(std::string_view token) const {
  if (token.empty()) return nullptr;
  for (const auto& u : users) {
    if (u.token == token) return &u;
  }
  return nullptr;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ValidationError, "service config must be an object");
  ServiceConfig c;
  try {
    c.bind = j.value("bind", c.bind);
    c.port = j.value("port", c.port);
    if (j.contains("db_path")) c.db_path = resolve(base_dir, j["db_path"].get<std::string>());
    if (j.contains("blob_dir")) c.blob_dir = resolve(base_dir, j["blob_dir"].get<std::string>());
    if (j.contains("schema_path") && !j["schema_path"].is_null()) {
      c.schema_path = resolve(base_dir, j["schema_path"].get<std::string>());
    }
    if (j.contains("feed")) {
      const auto& f = j["feed"];
      c.feed.base_url = f.value("base_url", c.feed.base_url);
      c.feed.token = f.value("token", c.feed.token);
      c.feed.page_size = f.value("page_size", c.feed.page_size);
      c.feed.retries = f.value("retries", c.feed.retries);
      c.feed.backoff = std::chrono::milliseconds(f.value("backoff_ms", static_cast<int>(c.feed.backoff.count())));
      c.feed.timeout = std::chrono::seconds(f.value("timeout_s", static_cast<int>(c.feed.timeout.count())));
    }
    if (j.contains("fusion")) {
      const auto& f = j["fusion"];
      c.fusion.curv_coefficient = f.value("curv_coefficient", c.fusion.curv_coefficient);
      c.fusion.lnbnn_k = f.value("lnbnn_k", c.fusion.lnbnn_k);
      const std::string policy = f.value("side_policy", std::string("merged"));
      if (policy == "merged") {
        c.fusion.side_policy = match::SidePolicy::Merged;
      } else if (policy == "per_side") {
        c.fusion.side_policy = match::SidePolicy::PerSide;
      } else {
        throw Error(ErrorCode::ValidationError, "unknown side_policy '" + policy + "'");
      }
    }
    if (j.contains("contour")) {
      const auto& f = j["contour"];
      c.contour.normalize.resample_count = f.value("resample", c.contour.normalize.resample_count);
      if (f.contains("scales")) c.contour.curvature.scales = f["scales"].get<std::vector<double>>();
    }
    c.default_top_k = j.value("default_top_k", c.default_top_k);
    for (const auto& u : j.value("users", nlohmann::json::array())) {
      c.users.push_back({u.at("name").get<std::string>(), u.at("token").get<std::string>(),
                         role_from_string(u.at("role").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("service config: ") + e.what());
  }
  if (c.fusion.curv_coefficient < 0.0) throw Error(ErrorCode::ValidationError, "curv_coefficient must be >= 0");
  if (c.fusion.lnbnn_k < 1) throw Error(ErrorCode::ValidationError, "lnbnn_k must be >= 1");
  if (const char* token = std::getenv("REID_FEED_TOKEN"); token && *token) c.feed.token = token;
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open config " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ValidationError, "config " + path.string() + " is not valid JSON");
  return config_from_json(j, path.parent_path());
}

}  // namespace reid::service
