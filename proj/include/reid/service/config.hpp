#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reid/contour/pipeline.hpp"
#include "reid/ingest/feed.hpp"
#include "reid/match/ranking.hpp"

namespace reid::service {

/// Ordered: each role may do everything the ones before it may.
enum class Role { Annotator, Coder, Reviewer, Admin };
std::string_view to_string(Role r) noexcept;
Role role_from_string(std::string_view s);

struct User {
  std::string name;
  std::string token;
  Role role = Role::Annotator;
};

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::filesystem::path db_path = "reid.db";
  std::filesystem::path blob_dir = "blobs";
  std::optional<std::filesystem::path> schema_path;  // builtin schema when absent
  ingest::FeedConfig feed;
  match::FusionConfig fusion;
  contour::ContourConfig contour;
  std::size_t default_top_k = 15;
  std::vector<User> users;

  const User* user_for_token(std::string_view token) const;
};

// {"bind", "port", "db_path", "blob_dir", "schema_path",
//  "feed": {"base_url", "token", "page_size", "retries", "backoff_ms", "timeout_s"},
//  "fusion": {"curv_coefficient", "lnbnn_k", "side_policy": "merged"|"per_side"},
//  "contour": {"resample", "scales"},
//  "default_top_k",
//  "users": [{"name", "token", "role": "annotator"|"coder"|"reviewer"|"admin"}]}
//
// Relative paths resolve against `base_dir`. REID_FEED_TOKEN, when set,
// replaces feed.token.
ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& path);

}  // namespace reid::service
