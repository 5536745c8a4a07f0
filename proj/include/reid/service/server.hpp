#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "reid/error.hpp"
#include "reid/match/ranking.hpp"
#include "reid/service/config.hpp"

namespace reid::service {

/// HTTP status for a library error code.
int http_status(ErrorCode code) noexcept;

/// Match list as served by GET /individual-sightings/{id}/matches.
nlohmann::json matches_to_json(const std::vector<match::RankedMatch>& ranked, std::size_t top_k);

/// REST API over the registry. All routes live under /api/v1; see README for
/// the endpoint table.
class ApiServer {
 public:
  explicit ApiServer(ServiceConfig cfg);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept;
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reid::service
