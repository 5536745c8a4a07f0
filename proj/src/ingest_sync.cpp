#include "reid/ingest/sync.hpp"

#include <spdlog/spdlog.h>

#include "reid/error.hpp"

namespace reid::ingest {

SyncResult sync_events(registry::Registry& reg, const std::vector<IngestEvent>& events, const std::string& actor) {
  SyncResult r;
  for (const auto& e : events) {
    if (reg.group_for_event(e.external_id)) {
      ++r.already_linked;
      continue;
    }
    try {
      r.created.push_back(reg.create_group_sighting(e, actor));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::DuplicateEvent) {
        ++r.already_linked;
        continue;
      }
      if (err.code() != ErrorCode::ValidationError) throw;
      spdlog::warn("ingest: event {} rejected: {}", e.external_id, err.what());
      r.rejected.push_back(e.external_id + ": " + err.what());
    }
  }
  return r;
}

}  // namespace reid::ingest
