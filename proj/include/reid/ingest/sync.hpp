#pragma once

#include <string>
#include <vector>

#include "reid/ingest/event.hpp"
#include "reid/registry/registry.hpp"

namespace reid::ingest {

struct SyncResult {
  std::vector<registry::GroupSighting> created;
  std::size_t already_linked = 0;
  std::vector<std::string> rejected;  // "<event id>: <reason>"
};

/// Opens a group sighting for every event not yet linked. Running it again
/// on the same events creates nothing.
SyncResult sync_events(registry::Registry& reg, const std::vector<IngestEvent>& events, const std::string& actor);

}  // namespace reid::ingest
