#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>

#include "reid/gallery.hpp"
#include "reid/registry/registry.hpp"

namespace reid::service {

/// One immutable index generation with the gallery it was built from.
struct IndexState {
  std::uint64_t generation = 0;
  std::uint64_t gallery_revision = 0;
  std::int64_t registry_version = 0;
  std::vector<match::GalleryEntry> entries;
  std::size_t individuals = 0;
  std::optional<match::DescriptorIndex<double>> index;  // absent when no contour is indexed
};

/// Keeps the match index in step with the registry. Readers take a shared
/// pointer to the current generation; a rebuild swaps in a new one and
/// requests already holding the old generation finish on it.
class IndexManager {
 public:
  IndexManager(const registry::Registry& reg, contour::ContourConfig cfg);

  /// Current generation, rebuilt first if the gallery changed.
  std::shared_ptr<const IndexState> current();
  /// Unconditional rebuild.
  std::shared_ptr<const IndexState> rebuild();
  /// Current generation without checking for staleness.
  std::shared_ptr<const IndexState> peek() const;
  bool stale() const;

 private:
  std::shared_ptr<const IndexState> build_locked();

  const registry::Registry& reg_;
  contour::ContourConfig cfg_;
  std::mutex build_mutex_;
  mutable std::mutex ptr_mutex_;
  std::shared_ptr<const IndexState> state_;
};

}  // namespace reid::service
