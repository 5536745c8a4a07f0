#include "reid/service/index_manager.hpp"

#include <spdlog/spdlog.h>

namespace reid::service {

IndexManager::IndexManager(const registry::Registry& reg, contour::ContourConfig cfg)
    : reg_(reg), cfg_(std::move(cfg)) {}

std::shared_ptr<const IndexState> IndexManager::peek() const {
  std::lock_guard lock(ptr_mutex_);
  return state_;
}

bool IndexManager::stale() const {
  auto s = peek();
  return !s || s->gallery_revision != reg_.gallery_revision();
}

std::shared_ptr<const IndexState> IndexManager::current() {
  if (auto s = peek(); s && s->gallery_revision == reg_.gallery_revision()) return s;
  std::lock_guard build(build_mutex_);
  if (auto s = peek(); s && s->gallery_revision == reg_.gallery_revision()) return s;
  return build_locked();
}

std::shared_ptr<const IndexState> IndexManager::rebuild() {
  std::lock_guard build(build_mutex_);
  return build_locked();
}

std::shared_ptr<const IndexState> IndexManager::build_locked() {
  auto previous = peek();
  auto next = std::make_shared<IndexState>();
  // Revision first: a change racing with the copy leaves the new state
  // looking stale, so the next request rebuilds again.
  next->gallery_revision = reg_.gallery_revision();
  const auto data = reg_.data();
  next->registry_version = data.version;
  next->generation = previous ? previous->generation + 1 : 1;

  Gallery g = build_gallery(data, cfg_);
  next->individuals = g.entries.size();
  if (g.descriptor_count() > 0) next->index = g.build_index(next->generation - 1, data.schema_version);
  next->entries = std::move(g.entries);

  spdlog::info("index: generation {} with {} individuals, {} descriptors", next->generation, next->individuals,
               next->index ? next->index->size() : 0);
  std::shared_ptr<const IndexState> out = std::move(next);
  std::lock_guard lock(ptr_mutex_);
  state_ = out;
  return out;
}

}  // namespace reid::service
