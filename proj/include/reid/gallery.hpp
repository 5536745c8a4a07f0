#pragma once

#include <string>
#include <vector>

#include "reid/contour/pipeline.hpp"
#include "reid/match/index.hpp"
#include "reid/match/ranking.hpp"
#include "reid/registry/model.hpp"

namespace reid {

/// Key of an individual inside the match index.
std::string individual_key(registry::Id id);

/// Descriptors of every contour on a sighting, owned by `owner`.
std::vector<contour::Descriptor<double>> sighting_descriptors(const registry::IndividualSighting& s,
                                                              const std::string& owner,
                                                              const contour::ContourConfig& cfg);

/// Ranking input for a coded sighting; throws NotCoded otherwise.
match::Query make_query(const registry::IndividualSighting& s, const contour::ContourConfig& cfg);

/// The confirmed gallery: one entry per individual (ordered by id), with the
/// codes and contour descriptors of its assigned sightings.
struct Gallery {
  std::vector<match::GalleryEntry> entries;
  std::vector<match::GalleryDescriptors<double>> descriptors;

  std::size_t descriptor_count() const;
  /// Empty when the gallery has no descriptors at all.
  std::optional<match::DescriptorIndex<double>> build_index(std::uint64_t previous_generation,
                                                            const std::string& schema_version) const;
};

Gallery build_gallery(const registry::RegistryData& data, const contour::ContourConfig& cfg);

}  // namespace reid
