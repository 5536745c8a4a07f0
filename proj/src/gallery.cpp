#include "reid/gallery.hpp"

#include "reid/error.hpp"

namespace reid {

std::string individual_key(registry::Id id) { return std::to_string(id); }

std::vector<contour::Descriptor<double>> sighting_descriptors(const registry::IndividualSighting& s,
                                                              const std::string& owner,
                                                              const contour::ContourConfig& cfg) {
  std::vector<contour::Descriptor<double>> out;
  for (const auto& rec : s.contours) {
    const contour::Contour<double> c{rec.points, rec.side, std::to_string(s.id)};
    auto d = contour::describe(c, {owner, rec.side}, cfg);
    out.insert(out.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  }
  return out;
}

match::Query make_query(const registry::IndividualSighting& s, const contour::ContourConfig& cfg) {
  if (!s.code) throw Error(ErrorCode::NotCoded, "sighting " + std::to_string(s.id) + " has no SEEK code");
  return {*s.code, sighting_descriptors(s, "query:" + std::to_string(s.id), cfg)};
}

std::size_t Gallery::descriptor_count() const {
  std::size_t n = 0;
  for (const auto& g : descriptors) n += g.descriptors.size();
  return n;
}

std::optional<match::DescriptorIndex<double>> Gallery::build_index(std::uint64_t previous_generation,
                                                                   const std::string& schema_version) const {
  if (descriptor_count() == 0) return std::nullopt;
  return match::build_index(std::span<const match::GalleryDescriptors<double>>(descriptors), previous_generation,
                            schema_version);
}

Gallery build_gallery(const registry::RegistryData& data, const contour::ContourConfig& cfg) {
  Gallery g;
  for (const auto& [id, ind] : data.individuals) {
    if (ind.sightings.empty()) continue;
    const std::string key = individual_key(id);
    match::GalleryEntry entry{key, {}};
    match::GalleryDescriptors<double> desc{key, {}};
    for (registry::Id sid : ind.sightings) {
      const auto& s = data.sighting(sid);
      if (s.code) entry.codes.push_back(*s.code);
      auto d = sighting_descriptors(s, key, cfg);
      desc.descriptors.insert(desc.descriptors.end(), std::make_move_iterator(d.begin()),
                              std::make_move_iterator(d.end()));
    }
    g.entries.push_back(std::move(entry));
    if (!desc.descriptors.empty()) g.descriptors.push_back(std::move(desc));
  }
  return g;
}

}  // namespace reid
