#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "reid/registry/model.hpp"

namespace reid::eval {

struct SeekReport {
  std::size_t codes = 0;
  // per slot: value -> fraction of codes carrying it
  std::array<std::map<std::string, double>, seek::kSlotCount> frequency;
  // agreement over individuals with at least two coded sightings
  std::size_t agreement_groups = 0;
  std::optional<std::array<double, seek::kSlotCount>> agreement;
};

/// Attribute frequencies over every coded sighting, plus within-individual
/// pairwise agreement. Throws EmptyInput when no sighting is coded.
SeekReport seek_reports(const registry::RegistryData& data);

}  // namespace reid::eval
