#include "reid/eval/reports.hpp"

#include "reid/error.hpp"

namespace reid::eval {

SeekReport seek_reports(const registry::RegistryData& data) {
  SeekReport r;
  std::array<std::map<std::string, std::size_t>, seek::kSlotCount> counts;
  for (const auto& [id, s] : data.sightings) {
    if (!s.code) continue;
    ++r.codes;
    for (auto slot : seek::kAllSlots) ++counts[seek::index_of(slot)][s.code->value(slot)];
  }
  if (r.codes == 0) throw Error(ErrorCode::EmptyInput, "registry holds no SEEK codes");
  for (std::size_t i = 0; i < seek::kSlotCount; ++i) {
    for (const auto& [value, n] : counts[i]) {
      r.frequency[i][value] = static_cast<double>(n) / static_cast<double>(r.codes);
    }
  }

  std::vector<std::vector<seek::SeekCode>> groups;
  for (const auto& [id, ind] : data.individuals) {
    std::vector<seek::SeekCode> codes;
    for (registry::Id sid : ind.sightings) {
      if (const auto& c = data.sighting(sid).code) codes.push_back(*c);
    }
    if (codes.size() >= 2) groups.push_back(std::move(codes));
  }
  r.agreement_groups = groups.size();
  if (!groups.empty()) r.agreement = seek::attribute_agreement(groups);
  return r;
}

}  // namespace reid::eval
