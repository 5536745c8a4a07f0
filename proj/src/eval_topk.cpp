#include "reid/eval/topk.hpp"

#include <algorithm>

#include "reid/error.hpp"
#include "reid/eval/random.hpp"
#include "reid/gallery.hpp"

namespace reid::eval {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Seek: return "seek";
    case Method::Curv: return "curv";
    case Method::Hybrid: return "hybrid";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "seek") return Method::Seek;
  if (s == "curv") return Method::Curv;
  if (s == "hybrid") return Method::Hybrid;
  throw Error(ErrorCode::ValidationError, "unknown method '" + std::string(s) + "'");
}

double TopkResult::at(Method m, std::size_t k) const {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw Error(ErrorCode::NotFound, "k=" + std::to_string(k) + " was not evaluated");
  return accuracy.at(m)[static_cast<std::size_t>(it - ks.begin())];
}

namespace {

struct Split {
  registry::Id individual;
  std::vector<registry::Id> gallery;
  std::vector<registry::Id> queries;
};

std::vector<Split> split_sightings(const registry::RegistryData& data, std::size_t quota, Rng& rng) {
  std::vector<Split> out;
  for (const auto& [id, ind] : data.individuals) {
    std::vector<registry::Id> coded;
    for (registry::Id sid : ind.sightings) {
      if (data.sighting(sid).code) coded.push_back(sid);
    }
    if (coded.size() <= quota) continue;
    rng.shuffle(coded);
    Split s{id, {coded.begin(), coded.begin() + static_cast<std::ptrdiff_t>(quota)},
            {coded.begin() + static_cast<std::ptrdiff_t>(quota), coded.end()}};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TopkResult eval_topk(const registry::RegistryData& data, const Protocol& protocol, const match::FusionConfig& fusion,
                     const contour::ContourConfig& contour_cfg, const seek::SeekWeights& weights) {
  if (protocol.codes_per_individual < 1) {
    throw Error(ErrorCode::ValidationError, "codes_per_individual must be at least 1");
  }
  if (protocol.ks.empty()) throw Error(ErrorCode::ValidationError, "no k values requested");
  if (fusion.curv_coefficient < 0.0) throw Error(ErrorCode::ValidationError, "contour coefficient must be non-negative");

  Rng rng(protocol.seed);
  const auto splits = split_sightings(data, protocol.codes_per_individual, rng);
  std::size_t query_count = 0;
  for (const auto& s : splits) query_count += s.queries.size();
  if (query_count == 0) {
    throw Error(ErrorCode::InsufficientData, "no individual has more than " +
                                                 std::to_string(protocol.codes_per_individual) + " coded sightings");
  }

  // Gallery: every evaluated individual, restricted to its gallery sightings.
  std::vector<match::GalleryEntry> entries;
  std::vector<match::GalleryDescriptors<double>> descriptors;
  for (const auto& s : splits) {
    const std::string key = individual_key(s.individual);
    match::GalleryEntry entry{key, {}};
    match::GalleryDescriptors<double> desc{key, {}};
    for (registry::Id sid : s.gallery) {
      const auto& sighting = data.sighting(sid);
      entry.codes.push_back(*sighting.code);
      auto d = sighting_descriptors(sighting, key, contour_cfg);
      desc.descriptors.insert(desc.descriptors.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
    }
    entries.push_back(std::move(entry));
    if (!desc.descriptors.empty()) descriptors.push_back(std::move(desc));
  }
  std::optional<match::DescriptorIndex<double>> index;
  if (!descriptors.empty()) {
    index = match::build_index(std::span<const match::GalleryDescriptors<double>>(descriptors), 0, data.schema_version);
  }

  TopkResult result;
  result.individuals = splits.size();
  result.queries = query_count;
  result.ks = protocol.ks;
  for (Method m : protocol.methods) result.ranks[m];

  const bool need_contour =
      std::any_of(protocol.methods.begin(), protocol.methods.end(), [&](Method m) {
        return m == Method::Curv || (m == Method::Hybrid && fusion.curv_coefficient > 0.0);
      });

  for (const auto& s : splits) {
    const std::string truth = individual_key(s.individual);
    for (registry::Id qid : s.queries) {
      const match::Query query = make_query(data.sighting(qid), contour_cfg);
      match::ScoreMap contour;
      if (need_contour) contour = match::contour_scores(query.descriptors, index ? &*index : nullptr, fusion);

      for (Method m : protocol.methods) {
        std::vector<match::CandidateScore> candidates;
        candidates.reserve(entries.size());
        for (const auto& e : entries) {
          const double sd = m == Method::Curv ? 0.0 : match::gallery_seek_distance(query.code, e, weights);
          double cs = 0.0;
          if (m == Method::Curv || (m == Method::Hybrid && fusion.curv_coefficient > 0.0)) {
            cs = match::score_of(contour, e.individual);
          }
          if (m == Method::Seek) cs = 0.0;
          candidates.push_back({e.individual, sd, cs});
        }
        match::FusionConfig cfg = fusion;
        if (m == Method::Curv) cfg.curv_coefficient = 1.0;
        const auto ranked = match::rank_scored(std::move(candidates), cfg);
        const auto hit = std::find_if(ranked.begin(), ranked.end(),
                                      [&](const match::RankedMatch& r) { return r.individual == truth; });
        result.ranks[m].push_back(hit->rank);
      }
    }
  }

  for (const auto& [m, ranks] : result.ranks) {
    auto& acc = result.accuracy[m];
    for (std::size_t k : protocol.ks) {
      const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
      acc.push_back(static_cast<double>(hits) / static_cast<double>(ranks.size()));
    }
  }
  return result;
}

}  // namespace reid::eval
