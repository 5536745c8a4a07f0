#include "reid/match/ranking.hpp"

#include <algorithm>
#include <limits>

#include "reid/match/lnbnn.hpp"

namespace reid::match {

double fuse(double seek_distance, double contour_score, const FusionConfig& cfg) {
  return seek_distance - cfg.curv_coefficient * contour_score;
}

std::vector<RankedMatch> rank_scored(std::vector<CandidateScore> candidates, const FusionConfig& cfg) {
  std::vector<RankedMatch> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) {
    out.push_back({std::move(c.individual), c.seek_distance, c.contour_score,
                   fuse(c.seek_distance, c.contour_score, cfg), 0});
  }
  std::sort(out.begin(), out.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.fused_score != b.fused_score) return a.fused_score < b.fused_score;
    if (a.contour_score != b.contour_score) return a.contour_score > b.contour_score;
    if (a.seek_distance != b.seek_distance) return a.seek_distance < b.seek_distance;
    return a.individual < b.individual;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

double gallery_seek_distance(const seek::SeekCode& query, const GalleryEntry& entry, const seek::SeekWeights& w) {
  if (entry.codes.empty()) {
    double sum = 0.0;
    for (double x : w.slot) sum += x * w.wildcard_penalty;
    return w.normalization == seek::Normalization::SlotCount ? sum / seek::kSlotCount : w.wildcard_penalty;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& code : entry.codes) best = std::min(best, seek::seek_distance(query, code, w));
  return best;
}

ScoreMap contour_scores(const std::vector<contour::Descriptor<double>>& query, const DescriptorIndex<double>* index,
                        const FusionConfig& cfg) {
  if (!index || index->size() < 2 || query.empty()) return {};
  const std::size_t k = std::min(cfg.lnbnn_k, index->size() - 1);
  if (k < 1) return {};
  return lnbnn_score(std::span<const contour::Descriptor<double>>(query), *index, k, cfg.side_policy);
}

std::vector<RankedMatch> rank_candidates(const Query& query, std::span<const GalleryEntry> gallery,
                                         const DescriptorIndex<double>* index, const FusionConfig& cfg,
                                         const seek::SeekWeights& weights) {
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "no confirmed individuals to rank");
  if (cfg.curv_coefficient < 0.0) {
    throw Error(ErrorCode::ValidationError, "contour coefficient must be non-negative");
  }

  ScoreMap contour;
  if (cfg.curv_coefficient > 0.0) contour = contour_scores(query.descriptors, index, cfg);

  std::vector<CandidateScore> candidates;
  candidates.reserve(gallery.size());
  for (const auto& g : gallery) {
    candidates.push_back({g.individual, gallery_seek_distance(query.code, g, weights), score_of(contour, g.individual)});
  }
  return rank_scored(std::move(candidates), cfg);
}

}  // namespace reid::match
