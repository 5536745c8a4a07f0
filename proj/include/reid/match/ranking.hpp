#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reid/contour/descriptors.hpp"
#include "reid/match/index.hpp"
#include "reid/match/lnbnn.hpp"
#include "reid/seek.hpp"

namespace reid::match {

struct FusionConfig {
  double curv_coefficient = 0.1;
  std::size_t lnbnn_k = 5;
  SidePolicy side_policy = SidePolicy::Merged;
};

struct RankedMatch {
  IndividualId individual;
  double seek_distance = 0.0;
  double contour_score = 0.0;
  double fused_score = 0.0;
  std::size_t rank = 0;

  bool operator==(const RankedMatch&) const = default;
};

/// Combined score, lower is better: SEEK distance minus the scaled contour
/// evidence.
double fuse(double seek_distance, double contour_score, const FusionConfig& cfg);

struct CandidateScore {
  IndividualId individual;
  double seek_distance = 0.0;
  double contour_score = 0.0;
};

/// Ascending fused score; ties go to higher contour score, then lower SEEK
/// distance, then the lexicographically smaller id. Ranks start at 1.
std::vector<RankedMatch> rank_scored(std::vector<CandidateScore> candidates, const FusionConfig& cfg);

struct GalleryEntry {
  IndividualId individual;
  std::vector<seek::SeekCode> codes;  // codes of the individual's confirmed sightings
};

struct Query {
  seek::SeekCode code;
  std::vector<contour::Descriptor<double>> descriptors;  // empty when no contour was traced
};

/// SEEK distance from a query to an individual: the smallest distance to any
/// of its codes. An individual without codes counts as all wildcards.
double gallery_seek_distance(const seek::SeekCode& query, const GalleryEntry& entry, const seek::SeekWeights& w);

/// LNBNN contour evidence for a query, with k clamped so that a (k+1)-th
/// neighbor exists. Empty when there is no index or no query descriptor.
ScoreMap contour_scores(const std::vector<contour::Descriptor<double>>& query, const DescriptorIndex<double>* index,
                        const FusionConfig& cfg);

/// Scores every gallery individual and returns the full ranking. `index` may
/// be null; contour evidence is skipped when it is absent, when the query has
/// no descriptors, or when the contour coefficient is zero.
std::vector<RankedMatch> rank_candidates(const Query& query, std::span<const GalleryEntry> gallery,
                                         const DescriptorIndex<double>* index, const FusionConfig& cfg,
                                         const seek::SeekWeights& weights = {});

}  // namespace reid::match
