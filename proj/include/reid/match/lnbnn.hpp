#pragma once

#include <map>
#include <optional>
#include <span>

#include "reid/match/index.hpp"

namespace reid::match {

using ScoreMap = std::map<IndividualId, double>;

inline double score_of(const ScoreMap& scores, const IndividualId& id) {
  auto it = scores.find(id);
  return it == scores.end() ? 0.0 : it->second;
}

/// Local naive Bayes nearest neighbor evidence. Each query descriptor finds
/// its k+1 nearest gallery descriptors; every individual present among the
/// first k gains d_{k+1}^2 - d_c^2, with d_c its closest hit. Individuals
/// never hit are absent from the map (score 0).
///
/// Under PerSide a query descriptor only searches gallery entries of its own
/// ear side and the per-side evidence is summed.
template <typename Scalar>
ScoreMap lnbnn_score(std::span<const contour::Descriptor<Scalar>> query, const DescriptorIndex<Scalar>& idx,
                     std::size_t k, SidePolicy policy = SidePolicy::Merged) {
  if (k < 1) throw Error(ErrorCode::ValidationError, "lnbnn k must be at least 1");
  if (idx.size() <= k) {
    throw Error(ErrorCode::IndexTooSmall, "index holds " + std::to_string(idx.size()) +
                                              " descriptors, lnbnn needs more than k=" + std::to_string(k));
  }
  ScoreMap scores;
  auto accumulate = [&](const std::vector<Neighbor>& hits) {
    const double bound = hits[k].squared_distance;
    std::map<IndividualId, double> closest;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& id = idx.entries()[static_cast<std::size_t>(hits[i].entry)].individual;
      closest.try_emplace(id, hits[i].squared_distance);  // hits are ascending
    }
    for (const auto& [id, d2] : closest) scores[id] += bound - d2;
  };
  auto search = [&](std::optional<contour::Side> side) {
    std::vector<const contour::Descriptor<Scalar>*> batch;
    for (const auto& q : query) {
      if (!side || q.owner.side == *side) batch.push_back(&q);
    }
    if (batch.empty()) return;
    typename DescriptorIndex<Scalar>::Matrix m(static_cast<Eigen::Index>(batch.size()), idx.dimension());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i]->vector.size() != idx.dimension()) {
        throw Error(ErrorCode::ValidationError, "query descriptor dimension does not match the index");
      }
      m.row(static_cast<Eigen::Index>(i)) = batch[i]->vector.transpose();
    }
    for (const auto& hits : idx.nearest_batch(m, k + 1, side)) accumulate(hits);
  };
  if (policy == SidePolicy::PerSide) {
    for (auto side : {contour::Side::Left, contour::Side::Right}) {
      if (idx.count(side) > k) search(side);
    }
  } else {
    search(std::nullopt);
  }
  return scores;
}

}  // namespace reid::match
