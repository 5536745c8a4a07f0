#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reid/contour/pipeline.hpp"
#include "reid/match/ranking.hpp"
#include "reid/registry/model.hpp"

namespace reid::eval {

enum class Method { Seek, Curv, Hybrid };
std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view s);

struct Protocol {
  std::size_t codes_per_individual = 2;  // gallery sightings per individual
  std::vector<Method> methods{Method::Seek, Method::Curv, Method::Hybrid};
  std::vector<std::size_t> ks{1, 5, 10, 15};
  std::uint64_t seed = 1;
};

struct TopkResult {
  std::size_t individuals = 0;  // evaluated individuals
  std::size_t queries = 0;
  std::vector<std::size_t> ks;
  // method -> accuracy per k, same order as ks
  std::map<Method, std::vector<double>> accuracy;
  // method -> rank of the true individual for each query (1-based)
  std::map<Method, std::vector<std::size_t>> ranks;

  double at(Method m, std::size_t k) const;
};

/// Held-out top-k retrieval over confirmed sightings. For each individual with
/// more than `codes_per_individual` coded sightings, a seeded shuffle picks the
/// gallery sightings and every remaining one is a query. Seek ranks by SEEK
/// distance alone, Curv by contour evidence alone, Hybrid by the fused score.
TopkResult eval_topk(const registry::RegistryData& data, const Protocol& protocol,
                     const match::FusionConfig& fusion = {}, const contour::ContourConfig& contour_cfg = {},
                     const seek::SeekWeights& weights = {});

}  // namespace reid::eval
