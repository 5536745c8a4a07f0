#pragma once

#include <vector>

#include "reid/contour/descriptors.hpp"

namespace reid::contour {

struct ContourConfig {
  NormalizeOptions normalize;
  CurvatureOptions curvature;
  KeypointOptions keypoints;
  DescriptorOptions descriptors;
};

/// normalize -> integral curvature -> keypoints -> descriptors.
template <typename Scalar>
std::vector<Descriptor<Scalar>> describe(const Contour<Scalar>& raw, const DescriptorOwner& owner,
                                         const ContourConfig& cfg = {}) {
  const Contour<Scalar> c = normalize_contour(raw, cfg.normalize);
  const CurvatureProfile<Scalar> profile = integral_curvature(c, cfg.curvature);
  const std::vector<Keypoint> kps = extract_keypoints(profile, cfg.keypoints);
  return extract_descriptors(profile, kps, owner, cfg.descriptors);
}

}  // namespace reid::contour
