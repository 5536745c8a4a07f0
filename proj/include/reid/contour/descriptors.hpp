#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reid/contour/keypoints.hpp"

namespace reid::contour {

struct DescriptorOwner {
  std::string id;  // individual id, or a query tag
  Side side = Side::Right;

  bool operator==(const DescriptorOwner&) const = default;
};

template <typename Scalar = double>
struct Descriptor {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;  // unit norm
  double scale = 0.0;
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  DescriptorOwner owner;
};

struct DescriptorOptions {
  Eigen::Index dimension = 32;
  Eigen::Index min_span = 8;
};

/// Linear interpolation of `v` at `count` evenly spaced positions over [a, b].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> resample_segment(
    const Eigen::MatrixBase<Derived>& v, Eigen::Index a, Eigen::Index b, Eigen::Index count) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const Scalar pos = Scalar(a) + Scalar(b - a) * Scalar(j) / Scalar(count - 1);
    const auto lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), b);
    const auto hi = std::min<Eigen::Index>(lo + 1, b);
    const Scalar t = pos - Scalar(lo);
    out(j) = (Scalar(1) - t) * v(lo) + t * v(hi);
  }
  return out;
}

/// One descriptor per same-scale keypoint pair whose span reaches
/// `min_span`: the curvature between the two keypoints resampled to a fixed
/// length and L2-normalized.
template <typename Scalar>
std::vector<Descriptor<Scalar>> extract_descriptors(const CurvatureProfile<Scalar>& profile,
                                                    const std::vector<Keypoint>& keypoints,
                                                    const DescriptorOwner& owner,
                                                    const DescriptorOptions& opts = {}) {
  std::vector<Descriptor<Scalar>> out;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    for (std::size_t j = i + 1; j < keypoints.size(); ++j) {
      const Keypoint& ka = keypoints[i];
      const Keypoint& kb = keypoints[j];
      if (ka.scale_index != kb.scale_index) continue;
      const Eigen::Index a = std::min(ka.index, kb.index);
      const Eigen::Index b = std::max(ka.index, kb.index);
      if (b - a < opts.min_span) continue;
      const auto row = profile.values.row(static_cast<Eigen::Index>(ka.scale_index)).transpose();
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vec = resample_segment(row, a, b, opts.dimension);
      const Scalar norm = vec.norm();
      if (!(norm > Scalar(0))) continue;
      vec /= norm;
      out.push_back({std::move(vec), ka.scale, a, b, owner});
    }
  }
  return out;
}

}  // namespace reid::contour
