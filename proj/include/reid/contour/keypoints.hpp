#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "reid/contour/curvature.hpp"

namespace reid::contour {

enum class KeypointKind : std::uint8_t { Min, Max, Endpoint };

struct Keypoint {
  Eigen::Index index = 0;
  std::size_t scale_index = 0;
  double scale = 0.0;
  KeypointKind kind = KeypointKind::Endpoint;

  bool operator==(const Keypoint&) const = default;
};

struct KeypointOptions {
  Eigen::Index smoothing_window = 5;  // centered moving average, odd
  Eigen::Index endpoint_margin = 4;   // samples at each end never hold an extremum
};

/// Centered moving average; the window shrinks near the ends.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> moving_average(
    const Eigen::MatrixBase<Derived>& v, Eigen::Index window) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  const Eigen::Index half = std::max<Eigen::Index>(window, 1) / 2;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    out(i) = v.segment(lo, hi - lo + 1).sum() / Scalar(hi - lo + 1);
  }
  return out;
}

/// Strict local extrema of the smoothed curvature at every scale plus both
/// endpoints. Ordered by scale, then by index.
template <typename Scalar>
std::vector<Keypoint> extract_keypoints(const CurvatureProfile<Scalar>& profile, const KeypointOptions& opts = {}) {
  std::vector<Keypoint> out;
  const Eigen::Index n = profile.point_count();
  if (n == 0) return out;
  for (Eigen::Index s = 0; s < profile.values.rows(); ++s) {
    const double scale = static_cast<double>(profile.scales[static_cast<std::size_t>(s)]);
    const auto smoothed = moving_average(profile.values.row(s).transpose(), opts.smoothing_window);
    const auto si = static_cast<std::size_t>(s);
    out.push_back({0, si, scale, KeypointKind::Endpoint});
    const Eigen::Index lo = std::max<Eigen::Index>(1, opts.endpoint_margin);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 2, n - 1 - opts.endpoint_margin);
    for (Eigen::Index i = lo; i <= hi; ++i) {
      const Scalar v = smoothed(i);
      if (v > smoothed(i - 1) && v > smoothed(i + 1)) {
        out.push_back({i, si, scale, KeypointKind::Max});
      } else if (v < smoothed(i - 1) && v < smoothed(i + 1)) {
        out.push_back({i, si, scale, KeypointKind::Min});
      }
    }
    if (n > 1) out.push_back({n - 1, si, scale, KeypointKind::Endpoint});
  }
  return out;
}

}  // namespace reid::contour
