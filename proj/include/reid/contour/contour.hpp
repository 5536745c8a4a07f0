#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "reid/error.hpp"

namespace reid::contour {

enum class Side : std::uint8_t { Left, Right };

std::string_view to_string(Side side) noexcept;
Side side_from_string(std::string_view text);

/// N x 2 point matrix, one (x, y) per row, in curve order.
template <typename Scalar>
using Points = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

template <typename Scalar = double>
struct Contour {
  Points<Scalar> points;
  Side side = Side::Right;
  std::string source;  // sighting id or query tag
};

struct NormalizeOptions {
  Eigen::Index resample_count = 256;
  Eigen::Index min_points = 32;
  bool mirror_left = true;
};

template <typename Derived>
typename Derived::Scalar arc_length(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  Scalar len(0);
  for (Eigen::Index i = 1; i < pts.rows(); ++i) len += (pts.row(i) - pts.row(i - 1)).norm();
  return len;
}

/// Drops consecutive repeated points.
template <typename Scalar>
Points<Scalar> drop_repeats(const Points<Scalar>& pts) {
  Points<Scalar> out(pts.rows(), 2);
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (n > 0 && pts.row(i) == out.row(n - 1)) continue;
    out.row(n++) = pts.row(i);
  }
  out.conservativeResize(n, 2);
  return out;
}

/// Resamples a polyline to `count` points spaced uniformly by arc length.
/// The first and last input points are kept.
template <typename Scalar>
Points<Scalar> resample_uniform(const Points<Scalar>& pts, Eigen::Index count) {
  const Eigen::Index n = pts.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cumulative(n);
  cumulative(0) = Scalar(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    cumulative(i) = cumulative(i - 1) + (pts.row(i) - pts.row(i - 1)).norm();
  }
  const Scalar total = cumulative(n - 1);

  Points<Scalar> out(count, 2);
  Eigen::Index seg = 0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const Scalar target = total * Scalar(k) / Scalar(count - 1);
    while (seg < n - 2 && cumulative(seg + 1) < target) ++seg;
    const Scalar seg_len = cumulative(seg + 1) - cumulative(seg);
    Scalar t = seg_len > Scalar(0) ? (target - cumulative(seg)) / seg_len : Scalar(0);
    t = std::clamp(t, Scalar(0), Scalar(1));
    out.row(k) = pts.row(seg) + t * (pts.row(seg + 1) - pts.row(seg));
  }
  out.row(count - 1) = pts.row(n - 1);
  return out;
}

/// Resamples to a fixed count by arc length, centers on the centroid and
/// scales to unit arc length. Left-ear contours are mirrored in x so both
/// sides share one descriptor space.
template <typename Scalar>
Contour<Scalar> normalize_contour(const Contour<Scalar>& c, const NormalizeOptions& opts = {}) {
  if (!c.points.allFinite()) {
    throw Error(ErrorCode::DegenerateContour, "contour has non-finite coordinates");
  }
  Points<Scalar> pts = drop_repeats<Scalar>(c.points);
  if (pts.rows() < opts.min_points) {
    throw Error(ErrorCode::DegenerateContour,
                "contour has " + std::to_string(pts.rows()) + " distinct points, need " +
                    std::to_string(opts.min_points));
  }
  if (!(arc_length(pts) > Scalar(0))) {
    throw Error(ErrorCode::DegenerateContour, "contour has zero length");
  }
  if (opts.mirror_left && c.side == Side::Left) pts.col(0) = -pts.col(0);

  Points<Scalar> out = resample_uniform<Scalar>(pts, opts.resample_count);
  out.rowwise() -= out.colwise().mean();
  out /= arc_length(out);
  return {std::move(out), c.side, c.source};
}

}  // namespace reid::contour
