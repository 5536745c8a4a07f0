#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "reid/contour/contour.hpp"

namespace reid::contour {

/// Side of the curve, relative to the direction of travel, whose disk area is
/// measured. Auto picks the side holding the mean of the contour points.
enum class InteriorSide { Auto, Left, Right };

struct CurvatureOptions {
  std::vector<double> scales{0.02, 0.04, 0.06, 0.08};  // fractions of arc length
  InteriorSide interior = InteriorSide::Auto;
};

/// Integral curvature, one row per scale, one column per contour point.
template <typename Scalar = double>
struct CurvatureProfile {
  std::vector<Scalar> scales;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  Eigen::Index point_count() const noexcept { return values.cols(); }
};

/// Left if the curve winds counter-clockwise around the mean of its points.
template <typename Scalar>
InteriorSide resolve_interior(const Points<Scalar>& pts, InteriorSide requested) {
  if (requested != InteriorSide::Auto) return requested;
  const Eigen::Matrix<Scalar, 1, 2> m = pts.colwise().mean();
  Scalar winding(0);
  for (Eigen::Index i = 0; i + 1 < pts.rows(); ++i) {
    const auto a = pts.row(i) - m;
    const auto b = pts.row(i + 1) - m;
    winding += a(0) * b(1) - a(1) * b(0);
  }
  return winding >= Scalar(0) ? InteriorSide::Left : InteriorSide::Right;
}

namespace detail {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// Parameter t >= 0 where |p + t d - c| = r, taking the far root. `p` lies
/// inside or on the circle.
template <typename Scalar>
Scalar exit_parameter(const Vec2<Scalar>& p, const Vec2<Scalar>& d, const Vec2<Scalar>& c, Scalar r) {
  const Vec2<Scalar> f = p - c;
  const Scalar a = d.squaredNorm();
  const Scalar b = f.dot(d);
  const Scalar cc = f.squaredNorm() - r * r;
  const Scalar disc = std::max(Scalar(0), b * b - a * cc);
  return (-b + std::sqrt(disc)) / a;
}

/// Walks from `center_index` in direction `step` (+1/-1) collecting points
/// inside the disk, then appends the boundary crossing. A walk that runs off
/// the end of the curve continues along the end tangent.
template <typename Scalar>
void walk_to_boundary(const Points<Scalar>& pts, Eigen::Index center_index, int step, Scalar r,
                      std::vector<Vec2<Scalar>>& out) {
  const Vec2<Scalar> c = pts.row(center_index).transpose();
  const Eigen::Index n = pts.rows();
  const Scalar r2 = r * r;
  Eigen::Index j = center_index;
  while (true) {
    const Eigen::Index next = j + step;
    const Vec2<Scalar> pj = pts.row(j).transpose();
    if (next < 0 || next >= n) {
      const Vec2<Scalar> prev = pts.row(j - step).transpose();
      const Vec2<Scalar> d = pj - prev;
      out.push_back(pj + exit_parameter<Scalar>(pj, d, c, r) * d);
      return;
    }
    const Vec2<Scalar> pn = pts.row(next).transpose();
    if ((pn - c).squaredNorm() > r2) {
      const Vec2<Scalar> d = pn - pj;
      out.push_back(pj + exit_parameter<Scalar>(pj, d, c, r) * d);
      return;
    }
    out.push_back(pn);
    j = next;
  }
}

}  // namespace detail

/// Fraction of the disk of radius `r` centered on point `i` that lies to the
/// left of the local curve. The region is bounded by the connected piece of
/// the curve through the center and the counter-clockwise circle arc from the
/// exit crossing back to the entry crossing; its area comes from Green's
/// theorem with the arc term integrated exactly.
template <typename Scalar>
Scalar left_disk_fraction(const Points<Scalar>& pts, Eigen::Index i, Scalar r) {
  using V = detail::Vec2<Scalar>;
  std::vector<V> back;
  std::vector<V> fwd;
  detail::walk_to_boundary<Scalar>(pts, i, -1, r, back);
  detail::walk_to_boundary<Scalar>(pts, i, +1, r, fwd);

  const V c = pts.row(i).transpose();
  std::vector<V> path;
  path.reserve(back.size() + fwd.size() + 1);
  for (auto it = back.rbegin(); it != back.rend(); ++it) path.push_back(*it - c);
  path.push_back(V::Zero());
  for (const auto& p : fwd) path.push_back(p - c);

  Scalar twice_area(0);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    twice_area += path[k](0) * path[k + 1](1) - path[k](1) * path[k + 1](0);
  }
  const V& entry = path.front();
  const V& exit = path.back();
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar sweep = std::atan2(entry(1), entry(0)) - std::atan2(exit(1), exit(0));
  sweep = std::fmod(sweep, two_pi);
  if (sweep < Scalar(0)) sweep += two_pi;
  twice_area += r * r * sweep;

  const Scalar fraction = twice_area / (Scalar(2) * std::numbers::pi_v<Scalar> * r * r);
  return std::clamp(fraction, Scalar(0), Scalar(1));
}

/// Multi-scale integral curvature. Radii are fractions of the contour's arc
/// length, so a normalized contour uses them as absolute radii.
template <typename Scalar>
CurvatureProfile<Scalar> integral_curvature(const Contour<Scalar>& c, const CurvatureOptions& opts = {}) {
  for (double s : opts.scales) {
    if (!(s > 0.0 && s < 0.5)) {
      throw Error(ErrorCode::BadScale, "curvature scale " + std::to_string(s) + " outside (0, 0.5)");
    }
  }
  const Eigen::Index n = c.points.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateContour, "contour needs at least two points");
  const Scalar length = arc_length(c.points);
  if (!(length > Scalar(0))) throw Error(ErrorCode::DegenerateContour, "contour has zero length");
  const bool left = resolve_interior<Scalar>(c.points, opts.interior) == InteriorSide::Left;

  CurvatureProfile<Scalar> profile;
  profile.values.resize(static_cast<Eigen::Index>(opts.scales.size()), n);
  for (std::size_t s = 0; s < opts.scales.size(); ++s) {
    profile.scales.push_back(static_cast<Scalar>(opts.scales[s]));
    const Scalar r = static_cast<Scalar>(opts.scales[s]) * length;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar f = left_disk_fraction<Scalar>(c.points, i, r);
      profile.values(static_cast<Eigen::Index>(s), i) = left ? f : Scalar(1) - f;
    }
  }
  return profile;
}

}  // namespace reid::contour
