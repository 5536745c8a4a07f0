#pragma once

// Independent reference implementations used by the tests. None of them call
// into the code they check.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Pts = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Fraction of the disk of radius r around point i lying left of the local
/// curve, by rasterizing the disk on a grid x grid lattice and flood-filling
/// from a seed just left of the curve. The barrier is the connected run of
/// points through i that stays inside the disk, continued by the first point
/// outside it (or by the end tangent, stretched past the disk).
inline double raster_left_fraction(const Pts& pts, Eigen::Index i, double r, int grid = 512) {
  const Eigen::Index n = pts.rows();
  const Eigen::Vector2d c = pts.row(i).transpose();
  auto inside = [&](Eigen::Index j) { return (pts.row(j).transpose() - c).norm() <= r; };

  std::vector<Eigen::Vector2d> chain;
  auto run = [&](int step) {
    std::vector<Eigen::Vector2d> out;
    Eigen::Index j = i;
    while (true) {
      const Eigen::Index k = j + step;
      if (k < 0 || k >= n) {
        Eigen::Vector2d d = pts.row(j).transpose() - pts.row(j - step).transpose();
        out.push_back(pts.row(j).transpose() + d.normalized() * 3.0 * r);
        break;
      }
      out.push_back(pts.row(k).transpose());
      if (!inside(k)) break;
      j = k;
    }
    return out;
  };
  auto back = run(-1);
  std::reverse(back.begin(), back.end());
  chain = back;
  chain.push_back(c);
  auto fwd = run(+1);
  chain.insert(chain.end(), fwd.begin(), fwd.end());

  const double h = 2.0 * r / grid;
  const Eigen::Vector2d origin = c - Eigen::Vector2d(r, r);
  auto cell_center = [&](int x, int y) -> Eigen::Vector2d { return origin + Eigen::Vector2d((x + 0.5) * h, (y + 0.5) * h); };
  auto in_disk = [&](int x, int y) { return (cell_center(x, y) - c).squaredNorm() <= r * r; };

  std::vector<char> barrier(static_cast<std::size_t>(grid) * grid, 0);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    const Eigen::Vector2d a = chain[k];
    const Eigen::Vector2d b = chain[k + 1];
    const int steps = static_cast<int>(std::ceil((b - a).norm() / (0.2 * h))) + 1;
    for (int t = 0; t <= steps; ++t) {
      const Eigen::Vector2d p = a + (b - a) * (double(t) / steps);
      const int x = static_cast<int>(std::floor((p(0) - origin(0)) / h));
      const int y = static_cast<int>(std::floor((p(1) - origin(1)) / h));
      if (x >= 0 && y >= 0 && x < grid && y < grid) barrier[static_cast<std::size_t>(y) * grid + x] = 1;
    }
  }

  // seed: a few cells to the left of the local direction of travel
  const Eigen::Index ia = std::max<Eigen::Index>(0, i - 1);
  const Eigen::Index ib = std::min<Eigen::Index>(n - 1, i + 1);
  const Eigen::Vector2d t = (pts.row(ib) - pts.row(ia)).transpose().normalized();
  const Eigen::Vector2d left(-t(1), t(0));
  int sx = -1, sy = -1;
  for (double m = 2.0; m < grid / 4; m += 1.0) {
    const Eigen::Vector2d p = c + left * (m * h);
    const int x = static_cast<int>(std::floor((p(0) - origin(0)) / h));
    const int y = static_cast<int>(std::floor((p(1) - origin(1)) / h));
    if (!barrier[static_cast<std::size_t>(y) * grid + x] && in_disk(x, y)) {
      sx = x;
      sy = y;
      break;
    }
  }
  if (sx < 0) return -1.0;

  std::vector<char> filled(barrier.size(), 0);
  std::deque<std::pair<int, int>> queue{{sx, sy}};
  filled[static_cast<std::size_t>(sy) * grid + sx] = 1;
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || ny < 0 || nx >= grid || ny >= grid) continue;
      const std::size_t idx = static_cast<std::size_t>(ny) * grid + nx;
      if (filled[idx] || barrier[idx] || !in_disk(nx, ny)) continue;
      filled[idx] = 1;
      queue.push_back({nx, ny});
    }
  }

  double total = 0, hit = 0;
  for (int y = 0; y < grid; ++y) {
    for (int x = 0; x < grid; ++x) {
      if (!in_disk(x, y)) continue;
      total += 1;
      const std::size_t idx = static_cast<std::size_t>(y) * grid + x;
      if (filled[idx]) hit += 1;
      else if (barrier[idx]) hit += 0.5;
    }
  }
  return hit / total;
}

/// Indices of strict local extrema of `v`, scanning every interior index in
/// [lo, hi]. Returns (index, +1 max / -1 min) pairs.
inline std::vector<std::pair<long, int>> extrema_scan(const std::vector<double>& v, long lo, long hi) {
  std::vector<std::pair<long, int>> out;
  for (long i = std::max(1L, lo); i <= std::min<long>(static_cast<long>(v.size()) - 2, hi); ++i) {
    const bool up = v[i] > v[i - 1] && v[i] > v[i + 1];
    const bool down = v[i] < v[i - 1] && v[i] < v[i + 1];
    if (up) out.push_back({i, +1});
    if (down) out.push_back({i, -1});
  }
  return out;
}

/// Centered mean over a window that shrinks at the ends.
inline std::vector<double> window_mean(const std::vector<double>& v, long window) {
  const long half = window / 2;
  std::vector<double> out(v.size());
  for (long i = 0; i < static_cast<long>(v.size()); ++i) {
    double s = 0;
    long cnt = 0;
    for (long j = i - half; j <= i + half; ++j) {
      if (j < 0 || j >= static_cast<long>(v.size())) continue;
      s += v[j];
      ++cnt;
    }
    out[i] = s / cnt;
  }
  return out;
}

struct GalleryVector {
  std::string owner;
  std::vector<double> v;
};

/// LNBNN by sorting every gallery vector by (squared distance, position).
/// Distances are summed coordinate by coordinate in order. Evidence is added
/// onto `scores`, query by query.
inline void lnbnn_into(std::map<std::string, double>& scores, const std::vector<std::vector<double>>& queries,
                       const std::vector<GalleryVector>& gallery, std::size_t k) {
  for (const auto& q : queries) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      double acc = 0;
      for (std::size_t d = 0; d < q.size(); ++d) {
        const double t = gallery[g].v[d] - q[d];
        acc += t * t;
      }
      order.push_back({acc, g});
    }
    std::sort(order.begin(), order.end());
    const double bound = order[k].first;
    std::map<std::string, double> best;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& who = gallery[order[j].second].owner;
      if (!best.count(who)) best[who] = order[j].first;
    }
    for (const auto& [who, d] : best) scores[who] += bound - d;
  }
}

inline std::map<std::string, double> lnbnn(const std::vector<std::vector<double>>& queries,
                                           const std::vector<GalleryVector>& gallery, std::size_t k) {
  std::map<std::string, double> scores;
  lnbnn_into(scores, queries, gallery, k);
  return scores;
}

}  // namespace oracle
