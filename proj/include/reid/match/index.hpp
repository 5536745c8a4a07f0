#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reid/contour/descriptors.hpp"
#include "reid/error.hpp"

namespace reid::match {

using IndividualId = std::string;

enum class SidePolicy { Merged, PerSide };

/// Descriptors of one gallery individual, gathered from all of its sightings.
template <typename Scalar = double>
struct GalleryDescriptors {
  IndividualId individual;
  std::vector<contour::Descriptor<Scalar>> descriptors;
};

struct Neighbor {
  Eigen::Index entry = 0;
  double squared_distance = 0.0;
};

/// Squared Euclidean distance accumulated in coordinate order, so every
/// exact search over the same data produces the same bits.
template <typename A, typename B>
typename A::Scalar squared_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  typename A::Scalar acc(0);
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const auto t = a(j) - b(j);
    acc += t * t;
  }
  return acc;
}

/// Immutable exact-search index over gallery descriptors.
template <typename Scalar = double>
class DescriptorIndex {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Entry {
    IndividualId individual;
    contour::Side side = contour::Side::Right;
    double scale = 0.0;
    Eigen::Index begin = 0;
    Eigen::Index end = 0;

    bool operator==(const Entry&) const = default;
  };

  DescriptorIndex() = default;
  DescriptorIndex(std::uint64_t generation, std::string schema_version, std::vector<Entry> entries, Matrix vectors)
      : generation_(generation),
        schema_version_(std::move(schema_version)),
        entries_(std::move(entries)),
        vectors_(std::move(vectors)),
        norms_(vectors_.template cast<double>().rowwise().squaredNorm()) {}

  std::uint64_t generation() const noexcept { return generation_; }
  const std::string& schema_version() const noexcept { return schema_version_; }
  Eigen::Index dimension() const noexcept { return vectors_.cols(); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Matrix& vectors() const noexcept { return vectors_; }

  std::size_t count(std::optional<contour::Side> side) const {
    if (!side) return entries_.size();
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                  [&](const Entry& e) { return e.side == *side; }));
  }

  /// The `count` nearest entries in ascending (distance, entry) order,
  /// optionally restricted to one ear side.
  template <typename Derived>
  std::vector<Neighbor> nearest(const Eigen::MatrixBase<Derived>& query, std::size_t count,
                                std::optional<contour::Side> side = std::nullopt) const {
    Matrix q(1, query.size());
    q.row(0) = query.transpose().template cast<Scalar>();
    return std::move(nearest_batch(q, count, side).front());
  }

  /// `nearest` for every row of `queries`.
  ///
  /// Candidates come from the expansion |g|^2 + |q|^2 - 2 g.q evaluated block
  /// by block with a matrix product. Every entry whose expanded distance is
  /// within twice the rounding bound of the count-th best is then rescored
  /// with `squared_distance`, so the result is the exact search.
  std::vector<std::vector<Neighbor>> nearest_batch(const Matrix& queries, std::size_t count,
                                                   std::optional<contour::Side> side = std::nullopt) const {
    const Eigen::Index nq = queries.rows();
    const Eigen::Index n = vectors_.rows();
    std::vector<std::vector<Neighbor>> out(static_cast<std::size_t>(nq));
    if (count == 0 || n == 0 || nq == 0) return out;
    if (queries.cols() != dimension()) {
      throw Error(ErrorCode::ValidationError, "query dimension does not match the index");
    }

    const Eigen::Matrix<double, Eigen::Dynamic, 1> qn = queries.template cast<double>().rowwise().squaredNorm();
    const double gmax = norms_.size() ? norms_.maxCoeff() : 0.0;
    // Rounding bound of the expansion, generous by several orders.
    const double unit = 1e3 * static_cast<double>(dimension() + 2) * std::numeric_limits<double>::epsilon();

    struct Candidate {
      Eigen::Index entry;
      double approx;
    };
    std::vector<std::vector<Candidate>> pools(static_cast<std::size_t>(nq));
    std::vector<double> slack(static_cast<std::size_t>(nq));
    for (Eigen::Index i = 0; i < nq; ++i) slack[static_cast<std::size_t>(i)] = 2.0 * unit * (qn(i) + gmax + 1.0);

    auto prune = [count](std::vector<Candidate>& pool, double margin) {
      if (pool.size() < count) return;
      std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count - 1), pool.end(),
                       [](const Candidate& a, const Candidate& b) { return a.approx < b.approx; });
      const double bound = pool[count - 1].approx + margin;
      pool.erase(std::remove_if(pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end(),
                                [bound](const Candidate& c) { return c.approx > bound; }),
                 pool.end());
    };

    constexpr Eigen::Index kBlock = 2048;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> dots;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> qd = queries.template cast<double>();
    for (Eigen::Index b0 = 0; b0 < n; b0 += kBlock) {
      const Eigen::Index len = std::min(kBlock, n - b0);
      dots.noalias() = qd * vectors_.middleRows(b0, len).template cast<double>().transpose();
      for (Eigen::Index i = 0; i < nq; ++i) {
        auto& pool = pools[static_cast<std::size_t>(i)];
        const double margin = slack[static_cast<std::size_t>(i)];
        double bound = pool.size() >= count ? pool[count - 1].approx + margin
                                            : std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < len; ++j) {
          const Eigen::Index e = b0 + j;
          if (side && entries_[static_cast<std::size_t>(e)].side != *side) continue;
          const double approx = qn(i) + norms_(e) - 2.0 * dots(i, j);
          if (approx > bound) continue;
          pool.push_back({e, approx});
          if (pool.size() >= 4 * count + 16) {
            prune(pool, margin);
            bound = pool[count - 1].approx + margin;
          }
        }
        prune(pool, margin);
      }
    }

    for (Eigen::Index i = 0; i < nq; ++i) {
      auto& pool = pools[static_cast<std::size_t>(i)];
      auto& hits = out[static_cast<std::size_t>(i)];
      hits.reserve(pool.size());
      for (const auto& c : pool) {
        hits.push_back({c.entry, static_cast<double>(squared_distance(vectors_.row(c.entry).transpose(),
                                                                      queries.row(i).transpose()))});
      }
      const auto take = std::min(count, hits.size());
      std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(),
                        [](const Neighbor& a, const Neighbor& b) {
                          return a.squared_distance != b.squared_distance ? a.squared_distance < b.squared_distance
                                                                          : a.entry < b.entry;
                        });
      hits.resize(take);
    }
    return out;
  }

 private:
  std::uint64_t generation_ = 0;
  std::string schema_version_;
  std::vector<Entry> entries_;
  Matrix vectors_;
  Eigen::Matrix<double, Eigen::Dynamic, 1> norms_;
};

/// Indexes every descriptor of every gallery individual, in input order.
/// The generation is one past `previous_generation`.
template <typename Scalar>
DescriptorIndex<Scalar> build_index(std::span<const GalleryDescriptors<Scalar>> gallery,
                                    std::uint64_t previous_generation = 0, std::string schema_version = {}) {
  std::size_t total = 0;
  Eigen::Index dim = -1;
  for (const auto& g : gallery) {
    for (const auto& d : g.descriptors) {
      if (dim < 0) dim = d.vector.size();
      if (d.vector.size() != dim) {
        throw Error(ErrorCode::ValidationError, "descriptor dimensions differ inside one gallery");
      }
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::EmptyGallery, "no gallery descriptors to index");

  std::vector<typename DescriptorIndex<Scalar>::Entry> entries;
  entries.reserve(total);
  typename DescriptorIndex<Scalar>::Matrix vectors(static_cast<Eigen::Index>(total), dim);
  Eigen::Index row = 0;
  for (const auto& g : gallery) {
    for (const auto& d : g.descriptors) {
      entries.push_back({g.individual, d.owner.side, d.scale, d.begin, d.end});
      vectors.row(row++) = d.vector.transpose();
    }
  }
  return DescriptorIndex<Scalar>(previous_generation + 1, std::move(schema_version), std::move(entries),
                                 std::move(vectors));
}

}  // namespace reid::match
