#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polyharm/errors.hpp"

namespace polyharm {

using Coords = std::span<const double>;

/// Tolerance below which two centers are considered coincident.
inline constexpr double kDuplicateTolerance = 1e-12;

/// A point of R^d with finite coordinates.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) { check_finite(); }
  Point(std::initializer_list<double> coords) : coords_(coords) { check_finite(); }
  explicit Point(Coords coords) : coords_(coords.begin(), coords.end()) { check_finite(); }

  static Point zeros(std::size_t dim) { return Point(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  Coords coords() const { return coords_; }
  operator Coords() const { return coords_; }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void check_finite() const {
    for (double c : coords_) {
      if (!std::isfinite(c)) throw InputError("point has a non-finite coordinate");
    }
  }

  std::vector<double> coords_;
};

inline double squared_distance(Coords a, Coords b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double distance(Coords a, Coords b) { return std::sqrt(squared_distance(a, b)); }

inline double norm(Coords a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Uniform-bucket grid over a flat coordinate array (row-major, `dim` values
/// per point). Buckets are hashed by an exact mixed-radix cell id.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  /// bucket <= 0 selects the median nearest-neighbour distance.
  SpatialIndex(std::size_t dim, std::vector<double> coords, double bucket = 0.0)
      : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw InputError("spatial index: dimension must be positive");
    n_ = coords_.size() / dim_;
    if (n_ == 0) return;
    lo_.assign(dim_, std::numeric_limits<double>::infinity());
    hi_.assign(dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t a = 0; a < dim_; ++a) {
        lo_[a] = std::min(lo_[a], coords_[i * dim_ + a]);
        hi_[a] = std::max(hi_[a], coords_[i * dim_ + a]);
      }
    }
    if (bucket <= 0.0) {
      double vol = 1.0;
      double extent = 0.0;
      for (std::size_t a = 0; a < dim_; ++a) extent = std::max(extent, hi_[a] - lo_[a]);
      if (extent <= 0.0) extent = 1.0;
      for (std::size_t a = 0; a < dim_; ++a) vol *= std::max(hi_[a] - lo_[a], extent * 1e-6);
      build(std::pow(vol / static_cast<double>(n_), 1.0 / static_cast<double>(dim_)));
      bucket = median_nearest_distance();
      if (!(bucket > 0.0)) bucket = extent;
    }
    build(bucket);
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return n_; }
  double bucket_size() const { return bucket_; }
  Coords point(std::size_t i) const { return Coords(coords_.data() + i * dim_, dim_); }
  const std::vector<double>& flat() const { return coords_; }

  /// All points with distance <= radius, sorted by (distance, index).
  std::vector<Neighbor> within(Coords center, double radius) const {
    std::vector<Neighbor> out;
    if (n_ == 0 || radius < 0.0) return out;
    const double r2 = radius * radius;
    auto consider = [&](std::size_t i) {
      const double d2 = squared_distance(point(i), center);
      if (d2 <= r2) out.push_back({i, std::sqrt(d2)});
    };

    std::vector<std::int64_t> first(dim_), last(dim_);
    double cells = 1.0;
    bool empty = false;
    for (std::size_t a = 0; a < dim_; ++a) {
      first[a] = std::max<std::int64_t>(0, cell_of(center[a] - radius, a));
      last[a] = std::min<std::int64_t>(extent_[a] - 1, cell_of(center[a] + radius, a));
      if (last[a] < first[a]) empty = true;
      cells *= static_cast<double>(last[a] - first[a] + 1);
    }
    if (empty) return out;
    if (cells > static_cast<double>(n_)) {
      for (std::size_t i = 0; i < n_; ++i) consider(i);
    } else {
      std::vector<std::int64_t> cur = first;
      while (true) {
        std::uint64_t id = 0;
        for (std::size_t a = dim_; a-- > 0;) id = id * static_cast<std::uint64_t>(extent_[a]) + cur[a];
        if (auto it = buckets_.find(id); it != buckets_.end()) {
          for (std::size_t k = it->second.first; k < it->second.second; ++k) consider(order_[k]);
        }
        std::size_t a = 0;
        while (a < dim_ && ++cur[a] > last[a]) {
          cur[a] = first[a];
          ++a;
        }
        if (a == dim_) break;
      }
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& x, const Neighbor& y) {
      return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
    });
    return out;
  }

  std::optional<Neighbor> nearest(Coords center) const {
    if (n_ == 0) return std::nullopt;
    double r = bucket_;
    while (true) {
      auto hits = within(center, r);
      if (!hits.empty()) return hits.front();
      r *= 2.0;
    }
  }

 private:
  std::int64_t cell_of(double x, std::size_t a) const {
    const double c = std::floor((x - lo_[a]) / bucket_);
    if (c < -1.0) return -1;
    if (c > static_cast<double>(extent_[a])) return extent_[a];
    return static_cast<std::int64_t>(c);
  }

  void build(double bucket) {
    bucket_ = bucket;
    // Grow the bucket until the cell lattice has an exact 64-bit id.
    while (true) {
      extent_.assign(dim_, 1);
      long double cells = 1.0L;
      for (std::size_t a = 0; a < dim_; ++a) {
        extent_[a] = static_cast<std::int64_t>(std::floor((hi_[a] - lo_[a]) / bucket_)) + 1;
        cells *= static_cast<long double>(extent_[a]);
      }
      if (cells < 1e18L) break;
      bucket_ *= 2.0;
    }
    std::vector<std::uint64_t> ids(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      std::uint64_t id = 0;
      for (std::size_t a = dim_; a-- > 0;) {
        const std::int64_t c = std::clamp<std::int64_t>(cell_of(coords_[i * dim_ + a], a), 0, extent_[a] - 1);
        id = id * static_cast<std::uint64_t>(extent_[a]) + static_cast<std::uint64_t>(c);
      }
      ids[i] = id;
    }
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) { return ids[x] < ids[y]; });
    buckets_.clear();
    std::size_t k = 0;
    while (k < n_) {
      std::size_t e = k;
      while (e < n_ && ids[order_[e]] == ids[order_[k]]) ++e;
      buckets_.emplace(ids[order_[k]], std::make_pair(k, e));
      k = e;
    }
  }

  double median_nearest_distance() const {
    if (n_ < 2) return 0.0;
    std::vector<double> nn;
    nn.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double r = bucket_;
      while (true) {
        auto hits = within(point(i), r);
        if (hits.size() >= 2) {
          nn.push_back(hits[1].distance);
          break;
        }
        r *= 2.0;
      }
    }
    auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
    std::nth_element(nn.begin(), mid, nn.end());
    return *mid;
  }

  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<double> coords_;
  std::vector<double> lo_, hi_;
  std::vector<std::int64_t> extent_;
  double bucket_ = 1.0;
  std::vector<std::size_t> order_;
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> buckets_;
};

/// The center set. Immutable after construction; coincident centers are rejected.
class CenterSet {
 public:
  CenterSet() = default;

  CenterSet(std::size_t dim, const std::vector<Point>& points, std::vector<int> levels = {})
      : dim_(dim), levels_(std::move(levels)) {
    if (dim_ == 0) throw InputError("center set: dimension must be positive");
    if (!levels_.empty() && levels_.size() != points.size()) {
      throw InputError("center set: level count does not match point count");
    }
    std::vector<double> flat;
    flat.reserve(points.size() * dim_);
    for (const auto& p : points) {
      if (p.dim() != dim_) throw InputError("center set: point dimension mismatch");
      flat.insert(flat.end(), p.coords().begin(), p.coords().end());
    }
    index_ = SpatialIndex(dim_, std::move(flat));
    for (std::size_t i = 0; i < size(); ++i) {
      auto hits = index_.within(point(i), kDuplicateTolerance);
      if (hits.size() > 1) {
        throw InputError("center set: duplicate centers " + std::to_string(hits[0].index) + " and " +
                         std::to_string(hits[1].index));
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  bool empty() const { return size() == 0; }
  Coords point(std::size_t i) const { return index_.point(i); }
  Point point_copy(std::size_t i) const { return Point(point(i)); }
  bool has_levels() const { return !levels_.empty(); }
  std::optional<int> level(std::size_t i) const {
    if (levels_.empty()) return std::nullopt;
    return levels_[i];
  }
  const std::vector<int>& levels() const { return levels_; }
  const SpatialIndex& index() const { return index_; }

 private:
  std::size_t dim_ = 0;
  std::vector<int> levels_;
  SpatialIndex index_;
};

struct NeighborHit {
  std::size_t index;
  Point point;
  double distance;
};

inline void require_dim(const CenterSet& cs, Coords p) {
  if (p.size() != cs.dim()) {
    throw InputError("dimension mismatch: point has " + std::to_string(p.size()) + " coordinates, center set has " +
                     std::to_string(cs.dim()));
  }
}

/// Centers with |xi - center| <= radius, ascending distance, ties by index.
inline std::vector<NeighborHit> neighbors_within(const CenterSet& cs, Coords center, double radius) {
  require_dim(cs, center);
  if (!(radius > 0.0)) throw InputError("neighbors_within: radius must be positive");
  std::vector<NeighborHit> out;
  for (const auto& n : cs.index().within(center, radius)) out.push_back({n.index, cs.point_copy(n.index), n.distance});
  return out;
}

/// Collapse an ascending distance list into strictly increasing values,
/// merging entries within kDuplicateTolerance of the last kept value.
inline std::vector<double> dedup_sorted(const std::vector<double>& sorted) {
  std::vector<double> out;
  for (double d : sorted) {
    if (out.empty() || d - out.back() > kDuplicateTolerance) out.push_back(d);
  }
  return out;
}

/// Strictly increasing list of distinct distances from center to the centers.
inline std::vector<double> sorted_candidate_radii(const CenterSet& cs, Coords center) {
  if (cs.empty()) throw InputError("sorted_candidate_radii: empty center set");
  require_dim(cs, center);
  std::vector<double> d(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) d[i] = distance(cs.point(i), center);
  std::sort(d.begin(), d.end());
  return dedup_sorted(d);
}

}  // namespace polyharm
