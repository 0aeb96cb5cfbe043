#pragma once

// Multiresolution center placement: gridded rings of slowly growing spacing
// around a defect set, embedded in a coarse global grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "polyharm/density.hpp"
#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"

namespace polyharm {

struct MultiresSpec {
  int j = 3;  // global spacing 2^-j, finest spacing 2^-2j
  int k = 2;
  int d = 2;
  double epsilon = 1.0 / 3.0;
  int degree = 0;  // 0 selects 7k
  std::vector<Point> defect;
  Point box_lo;
  Point box_hi;

  int effective_degree() const { return degree > 0 ? degree : 7 * k; }
  /// 7k, the unisolvency safety factor on the ring radii.
  double radius_factor() const { return 7.0 * k; }

  void validate() const {
    if (j < 1) throw InputError("multires spec: j must be >= 1");
    if (d < 1) throw InputError("multires spec: d must be >= 1");
    if (2 * k <= d) throw InputError("multires spec: need 2k > d");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("multires spec: epsilon must lie in (0,1)");
    if (std::abs(epsilon - 1.0 / 3.0) < 1e-12 && effective_degree() < 7 * k) {
      throw InputError("multires spec: degree must be >= 7k when epsilon = 1/3");
    }
    for (auto v : validate_theorem1_params(k, d, effective_degree(), epsilon)) {
      throw InputError("multires spec: " + describe(v));
    }
    if (defect.empty()) throw InputError("multires spec: defect set is empty");
    for (const auto& p : defect) {
      if (p.dim() != static_cast<std::size_t>(d)) throw InputError("multires spec: defect dimension mismatch");
    }
    if (box_lo.dim() != static_cast<std::size_t>(d) || box_hi.dim() != static_cast<std::size_t>(d)) {
      throw InputError("multires spec: bounding box dimension mismatch");
    }
    for (int a = 0; a < d; ++a) {
      if (!(box_lo[a] < box_hi[a])) throw InputError("multires spec: empty bounding box");
    }
  }

  Point anchor() const {
    std::vector<double> c(static_cast<std::size_t>(d), 0.0);
    for (const auto& p : defect) {
      for (int a = 0; a < d; ++a) c[a] += p[a];
    }
    for (auto& v : c) v /= static_cast<double>(defect.size());
    return Point(std::move(c));
  }
};

struct Region {
  int level;      // 0 for the core, J for ring Omega_J
  double inner;   // exclusive (0 and inclusive for the core)
  double outer;   // inclusive
  double spacing;
};

struct RingPlan {
  std::vector<Region> regions;  // core first, then rings J = 1..j
  double global_spacing = 0.0;
  int global_level = 0;  // j + 1

  const Region& core() const { return regions.front(); }
  double outermost_radius() const { return regions.back().outer; }
};

inline RingPlan build_ring_plan(const MultiresSpec& spec) {
  spec.validate();
  const int j = spec.j;
  RingPlan plan;
  plan.regions.push_back({0, 0.0, spec.radius_factor() * std::exp2(-2.0 * j), std::exp2(-2.0 * j)});
  for (int J = 1; J <= j; ++J) {
    plan.regions.push_back({J, plan.regions.back().outer, spec.radius_factor() * std::exp2(1.5 * J - 2.0 * j),
                            std::exp2(static_cast<double>(J - 1 - 2 * j))});
  }
  plan.global_spacing = std::exp2(-static_cast<double>(j));
  plan.global_level = j + 1;
  return plan;
}

/// Distance to the defect set.
class DefectDistance {
 public:
  explicit DefectDistance(const std::vector<Point>& defect) : dim_(defect.front().dim()) {
    std::vector<double> flat;
    for (const auto& p : defect) flat.insert(flat.end(), p.coords().begin(), p.coords().end());
    index_ = SpatialIndex(dim_, std::move(flat));
  }
  double operator()(Coords x) const { return index_.nearest(x)->distance; }

 private:
  std::size_t dim_;
  SpatialIndex index_;
};

/// Region index of a point at distance `dist` from the defect; boundary ties
/// go to the inner region. Returns plan.global_level outside all rings.
inline int region_level(const RingPlan& plan, double dist) {
  for (const auto& r : plan.regions) {
    if (dist <= r.outer) return r.level;
  }
  return plan.global_level;
}

inline CenterSet generate_centers(const MultiresSpec& spec) {
  const RingPlan plan = build_ring_plan(spec);
  const auto d = static_cast<std::size_t>(spec.d);
  const double reach = plan.outermost_radius();
  std::vector<double> dlo(d, std::numeric_limits<double>::infinity());
  std::vector<double> dhi(d, -std::numeric_limits<double>::infinity());
  for (const auto& p : spec.defect) {
    for (std::size_t a = 0; a < d; ++a) {
      dlo[a] = std::min(dlo[a], p[a]);
      dhi[a] = std::max(dhi[a], p[a]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (dlo[a] - reach < spec.box_lo[a] || dhi[a] + reach > spec.box_hi[a]) {
      throw InputError("generate_centers: bounding box does not contain the outermost ring (radius " +
                       std::to_string(reach) + ")");
    }
  }

  const Point anchor = spec.anchor();
  const DefectDistance dist(spec.defect);
  const double finest = plan.core().spacing;

  struct Entry {
    std::vector<std::int64_t> key;  // lattice coordinates at the finest spacing
    int level;
  };
  std::vector<Entry> entries;

  // Visit anchor + i * h for all integer i with lo <= anchor + i h <= hi.
  auto visit = [&](double h, const std::vector<double>& lo, const std::vector<double>& hi, auto&& accept) {
    std::vector<std::int64_t> first(d), last(d), cur(d);
    for (std::size_t a = 0; a < d; ++a) {
      first[a] = static_cast<std::int64_t>(std::ceil((lo[a] - anchor[a]) / h - 1e-9));
      last[a] = static_cast<std::int64_t>(std::floor((hi[a] - anchor[a]) / h + 1e-9));
      if (last[a] < first[a]) return;
    }
    cur = first;
    const auto ratio = static_cast<std::int64_t>(std::llround(h / finest));
    std::vector<double> x(d);
    while (true) {
      for (std::size_t a = 0; a < d; ++a) x[a] = anchor[a] + static_cast<double>(cur[a]) * h;
      const int level = accept(Coords(x));
      if (level >= 0) {
        std::vector<std::int64_t> key(d);
        for (std::size_t a = 0; a < d; ++a) key[a] = cur[a] * ratio;
        entries.push_back({std::move(key), level});
      }
      std::size_t a = 0;
      while (a < d && ++cur[a] > last[a]) {
        cur[a] = first[a];
        ++a;
      }
      if (a == d) break;
    }
  };

  for (const auto& region : plan.regions) {
    std::vector<double> lo(d), hi(d);
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = dlo[a] - region.outer;
      hi[a] = dhi[a] + region.outer;
    }
    visit(region.spacing, lo, hi,
          [&](Coords x) { return region_level(plan, dist(x)) == region.level ? region.level : -1; });
  }
  {
    std::vector<double> lo(spec.box_lo.coords().begin(), spec.box_lo.coords().end());
    std::vector<double> hi(spec.box_hi.coords().begin(), spec.box_hi.coords().end());
    visit(plan.global_spacing, lo, hi,
          [&](Coords x) { return dist(x) > reach ? plan.global_level : -1; });
  }

  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.key < y.key; });
  entries.erase(std::unique(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.key == y.key; }),
                entries.end());

  std::vector<Point> pts;
  std::vector<int> levels;
  pts.reserve(entries.size());
  levels.reserve(entries.size());
  for (const auto& e : entries) {
    std::vector<double> x(d);
    for (std::size_t a = 0; a < d; ++a) x[a] = anchor[a] + static_cast<double>(e.key[a]) * finest;
    pts.emplace_back(std::move(x));
    levels.push_back(e.level);
  }
  return CenterSet(d, pts, std::move(levels));
}

/// Sum_{J=0}^{j} (7k)^d 2^{dJ/2}.
inline double cardinality_bound(int j, int k, int d) {
  double s = 0.0;
  for (int J = 0; J <= j; ++J) s += std::pow(7.0 * k, d) * std::exp2(d * J / 2.0);
  return s;
}

struct CardinalityReport {
  double ball_radius;         // 7k 2^{-j/2}
  std::size_t actual;         // centers within ball_radius of the defect
  double bound;               // cardinality_bound(j, k, d)
  double uniform_count;       // (7k)^d 2^{dj/2}
  double ratio_to_bound;      // actual / bound
  double ratio_to_uniform;    // actual / uniform_count
};

inline CardinalityReport cardinality_report(const MultiresSpec& spec, const CenterSet& cs) {
  const double radius = spec.radius_factor() * std::exp2(-spec.j / 2.0);
  const DefectDistance dist(spec.defect);
  std::size_t count = 0;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (dist(cs.point(i)) <= radius) ++count;
  }
  CardinalityReport r;
  r.ball_radius = radius;
  r.actual = count;
  r.bound = cardinality_bound(spec.j, spec.k, spec.d);
  r.uniform_count = std::pow(spec.radius_factor(), spec.d) * std::exp2(spec.d * spec.j / 2.0);
  r.ratio_to_bound = static_cast<double>(count) / r.bound;
  r.ratio_to_uniform = static_cast<double>(count) / r.uniform_count;
  return r;
}

struct TransitionPlan {
  double radius_exponent;  // transition radius ~ h^{radius_exponent}
  int min_degree;          // smallest degree > 2k / epsilon
  bool valid;              // s * epsilon < 1
};

/// Planner for a target density ~ h^s on the defect.
inline TransitionPlan plan_transition(double s, double epsilon, int k) {
  if (!(s > 0.0)) throw InputError("plan_transition: s must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("plan_transition: epsilon must lie in (0,1)");
  if (k < 1) throw InputError("plan_transition: k must be >= 1");
  const double q = 2.0 * k / epsilon;
  const double nearest = std::round(q);
  const double base = std::abs(q - nearest) <= 1e-9 * std::max(1.0, q) ? nearest : std::floor(q);
  return {(1.0 - s * epsilon) / (1.0 - epsilon), static_cast<int>(base) + 1, s * epsilon < 1.0};
}

struct ProfileCheck {
  double rho0;
  std::vector<double> rho;    // minimal density per sample
  std::vector<double> ratio;  // rho / (rho0 (1 + |x| / rho0)^{1 - epsilon})
  double max_factor;          // max over samples of max(ratio, 1/ratio)
};

/// Compares the minimal density against rho(0) (1 + dist/rho(0))^{1-epsilon},
/// dist measured to the defect and rho(0) taken at the first defect point.
inline ProfileCheck density_profile_check(const CenterSet& cs, const MultiresSpec& spec,
                                          const std::vector<Point>& samples, double cap = 0.0) {
  const int degree = spec.effective_degree();
  if (cap <= 0.0) cap = default_stability_cap(cs.dim(), degree);
  const DefectDistance dist(spec.defect);
  ProfileCheck out;
  out.rho0 = minimal_density(cs, spec.defect.front(), degree, cap).rho;
  out.max_factor = 1.0;
  for (const auto& x : samples) {
    const double r = minimal_density(cs, x, degree, cap).rho;
    const double predicted = out.rho0 * std::pow(1.0 + dist(x) / out.rho0, 1.0 - spec.epsilon);
    const double q = r / predicted;
    out.rho.push_back(r);
    out.ratio.push_back(q);
    out.max_factor = std::max(out.max_factor, std::max(q, 1.0 / q));
  }
  return out;
}

}  // namespace polyharm
