#pragma once

// Gendered dyadic cubes and the good/bad split driven by a density field:
// a cube is good iff its sidelength is at least the largest density sample
// in its inflated support B(corner, gamma * sidelength).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyharm/density.hpp"
#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"

namespace polyharm {

struct DyadicCube {
  int level = 0;                        // sidelength 2^-level
  std::vector<std::int64_t> corner;     // corner = 2^-level * corner
  std::uint32_t gender = 1;             // bitmask over axes, never 0

  std::size_t dim() const { return corner.size(); }
  double sidelength() const { return std::exp2(-static_cast<double>(level)); }
  Point corner_point() const {
    std::vector<double> c(corner.size());
    for (std::size_t a = 0; a < corner.size(); ++a) c[a] = static_cast<double>(corner[a]) * sidelength();
    return Point(std::move(c));
  }
  DyadicCube parent() const {
    DyadicCube p{level - 1, corner, gender};
    for (auto& c : p.corner) c = c >= 0 ? c / 2 : -((-c + 1) / 2);  // floor division
    return p;
  }

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend bool operator<(const DyadicCube& x, const DyadicCube& y) {
    if (x.level != y.level) return x.level < y.level;
    if (x.corner != y.corner) return x.corner < y.corner;
    return x.gender < y.gender;
  }
};

struct DyadicParams {
  double gamma = 2.0;
  double sigma = 1.0;
  int min_level = 0;
  int max_level = 8;

  void validate(int k) const {
    if (!(gamma >= 1.0)) throw InputError("dyadic params: gamma must be >= 1");
    if (!(sigma > 0.0 && sigma < 2.0 * k)) throw InputError("dyadic params: sigma must lie in (0, 2k)");
    if (max_level < min_level) throw InputError("dyadic params: empty level range");
  }
  double support_radius(const DyadicCube& c) const { return gamma * c.sidelength(); }
};

/// Every gendered cube at levels [min_level, max_level] with its corner in
/// the closed box [lo, hi], in canonical (level, corner, gender) order.
inline std::vector<DyadicCube> enumerate_cubes(const Point& lo, const Point& hi, int min_level, int max_level) {
  const std::size_t d = lo.dim();
  if (d == 0 || d > 16) throw InputError("enumerate_cubes: unsupported dimension");
  std::vector<DyadicCube> out;
  for (int j = min_level; j <= max_level; ++j) {
    const double scale = std::exp2(static_cast<double>(j));
    std::vector<std::int64_t> first(d), last(d);
    bool empty = false;
    for (std::size_t a = 0; a < d; ++a) {
      first[a] = static_cast<std::int64_t>(std::ceil(lo[a] * scale));
      last[a] = static_cast<std::int64_t>(std::floor(hi[a] * scale));
      empty = empty || last[a] < first[a];
    }
    if (empty) continue;
    std::vector<std::int64_t> cur = first;
    while (true) {
      for (std::uint32_t e = 1; e < (1U << d); ++e) out.push_back({j, cur, e});
      std::size_t a = 0;
      while (a < d && ++cur[a] > last[a]) {
        cur[a] = first[a];
        ++a;
      }
      if (a == d) break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

class UnderSampledDensity : public InputError {
 public:
  using InputError::InputError;
};

inline std::string describe(const DyadicCube& c) {
  std::string s = "cube(level=" + std::to_string(c.level) + ", corner=[";
  for (std::size_t a = 0; a < c.corner.size(); ++a) s += (a ? "," : "") + std::to_string(c.corner[a]);
  return s + "], gender=" + std::to_string(c.gender) + ")";
}

/// max of the density samples in the inflated support, or nullopt when the
/// support holds no sample.
inline std::optional<double> cube_density(const DyadicCube& c, const DensityField& density, const DyadicParams& p) {
  std::optional<double> best;
  for (const auto& n : density.index().within(c.corner_point(), p.support_radius(c))) {
    best = std::max(best.value_or(0.0), density.rho(n.index));
  }
  return best;
}

struct Partition {
  std::vector<DyadicCube> good;
  std::vector<DyadicCube> bad;
};

inline Partition classify(const std::vector<DyadicCube>& cubes, const DensityField& density, const DyadicParams& p) {
  Partition out;
  for (const auto& c : cubes) {
    if (c.dim() != density.dim()) throw InputError("classify: dimension mismatch");
    const auto rho = cube_density(c, density, p);
    if (!rho) throw UnderSampledDensity("classify: no density sample in the support of " + describe(c));
    (c.sidelength() >= *rho ? out.good : out.bad).push_back(c);
  }
  std::sort(out.good.begin(), out.good.end());
  std::sort(out.bad.begin(), out.bad.end());
  return out;
}

/// The constant C = (1 + 2 gamma)^r / c_sm of the bad-cube bound l <= C rho(x).
inline double bad_cube_constant(double gamma, double c_sm, double r) { return std::pow(1.0 + 2.0 * gamma, r) / c_sm; }

/// max over bad cubes and samples x in their inflated support of
/// sidelength / (C rho(x)); at most 1 when (c_sm, r) are certified.
inline double bad_cube_bound_check(const std::vector<DyadicCube>& bad, const DensityField& density,
                                   const DyadicParams& p, double c_sm, double r) {
  if (!(c_sm > 0.0)) throw InputError("bad_cube_bound_check: c_sm must be positive");
  const double C = bad_cube_constant(p.gamma, c_sm, r);
  double worst = 0.0;
  for (const auto& c : bad) {
    for (const auto& n : density.index().within(c.corner_point(), p.support_radius(c))) {
      worst = std::max(worst, c.sidelength() / (C * density.rho(n.index)));
    }
  }
  return worst;
}

/// Number of listed cubes whose inflated support contains x.
inline std::size_t overlap_count(const std::vector<DyadicCube>& cubes, Coords x, const DyadicParams& p) {
  std::size_t n = 0;
  for (const auto& c : cubes) {
    if (distance(x, c.corner_point()) <= p.support_radius(c)) ++n;
  }
  return n;
}

/// Same count over the full lattice of gendered cubes at one level.
inline std::size_t overlap_count_at_level(int level, Coords x, const DyadicParams& p) {
  const std::size_t d = x.size();
  const double side = std::exp2(-static_cast<double>(level));
  const double reach = p.gamma * side;
  std::vector<std::int64_t> first(d), last(d), cur(d);
  for (std::size_t a = 0; a < d; ++a) {
    first[a] = static_cast<std::int64_t>(std::ceil((x[a] - reach) / side));
    last[a] = static_cast<std::int64_t>(std::floor((x[a] + reach) / side));
  }
  std::size_t corners = 0;
  cur = first;
  std::vector<double> c(d);
  while (true) {
    for (std::size_t a = 0; a < d; ++a) c[a] = static_cast<double>(cur[a]) * side;
    if (distance(x, c) <= reach) ++corners;
    std::size_t a = 0;
    while (a < d && ++cur[a] > last[a]) {
      cur[a] = first[a];
      ++a;
    }
    if (a == d) break;
  }
  return corners * ((std::size_t{1} << d) - 1);
}

/// (2^d - 1)(2 ceil(gamma) + 1)^d.
inline std::size_t overlap_bound(std::size_t d, double gamma) {
  const auto side = static_cast<std::size_t>(2 * std::ceil(gamma) + 1);
  std::size_t n = (std::size_t{1} << d) - 1;
  for (std::size_t a = 0; a < d; ++a) n *= side;
  return n;
}

struct TailBounds {
  double good_series;  // 2^{j(sigma-2k)} / (1 - 2^{sigma-2k})
  double bad_series;   // 2^{j sigma} / (1 - 2^{-sigma})
};

/// Closed forms of the two geometric series controlling the smooth and rough
/// parts: sum_{i>=0} (2^{j+i})^{sigma-2k} and sum_{i>=0} (2^{j-i})^{sigma}.
inline TailBounds geometric_tail_bound(double sigma, double two_k, int base_level) {
  if (!(sigma > 0.0)) throw InputError("geometric_tail_bound: sigma must be positive");
  if (!(sigma < two_k)) throw InputError("geometric_tail_bound: sigma must be below 2k (series diverges)");
  const double j = base_level;
  return {std::exp2(j * (sigma - two_k)) / (1.0 - std::exp2(sigma - two_k)),
          std::exp2(j * sigma) / (1.0 - std::exp2(-sigma))};
}

}  // namespace polyharm
