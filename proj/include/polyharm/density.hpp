#pragma once

// Local density fields: the minimal admissible radius, the majorant, and
// certificates for slow growth and self-majorization on a finite sample set.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"
#include "polyharm/polyrep.hpp"

namespace polyharm {

class NoAdmissibleRadius : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Default cap on sum |a|: four times the dimension of the polynomial space.
inline double default_stability_cap(std::size_t dim, int degree) {
  return 4.0 * static_cast<double>(polynomial_space_dim(dim, degree));
}

struct DensityParams {
  int degree = 0;
  double stability_cap = 0.0;  // <= 0: default_stability_cap
  double majorant_exponent = 1.0;
  double growth_exponent = 1.0 / 3.0;

  double cap(std::size_t dim) const { return stability_cap > 0.0 ? stability_cap : default_stability_cap(dim, degree); }

  void validate() const {
    if (degree < 0) throw InputError("density params: degree must be >= 0");
    if (stability_cap > 0.0 && !(stability_cap > 1.0)) throw InputError("density params: stability cap K must exceed 1");
    if (!(majorant_exponent > 0.0)) throw InputError("density params: majorant exponent r must be positive");
    if (!(growth_exponent > 0.0 && growth_exponent < 1.0)) {
      throw InputError("density params: growth exponent epsilon must lie in (0,1)");
    }
  }
};

/// Samples of a density rho at finitely many points.
class DensityField {
 public:
  DensityField() = default;
  DensityField(std::size_t dim, std::vector<Point> points, std::vector<double> rho, DensityParams params = {})
      : dim_(dim), points_(std::move(points)), rho_(std::move(rho)), params_(params) {
    if (points_.size() != rho_.size()) throw InputError("density field: point and value counts differ");
    std::vector<double> flat;
    flat.reserve(points_.size() * dim_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].dim() != dim_) throw InputError("density field: point dimension mismatch");
      if (!(rho_[i] > 0.0) || !std::isfinite(rho_[i])) {
        throw InputError("density field: value at sample " + std::to_string(i) + " is not positive and finite");
      }
      flat.insert(flat.end(), points_[i].coords().begin(), points_[i].coords().end());
    }
    if (dim_ > 0) index_ = SpatialIndex(dim_, std::move(flat));
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  double rho(std::size_t i) const { return rho_[i]; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& values() const { return rho_; }
  const DensityParams& params() const { return params_; }
  const SpatialIndex& index() const { return index_; }

  /// Value of the nearest sample (piecewise-constant extension).
  double nearest_value(Coords x) const {
    auto n = index_.nearest(x);
    if (!n) throw InputError("density field is empty");
    return rho_[n->index];
  }

  /// Value at a sample coinciding with x, if any.
  std::optional<double> value_at(Coords x) const {
    auto hits = index_.within(x, kDuplicateTolerance);
    if (hits.empty()) return std::nullopt;
    return rho_[hits.front().index];
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Point> points_;
  std::vector<double> rho_;
  DensityParams params_;
  SpatialIndex index_;
};

struct CompatibilityCert {
  std::optional<double> c_sg;
  std::optional<double> c_sm;
  double epsilon = 0.0;
  double r = 0.0;
};

struct MinimalDensity {
  double rho;
  PolyRep<double> rep;
};

/// Smallest candidate radius |xi - alpha| at which the minimum-norm
/// reproduction of the given degree exists with stability_norm < cap.
///
/// Unisolvency is monotone in the radius and is located by galloping plus
/// bisection over the sorted candidate radii; the stability cap is not
/// monotone, so from the first unisolvent radius the radii are scanned in
/// increasing order.
inline MinimalDensity minimal_density(const CenterSet& cs, Coords alpha, int degree, double cap,
                                      ReproductionCache* cache = nullptr) {
  require_dim(cs, alpha);
  if (degree < 0) throw InputError("minimal_density: degree must be non-negative");
  const std::size_t need = polynomial_space_dim(cs.dim(), degree);
  if (cs.size() < need) {
    throw InputError("minimal_density: " + std::to_string(cs.size()) + " centers cannot reproduce degree " +
                     std::to_string(degree) + " (need " + std::to_string(need) + ")");
  }
  const SpatialIndex& idx = cs.index();

  // Sorted neighbours complete up to `reach`, grouped into distinct radii.
  std::vector<Neighbor> hits;
  std::vector<std::size_t> group_end;  // exclusive end of each distinct-radius group
  double reach = idx.bucket_size();
  bool all = false;
  auto regroup = [&]() {
    group_end.clear();
    const double usable = all ? std::numeric_limits<double>::infinity() : reach - kDuplicateTolerance;
    std::size_t i = 0;
    while (i < hits.size() && hits[i].distance <= usable) {
      const double head = hits[i].distance;
      std::size_t e = i + 1;
      while (e < hits.size() && hits[e].distance - head <= kDuplicateTolerance) ++e;
      if (!all && e == hits.size() && hits[e - 1].distance > usable) break;
      group_end.push_back(e);
      i = e;
    }
  };
  auto grow = [&]() {
    reach *= 2.0;
    hits = idx.within(alpha, reach);
    all = hits.size() == idx.size();
    regroup();
  };
  hits = idx.within(alpha, reach);
  all = hits.size() == idx.size();
  regroup();
  // true when group g exists (growing the list if needed)
  auto have = [&](std::size_t g) {
    while (g >= group_end.size()) {
      if (all) return false;
      grow();
    }
    return true;
  };

  std::vector<std::pair<std::size_t, ReproductionResult<double>>> memo;
  auto solve = [&](std::size_t g) -> const ReproductionResult<double>& {
    for (const auto& [key, res] : memo) {
      if (key == g) return res;
    }
    const std::vector<Neighbor> prefix(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(group_end[g]));
    const double radius = prefix.back().distance;
    memo.emplace_back(g, cache ? cache->solve(cs, alpha, radius, degree, prefix)
                               : detail::solve_reproduction<double>(cs, alpha, radius, degree, prefix));
    return memo.back().second;
  };
  auto unisolvent = [&](std::size_t g) { return as_rep(solve(g)) != nullptr; };

  auto fail = [&]() {
    std::string where;
    for (double c : alpha) where += (where.empty() ? "" : ",") + std::to_string(c);
    return NoAdmissibleRadius("no admissible radius at (" + where + ") for degree " + std::to_string(degree) +
                              " and stability cap " + std::to_string(cap));
  };

  // First group holding enough points.
  std::size_t first = 0;
  while (true) {
    if (!have(first)) throw fail();
    if (group_end[first] >= need) break;
    ++first;
  }

  // Galloping search for a unisolvent group, then bisection.
  std::size_t bad = first;  // candidate; may still succeed
  std::size_t good = first;
  if (!unisolvent(first)) {
    std::size_t step = 1;
    while (true) {
      const std::size_t probe = first + step;
      if (!have(probe)) {
        if (!have(group_end.size() - 1) || !unisolvent(group_end.size() - 1)) throw fail();
        good = group_end.size() - 1;
        break;
      }
      if (unisolvent(probe)) {
        good = probe;
        break;
      }
      bad = probe;
      step *= 2;
    }
    while (good - bad > 1) {
      const std::size_t mid = bad + (good - bad) / 2;
      (unisolvent(mid) ? good : bad) = mid;
    }
  }

  for (std::size_t g = good; have(g); ++g) {
    const auto& res = solve(g);
    if (const auto* pr = as_rep(res); pr && pr->stability < cap) return {pr->radius, *pr};
  }
  throw fail();
}

/// Minimal density at every probe, as a field carrying `params`.
inline DensityField sample_minimal_density(const CenterSet& cs, const std::vector<Point>& probes,
                                           const DensityParams& params, ReproductionCache* cache = nullptr) {
  std::vector<double> rho;
  rho.reserve(probes.size());
  const double cap = params.cap(cs.dim());
  for (const auto& p : probes) rho.push_back(minimal_density(cs, p, params.degree, cap, cache).rho);
  return DensityField(cs.dim(), probes, std::move(rho), params);
}

/// max over samples y of rho(y) (1 + |x - y| / rho(y))^(-r).
inline double majorant(const DensityField& df, Coords x, double r) {
  if (df.empty()) throw InputError("majorant: empty density field");
  if (x.size() != df.dim()) throw InputError("majorant: dimension mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < df.size(); ++i) {
    const double ry = df.rho(i);
    h = std::max(h, ry * std::pow(1.0 + distance(x, df.point(i)) / ry, -r));
  }
  return h;
}

/// The field {(x, H(x))} over the same samples.
inline DensityField majorant_field(const DensityField& df, double r) {
  std::vector<double> h;
  h.reserve(df.size());
  for (const auto& p : df.points()) h.push_back(majorant(df, p, r));
  return DensityField(df.dim(), df.points(), std::move(h), df.params());
}

/// Smallest C_sg with rho(a) <= C_sg rho(x) (1 + |x - a| / rho(x))^(1 - epsilon)
/// over all ordered sample pairs.
inline double certify_slow_growth(const DensityField& df, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InputError("certify_slow_growth: epsilon must lie in [0,1)");
  double c = 0.0;
  for (std::size_t x = 0; x < df.size(); ++x) {
    const double rx = df.rho(x);
    for (std::size_t a = 0; a < df.size(); ++a) {
      const double t = distance(df.point(x), df.point(a)) / rx;
      c = std::max(c, df.rho(a) / (rx * std::pow(1.0 + t, 1.0 - epsilon)));
    }
  }
  return c;
}

/// Largest C_sm with rho(y) >= C_sm rho(x) (1 + |x - y| / rho(x))^(-r) over
/// all ordered sample pairs. At most 1 (diagonal pairs).
inline double certify_self_majorization(const DensityField& df, double r) {
  if (!(r > 0.0)) throw InputError("certify_self_majorization: r must be positive");
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < df.size(); ++x) {
    const double rx = df.rho(x);
    for (std::size_t y = 0; y < df.size(); ++y) {
      const double t = distance(df.point(x), df.point(y)) / rx;
      c = std::min(c, df.rho(y) / (rx * std::pow(1.0 + t, -r)));
    }
  }
  return c;
}

struct SlowGrowthConstants {
  double epsilon;
  double c_sg;
};

struct SelfMajorizationConstants {
  double r;
  double c_sm;
};

/// Self-majorization of order r with constant c_sm implies 1 - epsilon slow
/// growth, epsilon = 1/(r+1).
inline SlowGrowthConstants lemma_transfer_sm_to_sg(double c_sm, double r) {
  if (!(c_sm > 0.0 && c_sm <= 1.0)) throw InputError("constant transfer: c_sm must lie in (0,1]");
  if (!(r > 0.0)) throw InputError("constant transfer: r must be positive");
  const double base = std::pow(2.0, r) / c_sm;
  return {1.0 / (r + 1.0), std::max(base, std::pow(base, 1.0 / (1.0 + r)))};
}

/// 1 - epsilon slow growth with constant c_sg implies self-majorization of
/// order r = (1 - epsilon)/epsilon.
inline SelfMajorizationConstants lemma_transfer_sg_to_sm(double c_sg, double epsilon) {
  if (!(c_sg >= 1.0)) throw InputError("constant transfer: c_sg must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("constant transfer: epsilon must lie in (0,1)");
  const double base = std::pow(2.0, epsilon - 1.0) / c_sg;
  return {(1.0 - epsilon) / epsilon, std::min(base, std::pow(base, 1.0 / epsilon))};
}

enum class RateViolation { DegreeTooLow, GrowthExponentTooSmall };

inline std::string describe(RateViolation v) {
  return v == RateViolation::DegreeTooLow ? "degree must exceed 2k - d + 1"
                                              : "growth exponent epsilon must exceed 2k / degree";
}

/// Checks degree > 2k - d + 1 and epsilon > 2k / degree.
inline std::vector<RateViolation> validate_theorem1_params(int k, int d, int degree, double epsilon) {
  if (k < 1 || d < 1 || 2 * k <= d) throw InputError("rate parameters need k >= 1, d >= 1 and 2k > d");
  std::vector<RateViolation> out;
  if (!(degree > 2 * k - d + 1)) out.push_back(RateViolation::DegreeTooLow);
  if (!(degree > 0 && epsilon > 2.0 * k / degree)) out.push_back(RateViolation::GrowthExponentTooSmall);
  return out;
}

}  // namespace polyharm
