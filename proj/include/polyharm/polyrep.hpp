#pragma once

// Local polynomial reproduction: weights a(xi, alpha) supported in
// B(alpha, radius) with sum_xi a(xi, alpha) p(xi) = p(alpha) for every
// polynomial of total degree <= degree.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "polyharm/geometry.hpp"

namespace polyharm {

/// Relative pivot tolerance for the rank decision.
inline constexpr double kRankTolerance = 1e-10;

using MultiIndex = std::vector<int>;

/// Exponents of all monomials of total degree <= degree in dim variables,
/// graded (by total degree), then reverse-lexicographic within a degree.
inline std::vector<MultiIndex> monomial_exponents(std::size_t dim, int degree) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dim, 0);
  for (int total = 0; total <= degree; ++total) {
    // distribute `total` over dim slots
    auto rec = [&](auto&& self, std::size_t slot, int left) -> void {
      if (slot + 1 == dim) {
        cur[slot] = left;
        out.push_back(cur);
        return;
      }
      for (int e = left; e >= 0; --e) {
        cur[slot] = e;
        self(self, slot + 1, left - e);
      }
    };
    rec(rec, 0, total);
  }
  return out;
}

/// dim Pi_degree = C(degree + dim, dim).
inline std::size_t polynomial_space_dim(std::size_t dim, int degree) {
  if (degree < 0) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= dim; ++i) r = r * (static_cast<std::size_t>(degree) + i) / i;
  return r;
}

template <class Real>
struct RepWeight {
  std::size_t index;  // into the center set
  Real value;
};

template <class Real = double>
struct PolyRep {
  Point alpha;
  double radius = 0.0;
  int degree = 0;
  std::vector<RepWeight<Real>> weights;
  Real stability = Real(0);
};

enum class ReproductionFailure { InsufficientPoints, RankDeficient };

inline const char* to_string(ReproductionFailure f) {
  return f == ReproductionFailure::InsufficientPoints ? "InsufficientPoints" : "RankDeficient";
}

template <class Real = double>
using ReproductionResult = std::variant<PolyRep<Real>, ReproductionFailure>;

/// Sum of |a(xi, alpha)|.
template <class Real>
Real stability_norm(const PolyRep<Real>& pr) {
  using std::abs;
  Real s(0);
  for (const auto& w : pr.weights) s += abs(w.value);
  return s;
}

namespace detail {

// Values of every monomial at y (already shifted and scaled).
template <class Real>
void monomial_row(const std::vector<MultiIndex>& basis, const std::vector<Real>& y, int degree, Real* out) {
  const std::size_t dim = y.size();
  std::vector<std::vector<Real>> pw(dim, std::vector<Real>(static_cast<std::size_t>(degree) + 1));
  for (std::size_t a = 0; a < dim; ++a) {
    pw[a][0] = Real(1);
    for (int e = 1; e <= degree; ++e) pw[a][e] = pw[a][e - 1] * y[a];
  }
  for (std::size_t b = 0; b < basis.size(); ++b) {
    Real v(1);
    for (std::size_t a = 0; a < dim; ++a) v *= pw[a][basis[b][a]];
    out[b] = v;
  }
}

template <class Real>
std::vector<Real> scaled_offset(Coords xi, Coords alpha, double scale) {
  std::vector<Real> y(xi.size());
  for (std::size_t a = 0; a < xi.size(); ++a) y[a] = (Real(xi[a]) - Real(alpha[a])) / Real(scale);
  return y;
}

/// Minimum-norm solution of the moment system over the given neighbours.
/// radius may be zero (then no scaling is applied).
template <class Real>
ReproductionResult<Real> solve_reproduction(const CenterSet& cs, Coords alpha, double radius, int degree,
                                            const std::vector<Neighbor>& nbrs) {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const auto basis = monomial_exponents(cs.dim(), degree);
  const auto M = static_cast<Eigen::Index>(basis.size());
  const auto m = static_cast<Eigen::Index>(nbrs.size());
  if (m < M) return ReproductionFailure::InsufficientPoints;

  const double scale = radius > 0.0 ? radius : 1.0;
  // Transposed Vandermonde: one row per center.
  Mat vt(m, M);
  std::vector<Real> row(basis.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto y = scaled_offset<Real>(cs.point(nbrs[i].index), alpha, scale);
    monomial_row(basis, y, degree, row.data());
    for (Eigen::Index b = 0; b < M; ++b) vt(i, b) = row[b];
  }

  Eigen::ColPivHouseholderQR<Mat> qr;
  qr.setThreshold(Real(kRankTolerance));
  qr.compute(vt);
  if (qr.rank() < M) return ReproductionFailure::RankDeficient;

  // vt P = Q R  =>  V a = e0  <=>  R^T (Q^T a) = P^T e0; take the minimum-norm a.
  Vec e0 = Vec::Zero(M);
  e0(0) = Real(1);
  Vec rhs = qr.colsPermutation().transpose() * e0;
  Vec z = qr.matrixR().topLeftCorner(M, M).template triangularView<Eigen::Upper>().transpose().solve(rhs);
  Vec full = Vec::Zero(m);
  full.head(M) = z;
  Vec a = qr.householderQ() * full;

  PolyRep<Real> pr;
  pr.alpha = Point(alpha);
  pr.radius = radius;
  pr.degree = degree;
  pr.weights.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) pr.weights.push_back({nbrs[i].index, a(i)});
  pr.stability = stability_norm(pr);
  return pr;
}

}  // namespace detail

/// Minimum-Euclidean-norm local polynomial reproduction of total degree
/// <= degree at alpha, using the centers in the closed ball B(alpha, radius).
template <class Real = double>
ReproductionResult<Real> build_reproduction(const CenterSet& cs, Coords alpha, double radius, int degree) {
  require_dim(cs, alpha);
  if (!(radius > 0.0)) throw InputError("build_reproduction: radius must be positive");
  if (degree < 0) throw InputError("build_reproduction: degree must be non-negative");
  return detail::solve_reproduction<Real>(cs, alpha, radius, degree, cs.index().within(alpha, radius));
}

/// Largest |p(alpha) - sum a p(xi)| over the shifted, scaled monomials of
/// degree <= pr.degree.
template <class Real>
Real verify_reproduction(const PolyRep<Real>& pr, const CenterSet& cs) {
  using std::abs;
  const auto basis = monomial_exponents(cs.dim(), pr.degree);
  const double scale = pr.radius > 0.0 ? pr.radius : 1.0;
  std::vector<Real> acc(basis.size(), Real(0));
  std::vector<Real> row(basis.size());
  for (const auto& w : pr.weights) {
    detail::monomial_row(basis, detail::scaled_offset<Real>(cs.point(w.index), pr.alpha, scale), pr.degree,
                         row.data());
    for (std::size_t b = 0; b < basis.size(); ++b) acc[b] += w.value * row[b];
  }
  Real worst(0);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const Real target = b == 0 ? Real(1) : Real(0);
    const Real r = abs(target - acc[b]);
    if (r > worst) worst = r;
  }
  return worst;
}

template <class Real>
const PolyRep<Real>* as_rep(const ReproductionResult<Real>& r) {
  return std::get_if<PolyRep<Real>>(&r);
}

/// Reuses solves between reproductions whose neighbour sets agree after
/// translation to alpha and scaling by the radius (uniform-grid interiors).
class ReproductionCache {
 public:
  ReproductionResult<double> solve(const CenterSet& cs, Coords alpha, double radius, int degree,
                                   const std::vector<Neighbor>& nbrs) {
    const double scale = radius > 0.0 ? radius : 1.0;
    const std::size_t dim = cs.dim();
    std::vector<std::int64_t> q(nbrs.size() * dim);
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const auto xi = cs.point(nbrs[i].index);
      for (std::size_t a = 0; a < dim; ++a) {
        q[i * dim + a] = static_cast<std::int64_t>(std::llround((xi[a] - alpha[a]) / scale * 1e12));
      }
    }
    std::vector<std::size_t> perm(nbrs.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
      return std::lexicographical_compare(q.begin() + x * dim, q.begin() + (x + 1) * dim, q.begin() + y * dim,
                                          q.begin() + (y + 1) * dim);
    });
    std::string key = std::to_string(degree) + ":";
    for (std::size_t i : perm) {
      for (std::size_t a = 0; a < dim; ++a) key += std::to_string(q[i * dim + a]) + ",";
    }
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      if (!it->second.ok) return it->second.failure;
      PolyRep<double> pr;
      pr.alpha = Point(alpha);
      pr.radius = radius;
      pr.degree = degree;
      pr.weights.resize(nbrs.size());
      for (std::size_t r = 0; r < perm.size(); ++r) pr.weights[perm[r]] = {nbrs[perm[r]].index, it->second.w[r]};
      pr.stability = stability_norm(pr);
      return pr;
    }
    ++misses_;
    auto res = detail::solve_reproduction<double>(cs, alpha, radius, degree, nbrs);
    Entry e;
    if (const auto* pr = as_rep(res)) {
      e.ok = true;
      for (std::size_t r = 0; r < perm.size(); ++r) e.w.push_back(pr->weights[perm[r]].value);
    } else {
      e.failure = std::get<ReproductionFailure>(res);
    }
    cache_.emplace(std::move(key), std::move(e));
    return res;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  struct Entry {
    bool ok = false;
    ReproductionFailure failure = ReproductionFailure::RankDeficient;
    std::vector<double> w;
  };
  std::unordered_map<std::string, Entry> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace polyharm
