#pragma once

// The quasi-interpolant T f(x) = int Delta^k f(alpha) sum_xi a(xi, alpha)
// phi(x - xi) d alpha, assembled by composite quadrature on cells sized by
// the local density, and the convergence study built on it.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "polyharm/density.hpp"
#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"
#include "polyharm/kernel.hpp"
#include "polyharm/placement.hpp"
#include "polyharm/polyrep.hpp"

namespace polyharm {

enum class QuadratureRule { Midpoint, Gauss2 };

struct QuadratureSpec {
  int cells_per_rho = 4;
  QuadratureRule rule = QuadratureRule::Gauss2;
  // Integration box; left empty it defaults to the bounding box of the bump support.
  Point lo;
  Point hi;

  void validate() const {
    if (cells_per_rho < 2) throw InputError("quadrature: cells_per_rho must be >= 2");
  }
};

struct QuadNode {
  Point at;
  double weight;
};

/// Leaves of a 2^d-ary subdivision of the box [lo, hi]: a cell is split while
/// its longest side exceeds rho(center) / cells_per_rho. Cells missing the
/// ball B(center, radius) are dropped. Depth-first, deterministic order.
inline std::vector<QuadNode> quadrature_nodes(const QuadratureSpec& qs, const Point& lo, const Point& hi,
                                              const DensityField& density, const Point& ball_center,
                                              double ball_radius) {
  qs.validate();
  const std::size_t d = lo.dim();
  struct Cell {
    std::vector<double> lo, hi;
    int depth;
  };
  std::vector<QuadNode> nodes;
  std::vector<Cell> stack;
  stack.push_back({std::vector<double>(lo.coords().begin(), lo.coords().end()),
                   std::vector<double>(hi.coords().begin(), hi.coords().end()), 0});
  const double g = 0.5 / std::sqrt(3.0);
  while (!stack.empty()) {
    Cell c = std::move(stack.back());
    stack.pop_back();
    std::vector<double> mid(d);
    double longest = 0.0, vol = 1.0, gap2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      mid[a] = 0.5 * (c.lo[a] + c.hi[a]);
      longest = std::max(longest, c.hi[a] - c.lo[a]);
      vol *= c.hi[a] - c.lo[a];
      const double q = std::clamp(ball_center[a], c.lo[a], c.hi[a]) - ball_center[a];
      gap2 += q * q;
    }
    if (gap2 >= ball_radius * ball_radius) continue;
    if (c.depth < 40 && longest > density.nearest_value(mid) / qs.cells_per_rho) {
      // push children in reverse so that they pop in lexicographic order
      const std::size_t nchild = std::size_t{1} << d;
      for (std::size_t child = nchild; child-- > 0;) {
        Cell s{c.lo, c.hi, c.depth + 1};
        for (std::size_t a = 0; a < d; ++a) {
          if ((child >> a) & 1U) {
            s.lo[a] = mid[a];
          } else {
            s.hi[a] = mid[a];
          }
        }
        stack.push_back(std::move(s));
      }
      continue;
    }
    if (qs.rule == QuadratureRule::Midpoint) {
      nodes.push_back({Point(mid), vol});
      continue;
    }
    const std::size_t npts = std::size_t{1} << d;
    for (std::size_t corner = 0; corner < npts; ++corner) {
      std::vector<double> x(d);
      for (std::size_t a = 0; a < d; ++a) {
        const double h = c.hi[a] - c.lo[a];
        x[a] = mid[a] + (((corner >> a) & 1U) ? g : -g) * h;
      }
      nodes.push_back({Point(std::move(x)), vol / static_cast<double>(npts)});
    }
  }
  return nodes;
}

struct ApproximantDump {
  CenterSet centers;
  std::vector<double> coefficients;  // normalization already folded in
};

struct AssembleStats {
  std::size_t nodes = 0;
  std::size_t active_nodes = 0;  // nodes where Delta^k f != 0
  double max_stability = 0.0;
  double max_rho = 0.0;
};

/// Coefficients c_xi = c_{d,k} sum_nodes w Delta^k f(alpha) a(xi, alpha).
/// The reproduction at every node is the minimal-density witness for the
/// degree and stability cap carried by density.params(); the field itself
/// sizes the quadrature cells.
inline ApproximantDump assemble(const CenterSet& cs, const RadialPoly& f, const KernelParams& params,
                                const QuadratureSpec& qs, const DensityField& density,
                                AssembleStats* stats = nullptr, ReproductionCache* cache = nullptr) {
  const auto d = static_cast<std::size_t>(params.d);
  if (cs.dim() != d || f.center.dim() != d) throw InputError("assemble: dimension mismatch");
  if (density.empty()) throw InputError("assemble: density field is empty");
  const DensityParams& dp = density.params();
  for (auto v : validate_theorem1_params(params.k, params.d, dp.degree, dp.growth_exponent)) {
    throw InputError("assemble: " + describe(v));
  }
  const RadialPoly lap = laplacian_power(f, params.k, params.d);

  Point lo = qs.lo, hi = qs.hi;
  if (lo.dim() == 0) {
    std::vector<double> l(d), h(d);
    for (std::size_t a = 0; a < d; ++a) {
      l[a] = f.center[a] - f.scale;
      h[a] = f.center[a] + f.scale;
    }
    lo = Point(std::move(l));
    hi = Point(std::move(h));
  }
  const auto nodes = quadrature_nodes(qs, lo, hi, density, f.center, f.scale);

  ApproximantDump out{cs, std::vector<double>(cs.size(), 0.0)};
  const double cap = dp.cap(d);
  AssembleStats st;
  st.nodes = nodes.size();
  for (const auto& node : nodes) {
    const double g = lap(node.at);
    if (g == 0.0) continue;
    ++st.active_nodes;
    const auto md = minimal_density(cs, node.at, dp.degree, cap, cache);
    st.max_stability = std::max(st.max_stability, md.rep.stability);
    st.max_rho = std::max(st.max_rho, md.rho);
    const double scale = node.weight * g * params.normalization;
    for (const auto& w : md.rep.weights) out.coefficients[w.index] += scale * w.value;
  }
  if (stats) *stats = st;
  return out;
}

inline ApproximantDump assemble(const CenterSet& cs, const RadialBump& f, const KernelParams& params,
                                const QuadratureSpec& qs, const DensityField& density,
                                AssembleStats* stats = nullptr, ReproductionCache* cache = nullptr) {
  laplacian_power(f, params.k);  // exponent check
  return assemble(cs, f.polynomial(), params, qs, density, stats, cache);
}

/// sum_xi c_xi phi(x - xi).
inline double evaluate(const ApproximantDump& ad, Coords x, const KernelParams& params) {
  double s = 0.0;
  for (std::size_t i = 0; i < ad.centers.size(); ++i) {
    if (ad.coefficients[i] == 0.0) continue;
    s += ad.coefficients[i] * phi_radial(distance(x, ad.centers.point(i)), params.d, params.k);
  }
  return s;
}

/// rho(x)^{2k} ||Delta^k f||_inf at each point (unit constant). Every point
/// must coincide with a density sample.
inline std::vector<double> error_bound_map(const DensityField& density, const RadialBump& f, int k,
                                           const std::vector<Point>& points) {
  const double lap_sup = sup_norm(laplacian_power(f, k));
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto rho = density.value_at(p);
    if (!rho) throw InputError("error_bound_map: point is not a density sample");
    out.push_back(std::pow(*rho, 2 * k) * lap_sup);
  }
  return out;
}

enum class Placement { Uniform, Multires };

struct StudyConfig {
  int d = 1;
  int k = 1;
  int degree = 7;
  double epsilon = 1.0 / 3.0;
  double stability_cap = 0.0;  // <= 0: default
  Placement placement = Placement::Uniform;
  std::vector<int> levels{3, 4, 5, 6};
  RadialBump bump{8, Point{0.0}, 1.0};
  Point box_lo{-2.0};
  Point box_hi{2.0};
  Point defect{0.0};  // defect point for multires placement; error is also reported here
  QuadratureSpec quadrature{};
  int probe_level = 0;  // 2^probe_level probes per axis; 0 picks >= 1000 probes in total
  Point probe_lo;       // default: bump support box
  Point probe_hi;

  void validate() const {
    if (levels.size() < 3) throw InputError("study: sweep needs at least 3 values of j");
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (levels[i] != levels[i - 1] + 1) throw InputError("study: j values must be consecutive");
    }
    if (levels.front() < 1) throw InputError("study: j must be >= 1");
    for (auto v : validate_theorem1_params(k, d, degree, epsilon)) throw InputError("study: " + describe(v));
    fundamental_normalization(d, k);
    quadrature.validate();
    const auto dd = static_cast<std::size_t>(d);
    if (bump.center.dim() != dd || box_lo.dim() != dd || box_hi.dim() != dd || defect.dim() != dd) {
      throw InputError("study: dimension mismatch in bump, box or defect");
    }
    if (bump.exponent < 2 * k + 2) throw InputError("study: bump exponent must be >= 2k + 2");
    if (!(bump.scale > 0.0)) throw InputError("study: bump scale must be positive");
  }
};

struct StudyRow {
  int j;
  std::size_t centers;
  std::size_t nodes;
  double sup_error;
  double defect_error;
  double rho_defect;  // minimal density at the defect point
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double global_slope;  // fitted rate of the sup error in powers of 2^-j
  double defect_slope;
};

/// Least-squares slope s of log2(err) ~ c - s j.
inline double fitted_rate(const std::vector<int>& js, const std::vector<double>& errs) {
  const double n = static_cast<double>(js.size());
  double mj = 0.0, me = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    mj += js[i];
    me += std::log2(errs[i]);
  }
  mj /= n;
  me /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    num += (js[i] - mj) * (std::log2(errs[i]) - me);
    den += (js[i] - mj) * (js[i] - mj);
  }
  return -num / den;
}

inline CenterSet uniform_grid(const Point& lo, const Point& hi, double h) {
  const std::size_t d = lo.dim();
  std::vector<std::int64_t> first(d), last(d), cur(d);
  for (std::size_t a = 0; a < d; ++a) {
    first[a] = static_cast<std::int64_t>(std::ceil(lo[a] / h - 1e-9));
    last[a] = static_cast<std::int64_t>(std::floor(hi[a] / h + 1e-9));
  }
  std::vector<Point> pts;
  cur = first;
  while (true) {
    std::vector<double> x(d);
    for (std::size_t a = 0; a < d; ++a) x[a] = static_cast<double>(cur[a]) * h;
    pts.emplace_back(std::move(x));
    std::size_t a = 0;
    while (a < d && ++cur[a] > last[a]) {
      cur[a] = first[a];
      ++a;
    }
    if (a == d) break;
  }
  return CenterSet(d, pts);
}

inline std::vector<Point> probe_grid(const Point& lo, const Point& hi, int per_axis_log2) {
  const std::size_t d = lo.dim();
  const std::int64_t n = std::int64_t{1} << per_axis_log2;
  std::vector<Point> out;
  std::vector<std::int64_t> cur(d, 0);
  while (true) {
    std::vector<double> x(d);
    for (std::size_t a = 0; a < d; ++a) {
      x[a] = lo[a] + (hi[a] - lo[a]) * static_cast<double>(cur[a]) / static_cast<double>(n - 1);
    }
    out.emplace_back(std::move(x));
    std::size_t a = 0;
    while (a < d && ++cur[a] >= n) {
      cur[a] = 0;
      ++a;
    }
    if (a == d) break;
  }
  return out;
}

/// Centers for one sweep level of a study.
inline CenterSet study_centers(const StudyConfig& cfg, int j) {
  if (cfg.placement == Placement::Uniform) return uniform_grid(cfg.box_lo, cfg.box_hi, std::exp2(-j));
  MultiresSpec spec;
  spec.j = j;
  spec.k = cfg.k;
  spec.d = cfg.d;
  spec.epsilon = cfg.epsilon;
  spec.degree = cfg.degree;
  spec.defect = {cfg.defect};
  spec.box_lo = cfg.box_lo;
  spec.box_hi = cfg.box_hi;
  return generate_centers(spec);
}

inline StudyResult convergence_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.d);
  const KernelParams params = KernelParams::make(cfg.d, cfg.k, cfg.degree);
  DensityParams dp;
  dp.degree = cfg.degree;
  dp.stability_cap = cfg.stability_cap;
  dp.growth_exponent = cfg.epsilon;

  Point plo = cfg.probe_lo, phi_ = cfg.probe_hi;
  if (plo.dim() == 0) {
    std::vector<double> l(d), h(d);
    for (std::size_t a = 0; a < d; ++a) {
      l[a] = cfg.bump.center[a] - cfg.bump.scale;
      h[a] = cfg.bump.center[a] + cfg.bump.scale;
    }
    plo = Point(std::move(l));
    phi_ = Point(std::move(h));
  }
  int p = cfg.probe_level;
  if (p <= 0) {
    p = 1;
    while (std::exp2(static_cast<double>(cfg.d * p)) < 1000.0) ++p;
  }
  const auto probes = probe_grid(plo, phi_, p);

  StudyResult result;
  std::vector<double> sup_errs, defect_errs;
  for (int j : cfg.levels) {
    const CenterSet cs = study_centers(cfg, j);
    // density samples: the centers inside the integration box
    std::vector<Point> samples;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      bool inside = true;
      for (std::size_t a = 0; a < d; ++a) {
        inside = inside && std::abs(cs.point(i)[a] - cfg.bump.center[a]) <= cfg.bump.scale;
      }
      if (inside) samples.push_back(cs.point_copy(i));
    }
    ReproductionCache cache;
    const DensityField density = sample_minimal_density(cs, samples, dp, &cache);
    AssembleStats st;
    const auto ad = assemble(cs, cfg.bump, params, cfg.quadrature, density, &st, &cache);
    double sup = 0.0;
    for (const auto& x : probes) sup = std::max(sup, std::abs(cfg.bump(x) - evaluate(ad, x, params)));
    const double at_defect = std::abs(cfg.bump(cfg.defect) - evaluate(ad, cfg.defect, params));
    const double rho_defect = minimal_density(cs, cfg.defect, dp.degree, dp.cap(d), &cache).rho;
    result.rows.push_back({j, cs.size(), st.nodes, sup, at_defect, rho_defect});
    sup_errs.push_back(sup);
    defect_errs.push_back(at_defect);
  }
  result.global_slope = fitted_rate(cfg.levels, sup_errs);
  result.defect_slope = fitted_rate(cfg.levels, defect_errs);
  return result;
}

}  // namespace polyharm
