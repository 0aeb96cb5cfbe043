#pragma once

// Surface splines (polyharmonic kernels), radial polynomial bumps with exact
// iterated Laplacians, and the local kernel-approximation error.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"
#include "polyharm/polyrep.hpp"

namespace polyharm {

/// Constant c with Delta^k (c phi) = delta for phi = |x|^{2k-d} (d odd) or
/// |x|^{2k-d} log|x| (d even). Supported: d in {1,2,3}, d/2 < k <= 4.
inline double fundamental_normalization(int d, int k) {
  if (d < 1 || d > 3 || 2 * k <= d || k > 4) {
    throw InputError("surface spline: unsupported (d, k) = (" + std::to_string(d) + ", " + std::to_string(k) + ")");
  }
  const double pi = std::numbers::pi;
  const double sign_k = (k % 2 == 0) ? 1.0 : -1.0;  // Delta^k = (-1)^k (-Delta)^k
  if (d % 2 == 1) {
    return sign_k * std::tgamma(d / 2.0 - k) /
           (std::pow(4.0, k) * std::pow(pi, d / 2.0) * std::tgamma(static_cast<double>(k)));
  }
  const int m = d / 2;
  const double sign = ((k - m + 1) % 2 == 0) ? 1.0 : -1.0;
  return sign_k * sign /
         (std::pow(2.0, 2 * k - 1) * std::pow(pi, m) * std::tgamma(static_cast<double>(k)) *
          std::tgamma(static_cast<double>(k - m + 1)));
}

struct KernelParams {
  int d = 2;
  int k = 2;
  double nu = 0.0;  // decay exponent degree + d - 2k
  double normalization = 0.0;

  static KernelParams make(int d, int k, int degree) {
    KernelParams p;
    p.d = d;
    p.k = k;
    p.nu = static_cast<double>(degree + d - 2 * k);
    p.normalization = fundamental_normalization(d, k);
    return p;
  }
};

/// phi as a function of r = |x|.
template <class Real>
Real phi_radial(const Real& r, int d, int k) {
  using std::log;
  using std::pow;
  if (r == Real(0)) return Real(0);
  const int e = 2 * k - d;
  Real v(1);
  for (int i = 0; i < e; ++i) v *= r;
  if (d % 2 == 0) v *= log(r);
  return v;
}

inline double phi(Coords x, const KernelParams& params) { return phi_radial(norm(x), params.d, params.k); }

/// A radial polynomial in u = |x - center|^2 / scale^2, restricted to
/// |x - center| < scale and zero outside.
struct RadialPoly {
  Point center;
  double scale = 1.0;
  std::vector<double> coeffs;  // coeffs[m] multiplies u^m

  double value_u(double u) const {
    if (u >= 1.0) return 0.0;
    double v = 0.0;
    for (std::size_t m = coeffs.size(); m-- > 0;) v = v * u + coeffs[m];
    return v;
  }

  double operator()(Coords x) const { return value_u(squared_distance(x, center) / (scale * scale)); }
};

/// (1 - |x - center|^2 / scale^2)^exponent on the ball, zero outside.
struct RadialBump {
  int exponent = 6;
  Point center;
  double scale = 1.0;

  RadialPoly polynomial() const {
    RadialPoly p{center, scale, {}};
    // binomial expansion of (1 - u)^exponent
    double c = 1.0;
    for (int m = 0; m <= exponent; ++m) {
      p.coeffs.push_back((m % 2 == 0 ? 1.0 : -1.0) * c);
      c = c * (exponent - m) / (m + 1);
    }
    return p;
  }

  double operator()(Coords x) const {
    const double u = squared_distance(x, center) / (scale * scale);
    return u >= 1.0 ? 0.0 : std::pow(1.0 - u, exponent);
  }
};

/// Delta^k of a radial polynomial in dimension d, termwise from
/// Delta r^{2m} = 2m (2m + d - 2) r^{2m-2}.
inline RadialPoly laplacian_power(const RadialPoly& f, int k, int d) {
  RadialPoly g = f;
  const double s2 = f.scale * f.scale;
  for (int step = 0; step < k; ++step) {
    std::vector<double> next(g.coeffs.size() > 1 ? g.coeffs.size() - 1 : 1, 0.0);
    for (std::size_t m = 1; m < g.coeffs.size(); ++m) {
      const double two_m = 2.0 * static_cast<double>(m);
      next[m - 1] = g.coeffs[m] * two_m * (two_m + d - 2) / s2;
    }
    g.coeffs = std::move(next);
  }
  return g;
}

/// Delta^k f for a bump; the exponent must be at least 2k + 2 so that the
/// result is continuous and compactly supported.
inline RadialPoly laplacian_power(const RadialBump& f, int k) {
  if (f.exponent < 2 * k + 2) {
    throw InputError("laplacian_power: bump exponent " + std::to_string(f.exponent) + " is below 2k + 2 = " +
                     std::to_string(2 * k + 2));
  }
  return laplacian_power(f.polynomial(), k, static_cast<int>(f.center.dim()));
}

/// sup |g| over the support, from a dense radial sample refined at the
/// critical points of g as a polynomial in u.
inline double sup_norm(const RadialPoly& g) {
  constexpr int kSamples = 10000;
  auto deriv = [&](double u) {
    double v = 0.0;
    for (std::size_t m = g.coeffs.size(); m-- > 1;) v = v * u + static_cast<double>(m) * g.coeffs[m];
    return v;
  };
  double best = std::abs(g.value_u(0.0));
  double prev_u = 0.0;
  double prev_d = deriv(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    const double u = std::min(static_cast<double>(i) / kSamples, std::nextafter(1.0, 0.0));
    best = std::max(best, std::abs(g.value_u(u)));
    const double du = deriv(u);
    if ((prev_d < 0.0) != (du < 0.0)) {
      double a = prev_u, b = u, fa = prev_d;
      for (int it = 0; it < 100; ++it) {
        const double c = 0.5 * (a + b);
        const double fc = deriv(c);
        if ((fc < 0.0) == (fa < 0.0)) {
          a = c;
          fa = fc;
        } else {
          b = c;
        }
      }
      best = std::max(best, std::abs(g.value_u(0.5 * (a + b))));
    }
    prev_u = u;
    prev_d = du;
  }
  return best;
}

template <class Real>
struct KernelError {
  Real error;
  Real normalized;
};

/// |phi(x - alpha) - sum a(xi, alpha) phi(x - xi)|, and the same divided by
/// rho^{2k-d} (1 + |x - alpha| / rho)^{-nu}, rho = pr.radius.
template <class Real>
KernelError<Real> local_kernel_error(const PolyRep<Real>& pr, const CenterSet& cs, Coords x,
                                     const KernelParams& params) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  auto dist = [&](Coords p) {
    Real s(0);
    for (std::size_t a = 0; a < x.size(); ++a) {
      const Real t = Real(x[a]) - Real(p[a]);
      s += t * t;
    }
    return sqrt(s);
  };
  Real approx(0);
  for (const auto& w : pr.weights) approx += w.value * phi_radial(dist(cs.point(w.index)), params.d, params.k);
  const Real to_alpha = dist(pr.alpha);
  const Real err = abs(phi_radial(to_alpha, params.d, params.k) - approx);
  const Real rho(pr.radius);
  const Real shape = pow(rho, Real(2 * params.k - params.d)) * pow(Real(1) + to_alpha / rho, Real(-params.nu));
  return {err, err / shape};
}

}  // namespace polyharm
