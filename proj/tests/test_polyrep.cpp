#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polyharm/polyrep.hpp"

using namespace polyharm;

namespace {

PolyRep<double> ok(const ReproductionResult<double>& r) {
  const auto* pr = as_rep(r);
  if (!pr) throw std::runtime_error(std::string("reproduction failed: ") + to_string(std::get<ReproductionFailure>(r)));
  return *pr;
}

double weight_of(const PolyRep<double>& pr, std::size_t idx) {
  for (const auto& w : pr.weights)
    if (w.index == idx) return w.value;
  return 0.0;
}

}  // namespace

TEST(MonomialExponents, CountsMatchBinomial) {
  for (std::size_t d = 1; d <= 3; ++d) {
    for (int l = 0; l <= 8; ++l) {
      EXPECT_EQ(monomial_exponents(d, l).size(), static_cast<std::size_t>(oracle::choose(l + static_cast<int>(d), static_cast<int>(d))));
      EXPECT_EQ(polynomial_space_dim(d, l), monomial_exponents(d, l).size());
    }
  }
  // graded: constant first
  const auto e = monomial_exponents(2, 3);
  EXPECT_EQ(e.front(), (MultiIndex{0, 0}));
}

TEST(BuildReproduction, PointMassAtCenter) {
  const CenterSet cs(1, {Point{0.0}, Point{1.0}, Point{2.5}});
  const auto& pr = ok(build_reproduction(cs, Point{1.0}, 0.5, 0));
  ASSERT_EQ(pr.weights.size(), 1u);
  EXPECT_EQ(pr.weights[0].index, 1u);
  EXPECT_NEAR(pr.weights[0].value, 1.0, 1e-14);
  EXPECT_NEAR(pr.stability, 1.0, 1e-14);
}

TEST(BuildReproduction, TwoPointLinearHandSolve) {
  // a0 + a1 = 1 and a1 * 1 = 0.5
  const CenterSet cs(1, {Point{0.0}, Point{1.0}});
  const auto& pr = ok(build_reproduction(cs, Point{0.5}, 0.6, 1));
  EXPECT_NEAR(weight_of(pr, 0), 0.5, 1e-14);
  EXPECT_NEAR(weight_of(pr, 1), 0.5, 1e-14);
  EXPECT_NEAR(stability_norm(pr), 1.0, 1e-14);
}

TEST(BuildReproduction, TriangleGivesBarycentricCoordinates) {
  const Point p0{0.0, 0.0}, p1{2.0, 0.0}, p2{0.5, 1.5};
  const CenterSet cs(2, {p0, p1, p2});
  const Point alpha{0.8, 0.4};
  // barycentric coordinates by Cramer's rule on the 3x3 system
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  const double l1 = ((alpha[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (alpha[1] - p0[1])) / det;
  const double l2 = ((p1[0] - p0[0]) * (alpha[1] - p0[1]) - (alpha[0] - p0[0]) * (p1[1] - p0[1])) / det;
  const double l0 = 1.0 - l1 - l2;
  const auto& pr = ok(build_reproduction(cs, alpha, 3.0, 1));
  EXPECT_NEAR(weight_of(pr, 0), l0, 1e-13);
  EXPECT_NEAR(weight_of(pr, 1), l1, 1e-13);
  EXPECT_NEAR(weight_of(pr, 2), l2, 1e-13);
  for (const auto& w : pr.weights) {
    EXPECT_GT(w.value, 0.0);
    EXPECT_LT(w.value, 1.0);
  }
  EXPECT_NEAR(pr.stability, 1.0, 1e-13);
}

TEST(BuildReproduction, Failures) {
  const CenterSet cs(2, {Point{0.0, 0.0}, Point{1.0, 0.0}, Point{2.0, 0.0}, Point{3.0, 0.0}});
  // too few points for quadratics in the plane
  auto r = build_reproduction(cs, Point{1.0, 0.0}, 10.0, 2);
  ASSERT_TRUE(std::holds_alternative<ReproductionFailure>(r));
  EXPECT_EQ(std::get<ReproductionFailure>(r), ReproductionFailure::InsufficientPoints);
  // collinear points cannot reproduce y
  r = build_reproduction(cs, Point{1.0, 0.0}, 10.0, 1);
  ASSERT_TRUE(std::holds_alternative<ReproductionFailure>(r));
  EXPECT_EQ(std::get<ReproductionFailure>(r), ReproductionFailure::RankDeficient);
  EXPECT_THROW(build_reproduction(cs, Point{1.0, 0.0}, 0.0, 1), InputError);
  EXPECT_THROW(build_reproduction(cs, Point{1.0, 0.0}, 1.0, -1), InputError);
  EXPECT_THROW(build_reproduction(cs, Point{1.0}, 1.0, 0), InputError);
}

TEST(BuildReproduction, MatchesIndependentMinimumNormSolve) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t d = 1 + rep % 2;
    const int l = rep % 5;
    const auto pts = oracle::random_points(rng, 60, d, -1.0, 1.0);
    const CenterSet cs(d, pts);
    const Point alpha = oracle::random_points(rng, 1, d, -0.3, 0.3)[0];
    const double radius = 0.9;
    const auto res = build_reproduction(cs, alpha, radius, l);
    const auto hits = oracle::scan_within(pts, alpha, radius);
    std::vector<Point> nb;
    for (auto& h : hits) nb.push_back(pts[h.first]);
    const auto want = oracle::min_norm_weights(nb, alpha, l, radius);
    ASSERT_EQ(want.has_value(), as_rep(res) != nullptr);
    if (!want) continue;
    const auto& pr = ok(res);
    for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_NEAR(weight_of(pr, hits[i].first), (*want)[i], 1e-9);
  }
}

TEST(BuildReproduction, SupportStabilityAndPrecision) {
  std::mt19937_64 rng(8);
  for (int l = 0; l <= 7; ++l) {
    for (std::size_t d : {1u, 2u}) {
      const auto pts = oracle::random_points(rng, d == 1 ? 40 : 120, d, -1.0, 1.0);
      const CenterSet cs(d, pts);
      const Point alpha = Point::zeros(d);
      const auto res = build_reproduction(cs, alpha, 1.0, l);
      const auto* pr = as_rep(res);
      if (!pr) continue;
      for (const auto& w : pr->weights) EXPECT_LE(distance(cs.point(w.index), alpha), 1.0);
      EXPECT_NEAR(pr->stability, stability_norm(*pr), 1e-15);
      EXPECT_GE(pr->stability, 1.0 - 1e-9);
      EXPECT_LE(verify_reproduction(*pr, cs), 1e-9) << "degree " << l << " dim " << d;
    }
  }
}

TEST(BuildReproduction, TranslationAndScalingCovariance) {
  std::mt19937_64 rng(4);
  const auto pts = oracle::random_points(rng, 80, 2, -1.0, 1.0);
  const CenterSet cs(2, pts);
  const Point alpha{0.1, -0.05};
  const auto& base = ok(build_reproduction(cs, alpha, 0.8, 3));

  const double shift[2] = {12.5, -7.25};
  std::vector<Point> moved;
  for (const auto& p : pts) moved.push_back(Point{p[0] + shift[0], p[1] + shift[1]});
  const CenterSet cs_moved(2, moved);
  const auto& tr = ok(build_reproduction(cs_moved, Point{alpha[0] + shift[0], alpha[1] + shift[1]}, 0.8, 3));
  ASSERT_EQ(tr.weights.size(), base.weights.size());
  for (const auto& w : base.weights) EXPECT_NEAR(weight_of(tr, w.index), w.value, 1e-10);

  const double lambda = 0.037;
  std::vector<Point> scaled;
  for (const auto& p : pts) scaled.push_back(Point{p[0] * lambda, p[1] * lambda});
  const CenterSet cs_scaled(2, scaled);
  const auto& sc = ok(build_reproduction(cs_scaled, Point{alpha[0] * lambda, alpha[1] * lambda}, 0.8 * lambda, 3));
  ASSERT_EQ(sc.weights.size(), base.weights.size());
  for (const auto& w : base.weights) EXPECT_NEAR(weight_of(sc, w.index), w.value, 1e-10);
}

TEST(VerifyReproduction, PerturbedWeightShowsResidual) {
  const CenterSet cs(1, {Point{0.0}, Point{1.0}, Point{2.0}});
  auto pr = ok(build_reproduction(cs, Point{1.0}, 1.5, 0));
  pr.weights[0].value += 0.1;
  EXPECT_NEAR(verify_reproduction(pr, cs), 0.1, 1e-14);
}

TEST(VerifyReproduction, RandomPolynomialIsReproduced) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> coef(0.0, 1.0);
  for (int l = 1; l <= 6; ++l) {
    const auto pts = oracle::random_points(rng, 100, 2, -1.0, 1.0);
    const CenterSet cs(2, pts);
    const Point alpha{0.05, 0.1};
    const auto res = build_reproduction(cs, alpha, 1.0, l);
    const auto* pr = as_rep(res);
    ASSERT_NE(pr, nullptr);
    const auto basis = oracle::exponents(2, l);
    std::vector<double> c(basis.size());
    double scale = 0.0;
    for (auto& v : c) {
      v = coef(rng);
      scale = std::max(scale, std::abs(v));
    }
    auto p = [&](Coords x) {
      double s = 0.0;
      for (std::size_t b = 0; b < basis.size(); ++b) s += c[b] * std::pow(x[0], basis[b][0]) * std::pow(x[1], basis[b][1]);
      return s;
    };
    double approx = 0.0;
    for (const auto& w : pr->weights) approx += w.value * p(cs.point(w.index));
    EXPECT_LE(std::abs(approx - p(alpha)), 1e-8 * scale);
  }
}

TEST(StabilityNorm, HandExamples) {
  PolyRep<double> pr;
  pr.weights = {{0, 0.5}, {1, 0.5}};
  EXPECT_DOUBLE_EQ(stability_norm(pr), 1.0);
  pr.weights = {{0, 2.0}, {1, -1.0}};
  EXPECT_DOUBLE_EQ(stability_norm(pr), 3.0);
}

TEST(ReproductionCache, ReusesTranslatedNeighbourhoods) {
  std::vector<Point> pts;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j) pts.push_back(Point{i * 0.1, j * 0.1});
  const CenterSet cs(2, pts);
  ReproductionCache cache;
  for (int i = -5; i <= 5; ++i) {
    const Point alpha{i * 0.1 + 0.03, 0.02};
    const auto nbrs = cs.index().within(alpha, 0.35);
    const auto cached = cache.solve(cs, alpha, 0.35, 2, nbrs);
    const auto direct = build_reproduction(cs, alpha, 0.35, 2);
    const auto& a = ok(cached);
    const auto& b = ok(direct);
    for (const auto& w : b.weights) EXPECT_NEAR(weight_of(a, w.index), w.value, 1e-12);
  }
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_EQ(cache.hits(), 10u);
}
