#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "polyharm/density.hpp"

using namespace polyharm;

namespace {

DensityField field(std::vector<std::pair<double, double>> xr) {
  std::vector<Point> pts;
  std::vector<double> rho;
  for (auto [x, r] : xr) {
    pts.push_back(Point{x});
    rho.push_back(r);
  }
  return DensityField(1, pts, rho);
}

DensityField random_field(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  auto pts = oracle::random_points(rng, n, dim, -5.0, 5.0);
  std::uniform_real_distribution<double> lr(-4.0, 1.0);
  std::vector<double> rho;
  for (std::size_t i = 0; i < n; ++i) rho.push_back(std::exp2(lr(rng)));
  return DensityField(dim, pts, rho);
}

// Independent pair scans written directly from the definitions.
double scan_sg(const DensityField& df, double eps) {
  double c = 0.0;
  for (std::size_t x = 0; x < df.size(); ++x)
    for (std::size_t a = 0; a < df.size(); ++a) {
      const double t = oracle::dist(df.point(x), df.point(a));
      c = std::max(c, df.rho(a) / (df.rho(x) * std::pow(1.0 + t / df.rho(x), 1.0 - eps)));
    }
  return c;
}

double scan_majorant(const DensityField& df, Coords x, double r) {
  double h = 0.0;
  for (std::size_t y = 0; y < df.size(); ++y)
    h = std::max(h, df.rho(y) / std::pow(1.0 + oracle::dist(x, df.point(y)) / df.rho(y), r));
  return h;
}

}  // namespace

TEST(DensityParams, Validation) {
  DensityParams p;
  EXPECT_NO_THROW(p.validate());
  p.growth_exponent = 1.0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.majorant_exponent = 0.0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.stability_cap = 1.0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.degree = -1;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.degree = 14;
  EXPECT_DOUBLE_EQ(p.cap(2), 4.0 * 120.0);
}

TEST(DensityField, RejectsNonPositiveValues) {
  EXPECT_THROW(field({{0.0, 0.0}}), InputError);
  EXPECT_THROW(field({{0.0, -1.0}}), InputError);
  EXPECT_THROW(field({{0.0, std::numeric_limits<double>::infinity()}}), InputError);
}

TEST(MinimalDensity, MidpointOfUniformGrid) {
  const double h = 0.25;
  std::vector<Point> pts;
  for (int i = -8; i <= 8; ++i) pts.push_back(Point{i * h});
  const CenterSet cs(1, pts);
  const Point alpha{0.5 * h};
  const auto md = minimal_density(cs, alpha, 1, 3.0);
  EXPECT_LE(md.rho, h);
  EXPECT_DOUBLE_EQ(md.rho, 0.5 * h);
  ASSERT_EQ(md.rep.weights.size(), 2u);
  for (const auto& w : md.rep.weights) EXPECT_NEAR(w.value, 0.5, 1e-14);
  const auto want = oracle::scan_minimal_density(pts, alpha, 1, 3.0);
  ASSERT_TRUE(want);
  EXPECT_DOUBLE_EQ(md.rho, want->rho);
}

TEST(MinimalDensity, CoincidentCenterDegreeZero) {
  const CenterSet cs(2, {Point{0.0, 0.0}, Point{1.0, 0.0}, Point{0.0, 1.0}});
  const auto md = minimal_density(cs, Point{1.0, 0.0}, 0, 1.5);
  EXPECT_EQ(md.rho, 0.0);
  ASSERT_EQ(md.rep.weights.size(), 1u);
  EXPECT_EQ(md.rep.weights[0].index, 1u);
  EXPECT_NEAR(md.rep.weights[0].value, 1.0, 1e-15);
}

TEST(MinimalDensity, Errors) {
  const CenterSet cs(1, {Point{0.0}, Point{1.0}});
  EXPECT_THROW(minimal_density(cs, Point{0.5}, 2, 10.0), InputError);
  // collinear plane data can never reproduce linears
  const CenterSet line(2, {Point{0.0, 0.0}, Point{1.0, 0.0}, Point{2.0, 0.0}, Point{3.0, 0.0}});
  EXPECT_THROW(minimal_density(line, Point{1.0, 1.0}, 1, 100.0), NoAdmissibleRadius);
  // cap unreachable
  try {
    minimal_density(cs, Point{5.0}, 1, 1.5);
    FAIL();
  } catch (const NoAdmissibleRadius& e) {
    EXPECT_NE(std::string(e.what()).find("5.0"), std::string::npos);
  }
}

TEST(MinimalDensity, MatchesBruteForceScan) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t d = 1 + rep % 2;
    const int l = rep % 4;
    const auto pts = oracle::random_points(rng, d == 1 ? 30 : 80, d, -1.0, 1.0);
    const CenterSet cs(d, pts);
    const Point alpha = oracle::random_points(rng, 1, d, -0.8, 0.8)[0];
    const double cap = default_stability_cap(d, l);
    const auto want = oracle::scan_minimal_density(pts, alpha, l, cap);
    if (!want) {
      EXPECT_THROW(minimal_density(cs, alpha, l, cap), NoAdmissibleRadius);
      continue;
    }
    const auto md = minimal_density(cs, alpha, l, cap);
    EXPECT_NEAR(md.rho, want->rho, 1e-12) << "rep " << rep;
    EXPECT_LT(md.rep.stability, cap);
  }
}

TEST(MinimalDensity, AddingCentersNeverIncreasesRho) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    auto pts = oracle::random_points(rng, 60, 2, -1.0, 1.0);
    const Point alpha{0.1, 0.2};
    const double cap = 1e6;  // effectively uncapped: unisolvency is monotone
    const double before = minimal_density(CenterSet(2, pts), alpha, 2, cap).rho;
    auto extra = oracle::random_points(rng, 20, 2, -1.0, 1.0);
    pts.insert(pts.end(), extra.begin(), extra.end());
    const double after = minimal_density(CenterSet(2, pts), alpha, 2, cap).rho;
    EXPECT_LE(after, before + 1e-15);
    const auto want = oracle::scan_minimal_density(pts, alpha, 2, cap);
    ASSERT_TRUE(want);
    EXPECT_NEAR(after, want->rho, 1e-12);
  }
}

TEST(MinimalDensity, CacheDoesNotChangeResults) {
  std::vector<Point> pts;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) pts.push_back(Point{i * 0.05, j * 0.05});
  const CenterSet cs(2, pts);
  ReproductionCache cache;
  for (int t = 0; t < 20; ++t) {
    const Point a{0.3 + 0.05 * (t % 5) + 0.011, 0.3 + 0.05 * (t / 5) + 0.007};
    const auto x = minimal_density(cs, a, 3, 40.0);
    const auto y = minimal_density(cs, a, 3, 40.0, &cache);
    EXPECT_EQ(x.rho, y.rho);
  }
  EXPECT_GT(cache.hits(), 0u);
}

TEST(Majorant, ConstantField) {
  const auto df = field({{0.0, 0.3}, {1.0, 0.3}, {2.5, 0.3}});
  for (std::size_t i = 0; i < df.size(); ++i) EXPECT_DOUBLE_EQ(majorant(df, df.point(i), 2.0), 0.3);
}

TEST(Majorant, TwoSampleHandValue) {
  const auto df = field({{0.0, 1.0}, {10.0, 100.0}});
  EXPECT_NEAR(majorant(df, Point{0.0}, 1.0), 100.0 / 1.1, 1e-12);
}

TEST(Majorant, MatchesExhaustiveAndDominatesField) {
  std::mt19937_64 rng(1);
  const auto df = random_field(rng, 100, 2);
  for (const auto& x : oracle::random_points(rng, 20, 2, -6.0, 6.0)) EXPECT_DOUBLE_EQ(majorant(df, x, 1.5), scan_majorant(df, x, 1.5));
  const auto h = majorant_field(df, 1.5);
  for (std::size_t i = 0; i < df.size(); ++i) EXPECT_GE(h.rho(i), df.rho(i));
  EXPECT_THROW(majorant(DensityField(), Point{0.0}, 1.0), InputError);
}

TEST(Majorant, MajorantOfMajorantIsBoundedMultiple) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const auto df = random_field(rng, 80, 1);
    const auto h = majorant_field(df, 2.0);
    const auto hh = majorant_field(h, 2.0);
    for (std::size_t i = 0; i < df.size(); ++i) {
      EXPECT_GE(hh.rho(i), h.rho(i));
      EXPECT_LE(hh.rho(i), std::exp2(2.0) * h.rho(i));
    }
  }
}

TEST(CertifySlowGrowth, Examples) {
  EXPECT_DOUBLE_EQ(certify_slow_growth(field({{0.0, 2.0}, {1.0, 2.0}, {5.0, 2.0}}), 0.3), 1.0);
  // rho = max(1, |x|) on {0,2,4,8}, epsilon = 0
  const auto df = field({{0.0, 1.0}, {2.0, 2.0}, {4.0, 4.0}, {8.0, 8.0}});
  EXPECT_DOUBLE_EQ(certify_slow_growth(df, 0.0), 1.0);
  EXPECT_THROW(certify_slow_growth(df, 1.0), InputError);
}

TEST(CertifySelfMajorization, Examples) {
  EXPECT_DOUBLE_EQ(certify_self_majorization(field({{0.0, 2.0}, {1.0, 2.0}, {5.0, 2.0}}), 2.0), 1.0);
  EXPECT_NEAR(certify_self_majorization(field({{0.0, 1.0}, {1.0, 10.0}}), 1.0), 0.11, 1e-15);
  std::mt19937_64 rng(6);
  EXPECT_LE(certify_self_majorization(random_field(rng, 50, 2), 3.0), 1.0);
  EXPECT_THROW(certify_self_majorization(field({{0.0, 1.0}}), 0.0), InputError);
}

TEST(Certify, MatchesScanAndIsRelabelAndTranslationInvariant) {
  std::mt19937_64 rng(44);
  const auto df = random_field(rng, 60, 2);
  EXPECT_DOUBLE_EQ(certify_slow_growth(df, 0.25), scan_sg(df, 0.25));

  std::vector<std::size_t> perm(df.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> pts, moved;
  std::vector<double> rho;
  for (std::size_t i : perm) {
    pts.push_back(df.point(i));
    rho.push_back(df.rho(i));
  }
  for (std::size_t i = 0; i < df.size(); ++i) moved.push_back(Point{df.point(i)[0] + 3.0, df.point(i)[1] - 8.0});
  const DensityField shuffled(2, pts, rho);
  const DensityField shifted(2, moved, df.values());
  EXPECT_DOUBLE_EQ(certify_slow_growth(shuffled, 0.25), certify_slow_growth(df, 0.25));
  EXPECT_DOUBLE_EQ(certify_self_majorization(shuffled, 2.0), certify_self_majorization(df, 2.0));
  EXPECT_NEAR(certify_slow_growth(shifted, 0.25), certify_slow_growth(df, 0.25), 1e-12);
  EXPECT_NEAR(certify_self_majorization(shifted, 2.0), certify_self_majorization(df, 2.0), 1e-12);
}

TEST(ConstantTransfer, SelfMajorizationToSlowGrowth) {
  auto t = lemma_transfer_sm_to_sg(1.0, 1.0);
  EXPECT_DOUBLE_EQ(t.epsilon, 0.5);
  EXPECT_DOUBLE_EQ(t.c_sg, 2.0);
  t = lemma_transfer_sm_to_sg(0.5, 2.0);
  EXPECT_DOUBLE_EQ(t.epsilon, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.c_sg, 8.0);
  t = lemma_transfer_sm_to_sg(1.0, 1e-9);
  EXPECT_NEAR(t.epsilon, 1.0, 1e-8);
  EXPECT_NEAR(t.c_sg, 1.0, 1e-8);
  EXPECT_THROW(lemma_transfer_sm_to_sg(0.0, 1.0), InputError);
  EXPECT_THROW(lemma_transfer_sm_to_sg(-0.1, 1.0), InputError);
}

TEST(ConstantTransfer, SlowGrowthToSelfMajorization) {
  auto t = lemma_transfer_sg_to_sm(1.0, 0.5);
  EXPECT_DOUBLE_EQ(t.r, 1.0);
  EXPECT_DOUBLE_EQ(t.c_sm, 0.5);
  t = lemma_transfer_sg_to_sm(2.0, 1.0 / 3.0);
  EXPECT_NEAR(t.r, 2.0, 1e-15);
  EXPECT_NEAR(t.c_sm, std::exp2(-5.0), 1e-15);
  t = lemma_transfer_sg_to_sm(1.0, 1.0 - 1e-9);
  EXPECT_NEAR(t.r, 0.0, 1e-8);
  EXPECT_THROW(lemma_transfer_sg_to_sm(0.5, 0.5), InputError);
  EXPECT_THROW(lemma_transfer_sg_to_sm(1.0, 0.0), InputError);
  EXPECT_THROW(lemma_transfer_sg_to_sm(1.0, 1.0), InputError);
}

TEST(ConstantTransfer, RoundTripHoldsOnRandomFields) {
  std::mt19937_64 rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    const auto df = random_field(rng, 40, 1 + rep % 2);
    for (double r : {1.0, 2.0, 3.0}) {
      const auto t = lemma_transfer_sm_to_sg(certify_self_majorization(df, r), r);
      EXPECT_LE(certify_slow_growth(df, t.epsilon), t.c_sg);
    }
    for (double eps : {0.25, 1.0 / 3.0, 0.5}) {
      const auto t = lemma_transfer_sg_to_sm(certify_slow_growth(df, eps), eps);
      EXPECT_GE(certify_self_majorization(df, t.r), t.c_sm);
    }
  }
}

TEST(ValidateRateParams, Examples) {
  EXPECT_TRUE(validate_theorem1_params(2, 2, 14, 1.0 / 3.0).empty());
  // a degree this low forces epsilon > 1 as well
  auto v = validate_theorem1_params(2, 2, 3, 0.9);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], RateViolation::DegreeTooLow);
  EXPECT_EQ(v[1], RateViolation::GrowthExponentTooSmall);
  v = validate_theorem1_params(2, 2, 14, 0.2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], RateViolation::GrowthExponentTooSmall);
  EXPECT_THROW(validate_theorem1_params(1, 2, 5, 0.5), InputError);
  EXPECT_FALSE(describe(RateViolation::DegreeTooLow).empty());
}
