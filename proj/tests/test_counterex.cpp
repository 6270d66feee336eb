#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rigidhom/counterex.hpp"

using namespace rigidhom;

namespace {

CounterexConfig small(double a = 100.0) {
  CounterexConfig c;
  c.a = a;
  c.rho = 1.0;
  c.epsilon = 1.0 / 8;
  c.h = 1.0 / 64;
  c.cap = 0.5;
  return c;
}

// Datum plus random rectangles carrying random capped skew motions.
LabelField random_capped(const CounterexConfig &cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto u = datum_field(cfg);
  const Grid &g = u.grid;
  const int n = g.nx;
  const int rects = 1 + static_cast<int>(rng() % 6);
  for (int r = 0; r < rects; ++r) {
    const int w = 2 + static_cast<int>(rng() % (n / 2)), ht = 1 + static_cast<int>(rng() % 24);
    const int i0 = 1 + static_cast<int>(rng() % (n - w - 2));
    const int j0 = n / 2 - ht / 2 + static_cast<int>(rng() % 9) - 4;
    const double m = cfg.cap * (2 * U(rng) - 1);
    const Vec2 b{2 * U(rng) - 0.5, 2 * U(rng) - 1};
    u.labels.push_back({Mat2::skew(m), b});
    for (int j = std::max(1, j0); j < std::min(n - 1, j0 + ht); ++j)
      for (int i = i0; i < i0 + w; ++i) u.assign[g.index(i, j)] = static_cast<int>(u.labels.size()) - 1;
  }
  return u;
}

} // namespace

TEST(Strip, SquareCountAndGrid) {
  auto c = small();
  EXPECT_EQ(c.squares(), 56);
  const auto u = build_strip_competitor(c);
  EXPECT_EQ(u.labels.size(), 58u);
  const Grid ref = rasterize_box({0, 0}, 2.0, 2.0, e2, c.h);
  EXPECT_TRUE(u.grid.same_layout(ref));
  // |grad| of the strip labels
  EXPECT_NEAR(frob(u.labels[2].M), 4 * std::sqrt(2.0) / c.epsilon, 1e-12);
}

TEST(Strip, RejectsIndivisibleConfigs) {
  auto c = small();
  c.h = 1.0 / 48;
  EXPECT_THROW(build_strip_competitor(c), InvalidArgument);
  c = small();
  c.epsilon = 0.3;
  EXPECT_THROW(build_strip_competitor(c), InvalidArgument);
  c = small();
  c.h = 1.0 / 32;
  EXPECT_THROW(build_strip_competitor(c), InvalidArgument);
}

TEST(Strip, JumpStructure) {
  const auto r = verify_upper_bound(small());
  EXPECT_NEAR(r.gamma_length, 2 * small().epsilon, 1e-12);
  EXPECT_LE(r.max_vertical_jump, 1.0 + 1e-12);
  EXPECT_EQ(r.max_u1_jump_off_gamma, 0.0);
  EXPECT_LE(r.max_u2_jump_off_gamma, 1.0 + 1e-12);
}

TEST(Strip, TermsMatchClosedForms) {
  for (double a : {10.0, 100.0}) {
    for (double h : {1.0 / 64, 1.0 / 128}) {
      auto c = small(a);
      c.h = h;
      const auto r = verify_upper_bound(c);
      ASSERT_TRUE(r.exact.has_value());
      EXPECT_NEAR(r.measured.vertical, r.exact->vertical, 1e-10 * r.exact->vertical);
      EXPECT_NEAR(r.measured.squares, r.exact->squares, 1e-10 * r.exact->squares);
      EXPECT_NEAR(r.measured.gamma, r.exact->gamma, 1e-10 * r.exact->gamma);
      EXPECT_NEAR(r.energy, r.measured.total(), 1e-9 * r.energy);
      EXPECT_TRUE(r.pass);
    }
  }
}

TEST(Strip, EnergyMatchesDirectSum) {
  auto c = small();
  c.rho = 0.25;
  c.epsilon = 1.0 / 16;
  c.h = 1.0 / 128;
  const auto u = build_strip_competitor(c);
  const auto f = SurfaceDensity::counterexample(c.a);
  EXPECT_NEAR(surface_energy(u, f, c.epsilon), oracle::energy(u.grid, u.labels, u.assign, f, c.epsilon), 1e-9);
}

TEST(Strip, UnitParameterSanity) { EXPECT_TRUE(verify_upper_bound(small(1.0)).pass); }

TEST(Richardson, InterceptOfLinearEnergy) {
  auto c = small();
  c.h = 1.0 / 256;
  const auto r = richardson_strip(c, {1.0 / 8, 1.0 / 16, 1.0 / 32});
  // eps -> 0 limit of the exact decomposition: 12 rho + 21 a rho
  EXPECT_NEAR(r.intercept, 12 + 21 * c.a, 1e-8);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(richardson_strip(c, {1.0 / 8, 1.0 / 32}), InvalidArgument);
}

TEST(Slicing, FlatDatum) {
  const auto c = small();
  const auto u = datum_field(c);
  const auto s = slicing_certificate(u, c);
  EXPECT_EQ(s.i1, u.grid.nx);
  EXPECT_EQ(s.anomalous, 0);
  EXPECT_NEAR(s.certificate, 30 * c.rho * c.a, 1e-9);
  EXPECT_LE(s.certificate, surface_energy(u, SurfaceDensity::counterexample(c.a), c.epsilon));
}

TEST(Slicing, RejectsStripAndSmallA) {
  const auto c = small();
  EXPECT_THROW(slicing_certificate(build_strip_competitor(c), c), InvalidArgument);
  EXPECT_THROW(slicing_certificate(datum_field(small(5.0)), small(5.0)), InvalidArgument);
}

TEST(Slicing, CappedStripUsesTwoJumpColumns) {
  const auto c = small();
  const auto u = strip_field(c, c.cap);
  const auto s = slicing_certificate(u, c);
  EXPECT_EQ(s.i2, c.squares() * 2); // eps/4 = 2 cells per square
  EXPECT_EQ(s.case_a, c.squares());
  EXPECT_GE(s.certificate, 30 * c.rho * c.a);
  EXPECT_LE(s.certificate, surface_energy(u, SurfaceDensity::counterexample(c.a), c.epsilon));
}

TEST(Slicing, SoundOnRandomCappedFields) {
  for (double a : {10.0, 100.0}) {
    const auto c = small(a);
    const auto f = SurfaceDensity::counterexample(a);
    for (std::uint64_t k = 0; k < 25; ++k) {
      const auto u = random_capped(c, 1000 + k);
      const auto s = slicing_certificate(u, c);
      EXPECT_LE(s.certificate, surface_energy(u, f, c.epsilon) * (1 + 1e-12)) << "seed " << k;
    }
  }
}

TEST(Gap, SmallConfigHasGap) {
  GapOptions o;
  o.jobs = 2;
  auto c = small();
  c.epsilon = 1.0 / 32;
  c.h = 1.0 / 256;
  const auto r = run_gap_experiment(c, o);
  ASSERT_TRUE(r.ratio.has_value());
  EXPECT_LT(*r.ratio, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.candidates.size(), 3u);
  for (const auto &k : r.candidates) EXPECT_TRUE(k.sound) << k.name;
  EXPECT_TRUE(r.certificates_reach_target);
  // at eps = 1/8 the 2 eps a (a + 5) term on Gamma+- still dominates
  GapOptions q;
  q.run_local = false;
  const auto coarse = run_gap_experiment(small(), q);
  EXPECT_GT(*coarse.ratio, 1.0);
  EXPECT_LT(*coarse.ratio_limit, 1.0);
}

TEST(Gap, NegativeControlAndMonotoneLimit) {
  GapOptions o;
  o.run_local = false;
  const auto r1 = run_gap_experiment(small(1.0), o);
  EXPECT_FALSE(r1.ratio.has_value());
  EXPECT_FALSE(r1.pass);
  double prev = 1e9;
  for (double a : {10.0, 30.0, 100.0}) {
    const auto r = run_gap_experiment(small(a), o);
    ASSERT_TRUE(r.ratio_limit.has_value());
    EXPECT_LT(*r.ratio_limit, prev);
    prev = *r.ratio_limit;
  }
}
