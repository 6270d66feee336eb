#include <gtest/gtest.h>

#include <cmath>

#include "rigidhom/env.hpp"

using namespace rigidhom;

namespace {

std::vector<Vec2> sample_points() {
  std::vector<Vec2> xs;
  for (int i = 0; i < 23; ++i) xs.push_back({-3.7 + 0.41 * i, 2.9 - 0.37 * i});
  return xs;
}

} // namespace

TEST(Density, ConstantIsConstant) {
  const auto f = SurfaceDensity::constant(1.0);
  EXPECT_EQ(eval_density(f, {0.3, -7.0}, {2, 1}, {0, 1}), 1.0);
  EXPECT_EQ(eval_density(f, {10, 10}, {-1, 0}, {std::sqrt(0.5), std::sqrt(0.5)}), 1.0);
}

TEST(Density, CounterexampleValues) {
  const auto f = SurfaceDensity::counterexample(10.0);
  EXPECT_DOUBLE_EQ(eval_density(f, {0, 0}, e1, e2), 150.0);
  EXPECT_DOUBLE_EQ(eval_density(f, {0, 0.3}, e1, e2), 1000.0);
  EXPECT_DOUBLE_EQ(eval_density(f, {0, 0.3}, {3, -2}, {0.6, 0.8}), 1000.0);
  // periodic in x2 with period 1
  EXPECT_DOUBLE_EQ(eval_density(f, {0.2, 1.0}, e1, e2), 150.0);
  EXPECT_DOUBLE_EQ(eval_density(f, {0.2, -0.7}, e1, e2), 1000.0);
  // jump cap a^2 and vertical normal weight
  EXPECT_DOUBLE_EQ(eval_density(f, {0, 0}, {100, 0}, e1), 100.0);
}

TEST(Density, RejectsBadArguments) {
  const auto f = SurfaceDensity::constant(2.0);
  EXPECT_THROW(eval_density(f, {0, 0}, {0, 0}, e2), InvalidArgument);
  EXPECT_THROW(eval_density(f, {0, 0}, e1, {0, 1.0001}), InvalidArgument);
  EXPECT_NO_THROW(eval_density(f, {0, 0}, e1, {0, 1.0 + 1e-13}));
}

TEST(Density, BoundsAndSymmetryOnSamples) {
  const std::vector<SurfaceDensity> fs{SurfaceDensity::constant(2.0), SurfaceDensity::layered(0.5, 1.0),
                                       SurfaceDensity::checkerboard({3, 0}, {1.0, 2.0}),
                                       SurfaceDensity::counterexample(10.0)};
  const std::vector<Vec2> zetas{{1, 0}, {0, 2}, {-3, 0.5}, {0.01, -0.2}};
  const std::vector<Vec2> nus{e1, e2, {0.6, 0.8}, {-std::sqrt(0.5), std::sqrt(0.5)}};
  for (const auto &f : fs)
    for (Vec2 x : sample_points())
      for (Vec2 z : zetas)
        for (Vec2 n : nus) {
          const double v = f(x, z, n);
          EXPECT_GE(v, f.params().c1);
          EXPECT_LE(v, f.params().c2);
          EXPECT_EQ(v, f(x, -z, -n));
        }
}

TEST(Density, LayeredTable) {
  const auto f = SurfaceDensity::layered(0.5, 1.0);
  EXPECT_EQ(f.eval({0.3, 0.0}, e1, e2), 0.5);
  EXPECT_EQ(f.eval({0.3, 0.49}, e1, e2), 0.5);
  EXPECT_EQ(f.eval({0.3, 0.5}, e1, e2), 1.0);
  EXPECT_EQ(f.eval({-4.2, -0.25}, e1, e2), 1.0);
  EXPECT_EQ(f.eval({-4.2, -0.75}, e1, e2), 0.5);
}

TEST(Shift, ConstantIsIdentity) {
  const auto f = SurfaceDensity::constant(1.0);
  const auto g = shift_environment(f, {5, -3});
  for (Vec2 x : sample_points()) EXPECT_EQ(g(x, e1, e2), f(x, e1, e2));
}

TEST(Shift, PeriodicTableByPeriod) {
  const auto f = SurfaceDensity::periodic(3, 2, {1.0, 1.5, 2.0, 2.5, 3.0, 3.5});
  const auto g = shift_environment(f, {1, 0});
  for (Vec2 x : sample_points()) EXPECT_EQ(g(x, e1, e2), f(x, e1, e2));
}

TEST(Shift, CheckerboardMatchesTableLookup) {
  const std::vector<double> vals{1.0, 2.0};
  const EnvSeed seed{7, 0};
  const auto f = SurfaceDensity::checkerboard(seed, vals);
  const auto g = shift_environment(f, {2, 0});
  // direct lookup of the cell (2, 0) value
  const double expected = vals[counter_hash(seed, 2, 0) % vals.size()];
  EXPECT_EQ(g({0.5, 0.5}, e1, e2), expected);
  EXPECT_EQ(f({2.5, 0.5}, e1, e2), expected);
}

TEST(Shift, CovarianceIsBitExact) {
  const std::vector<SurfaceDensity> fs{SurfaceDensity::checkerboard({11, 2}, {1.0, 1.25, 2.0}),
                                       SurfaceDensity::periodic(2, 2, {1.0, 2.0, 3.0, 4.0}),
                                       SurfaceDensity::counterexample(5.0)};
  const std::vector<Vec2> shifts{{2, 0}, {-3, 5}, {17, -11}};
  for (const auto &f : fs)
    for (Vec2 z : shifts) {
      const auto g = shift_environment(f, z);
      for (Vec2 x : sample_points()) EXPECT_EQ(g(x, {1, 2}, e2), f(x + z, {1, 2}, e2));
    }
}

TEST(Shift, RejectsFractionalShift) {
  EXPECT_THROW(shift_environment(SurfaceDensity::layered(0.5, 1), {0.5, 0}), InvalidArgument);
}

TEST(Shift, SameSeedSameEnvironment) {
  const auto f = SurfaceDensity::checkerboard({99, 4}, {1.0, 2.0});
  const auto g = SurfaceDensity::checkerboard({99, 4}, {1.0, 2.0});
  const auto h = SurfaceDensity::checkerboard({99, 5}, {1.0, 2.0});
  int differ = 0;
  for (int i = -20; i < 20; ++i)
    for (int j = -20; j < 20; ++j) {
      const Vec2 x{i + 0.5, j + 0.5};
      EXPECT_EQ(f(x, e1, e2), g(x, e1, e2));
      differ += f(x, e1, e2) != h(x, e1, e2);
    }
  EXPECT_GT(differ, 100);
}

TEST(Modulus, DefaultAndValidation) {
  const Modulus s;
  EXPECT_EQ(s(0.0), 0.0);
  EXPECT_DOUBLE_EQ(s(0.2), 0.2);
  EXPECT_DOUBLE_EQ(s(3.0), 0.5);
  EXPECT_THROW(Modulus({{0.1, 0.0}, {1, 0.5}}), InvalidArgument);
  EXPECT_THROW(Modulus({{0.0, 0.0}, {1, 0.6}}), InvalidArgument);
  EXPECT_THROW(Modulus({{0.0, 0.0}, {1, 0.3}, {2, 0.2}}), InvalidArgument);
}

TEST(Axioms, ConstantPassesEverything) {
  const auto rep = validate_axioms(SurfaceDensity::constant(1.0), {8, 8, 8, 1.0});
  EXPECT_TRUE(rep.all_pass());
  for (const auto &a : rep.axioms) EXPECT_EQ(a.worst, 0.0) << a.name;
  EXPECT_TRUE(rep.at("f1").structural);
}

TEST(Axioms, CounterexampleBoundsAndSymmetry) {
  const auto rep = validate_axioms(SurfaceDensity::counterexample(10.0), {64, 16, 16, 1.0});
  EXPECT_TRUE(rep.at("f5").pass);
  EXPECT_TRUE(rep.at("f6").pass);
  EXPECT_TRUE(rep.at("f7").pass);
  EXPECT_TRUE(rep.at("f3").pass);
  EXPECT_TRUE(rep.at("f4").pass);
  // The jump dependence varies by more than a factor 3 inside the band, which
  // no modulus bounded by 1/2 can absorb.
  EXPECT_FALSE(rep.at("f2").pass);
  EXPECT_EQ(rep.at("f7").checked, 64u * 64u * 16u * 16u);
}

TEST(Axioms, BrokenSymmetryIsCaught) {
  DensityParams p;
  p.c1 = 1.0;
  p.c2 = 2.0;
  const auto f = SurfaceDensity::custom(
      [](Vec2, Vec2 z, Vec2 n) { return (z.x > 0.0 && n.y > 0.99) ? 2.0 : 1.0; }, p);
  const auto rep = validate_axioms(f, {2, 4, 4, 1.0});
  EXPECT_FALSE(rep.at("f7").pass);
  EXPECT_GT(rep.at("f7").worst, 0.5);
}

TEST(Axioms, RejectsEmptyPlan) {
  EXPECT_THROW(validate_axioms(SurfaceDensity::constant(1.0), {0, 1, 1, 1.0}), InvalidArgument);
}
