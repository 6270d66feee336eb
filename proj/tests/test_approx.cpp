#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rigidhom/approx.hpp"
#include "rigidhom/homog.hpp"

using namespace rigidhom;

namespace {

double angle_of(const Mat2 &R) { return std::atan2(R.a21, R.a11); }

// Rotation distance by an angle scan, independent of the closed form.
double scan_dist(const Mat2 &M) {
  double best = 1e300;
  for (int k = 0; k < 200000; ++k) {
    const Mat2 D = M - Mat2::rotation(2 * std::numbers::pi * k / 200000);
    best = std::min(best, frob(D));
  }
  return best;
}

LabelField two_rotations(double h) {
  const int n = static_cast<int>(std::lround(1.0 / h));
  Grid g({0, 0}, h, n, n);
  std::vector<int> a(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) a[c] = g.center(c).x > 0.5 ? 1 : 0;
  return LabelField(g, {RigidLabel{Mat2::rotation(0.3), {0.1, 0}}, RigidLabel{Mat2::rotation(-0.2), {0.5, 0.2}}}, a);
}

} // namespace

TEST(Project, Examples) {
  EXPECT_EQ(project_so2(Mat2::identity()), Mat2::identity());
  const Mat2 R = project_so2(2.0 * Mat2::rotation(0.7));
  EXPECT_NEAR(angle_of(R), 0.7, 1e-14);
  const Mat2 M = Mat2::identity() + Mat2::skew(0.1);
  // skew(m) = [[0, m], [-m, 0]] turns clockwise for m > 0
  EXPECT_NEAR(angle_of(project_so2(M)), -std::atan2(0.1 * 2, 2), 1e-14);
  EXPECT_NEAR(frob(M - project_so2(M)), scan_dist(M), 1e-6);
  EXPECT_THROW(project_so2(Mat2{}), AmbiguousProjection);
  EXPECT_THROW(project_so2(Mat2{1, 0, 0, -1}), AmbiguousProjection);
}

TEST(Approximate, PiecewiseRigidIsReproduced) {
  const auto u = two_rotations(1.0 / 32);
  const auto y = DeformField::from_labels(u);
  const auto [v, rep] = approximate(y, ApproxParams{0.05, 0.8, 0.6});
  EXPECT_LE(rep.linf_error, 1e-12);
  EXPECT_EQ(rep.extra_jump_length, 0.0);
  EXPECT_EQ(rep.pieces, 2u);
  EXPECT_EQ(rep.subdivided, 0u);
  for (std::size_t c = 0; c < u.grid.size(); ++c) EXPECT_TRUE(v.at(c).same_motion(u.at(c), 1e-12));
}

TEST(Approximate, NearRotationSinglePiece) {
  const double delta = 0.05;
  const Grid g({0, 0}, 1.0 / 32, 32, 32);
  const Mat2 A = Mat2::identity() + delta * Mat2::skew(1.0);
  const auto y = DeformField::sample(g, {}, [&](std::size_t, Vec2 x) { return A * x; });
  const auto [v, rep] = approximate(y, ApproxParams{delta, 0.8, 0.6});
  EXPECT_EQ(rep.pieces, 1u);
  EXPECT_EQ(rep.cuboids, 1u);
  EXPECT_EQ(rep.extra_jump_length, 0.0);
  // |A - R| |x - x_l| over the unit square
  const double d = frob(A - project_so2(A));
  EXPECT_NEAR(rep.rotation_distance[0], d, 1e-14);
  EXPECT_LE(rep.linf_error, d * std::sqrt(2.0) + 1e-12);
  EXPECT_LE(rep.linf_error, rep.rate_linf);
}

TEST(Approximate, LargeStrainPieceIsSubdivided) {
  const double delta = 0.05, beta = 0.8, gamma = 0.6;
  const double rate = std::pow(delta, 2 * gamma - beta);
  const Grid g({0, 0}, 1.0 / 64, 64, 64);
  // |M - R| = 4 delta^(2 gamma - beta) with R = I
  const Mat2 A = Mat2::identity() + 4 * rate * Mat2{std::sqrt(0.5), 0, 0, -std::sqrt(0.5)};
  const auto y = DeformField::sample(g, {}, [&](std::size_t, Vec2 x) { return A * x; });
  ApproxParams p{delta, beta, gamma};
  p.C0 = 10.0;
  const auto [v, rep] = approximate(y, p);
  EXPECT_EQ(rep.pieces, 1u);
  EXPECT_EQ(rep.subdivided, 1u);
  EXPECT_GT(rep.cuboids, 1u);
  EXPECT_NEAR(rep.rotation_distance[0], 4 * rate, 1e-12);
  EXPECT_GT(rep.extra_jump_length, 0.0);
  EXPECT_LE(rep.cuboid_error, rate);
  EXPECT_LE(rep.linf_error, rate);
}

TEST(Approximate, SyntheticFamilyScales) {
  std::vector<double> lin, jmp;
  for (double delta : {0.1, 0.05, 0.025}) {
    SyntheticSpec s;
    s.delta = delta;
    const auto [v, rep] = approximate(synthetic_deformation(s), ApproxParams{delta, 0.8, 0.6});
    EXPECT_EQ(rep.subdivided, 1u);
    lin.push_back(rep.linf_error);
    jmp.push_back(rep.extra_jump_length);
  }
  EXPECT_GT(lin[0], lin[1]);
  EXPECT_GT(lin[1], lin[2]);
  EXPECT_GT(jmp[0], jmp[2]);
}

TEST(Approximate, EmptyRegionRejected) {
  Grid g({0, 0}, 1.0, 2, 2);
  g.mask = {0, 0, 0, 0};
  DeformField y;
  y.grid = g;
  y.corners.assign(16, Vec2{});
  EXPECT_THROW(approximate(y, ApproxParams{}), InvalidArgument);
}

TEST(Linearize, IdentityAndSmallRotation) {
  const Grid g({0, 0}, 1.0, 2, 1);
  const double delta = 0.01, alpha = 0.5;
  const double theta = std::pow(delta, 0.75 * alpha);
  const LabelField u(g, {RigidLabel{Mat2::identity(), {0.001, 0}}, RigidLabel{Mat2::rotation(theta), {}}}, {0, 1});
  const auto lf = linearize_labels(u, delta, alpha);
  EXPECT_EQ(lf.skew[0], Mat2{});
  EXPECT_NEAR(lf.skew[1].a12, -std::sin(theta) / theta, 1e-14);
  EXPECT_NEAR(lf.skew[1].a12, -1.0, 0.01);
  EXPECT_LE(lf.residual[1], theta * theta);
  EXPECT_NEAR(lf.field.labels[0].b.x, 0.001 / std::pow(delta, alpha), 1e-12);
  // un-linearization reproduces the rotation up to the residual
  const Mat2 back = Mat2::identity() + theta * lf.skew[1];
  EXPECT_LE(frob(back - Mat2::rotation(theta)), 2 * std::pow(delta, 1.5 * alpha));
}

TEST(Linearize, FarRotationOutOfRegime) {
  const Grid g({0, 0}, 1.0, 1, 1);
  const LabelField u(g, {RigidLabel{Mat2::rotation(std::numbers::pi / 4), {}}}, {0});
  EXPECT_THROW(linearize_labels(u, 0.01, 0.5), OutOfRegime);
  const LabelField w(g, {RigidLabel{Mat2::skew(0.1), {}}}, {0});
  EXPECT_THROW(linearize_labels(w, 0.01, 0.5), InvalidArgument);
}

namespace {

LabelField unit_interface(double h, const Mat2 &S, double line = 0.5) {
  const int n = static_cast<int>(std::lround(1.0 / h));
  Grid g({0, 0}, h, n, n);
  std::vector<int> a(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) a[c] = g.center(c).y > line ? 1 : 0;
  return LabelField(g, {RigidLabel{S, {}}, RigidLabel{S, e1}}, a);
}

} // namespace

TEST(Recovery, UnitDensityGivesDatum) {
  const auto u = unit_interface(1.0 / 16, Mat2{});
  RecoveryParams rp;
  rp.epsilon = 1.0 / 16;
  const auto f = SurfaceDensity::constant(1.0);
  const auto [v, rep] = build_recovery(u, f, rp, [](Vec2, Vec2) { return 1.0; });
  EXPECT_NEAR(rep.energy, 1.0, 1e-12);
  EXPECT_NEAR(rep.ratio, 1.0, 1e-12);
  EXPECT_TRUE(rep.frozen_ok);
  ASSERT_EQ(rep.interfaces.size(), 1u);
  EXPECT_EQ(rep.interfaces[0].coarse_points, 2);
}

TEST(Recovery, LayeredMovesToWeakRows) {
  // the interface sits in a strong band at eps = 1/16; fine cubes pull it onto weak rows
  const auto u = unit_interface(1.0 / 64, Mat2::skew(0.3), 0.5 + 3.0 / 64);
  const auto f = SurfaceDensity::layered(0.5, 1.0);
  RecoveryParams rp;
  rp.epsilon = 1.0 / 16;
  const auto [v, rep] = build_recovery(u, f, rp, [](Vec2, Vec2) { return 0.5; });
  EXPECT_LT(rep.energy, surface_energy(u, f, rp.epsilon) - 1e-9);
  EXPECT_TRUE(rep.frozen_ok);
  EXPECT_NEAR(rep.max_gradient, frob(Mat2::skew(0.3)), 1e-12);
}

TEST(Recovery, RejectsRandomEnvironment) {
  const auto u = unit_interface(1.0 / 16, Mat2{});
  EXPECT_THROW(build_recovery(u, SurfaceDensity::checkerboard({1, 0}, {1.0, 2.0}), RecoveryParams{},
                              [](Vec2, Vec2) { return 1.0; }),
               Unsupported);
}
