#pragma once

#include <cmath>
#include <functional>
#include <unordered_set>
#include <vector>

#include "core.hpp"
#include "env.hpp"
#include "fields.hpp"

namespace rigidhom {

/// Energy value with a tagged +infinity; never carries a floating-point inf.
struct EnergyValue {
  bool infinite = false;
  double value = 0.0;

  static EnergyValue inf() { return {true, 0.0}; }
  static EnergyValue finite(double v) { return {false, v}; }
  bool is_finite() const { return !infinite; }
};

/// Cost of the face between `minus` and `plus` labels, or 0 when the motions agree there.
inline double face_cost(const SurfaceDensity &f, const RigidLabel &minus, const RigidLabel &plus, Vec2 mid,
                        int axis, double epsilon, double h) {
  const Vec2 jump = plus(mid) - minus(mid);
  if (norm(jump) <= kJumpTol) return 0.0;
  return f.eval(mid / epsilon, jump, axis_normal(axis)) * h;
}

/// Surface energy on the faces whose two cells both lie in `region` (empty = whole mask).
inline double surface_energy(const LabelField &u, const SurfaceDensity &f, double epsilon,
                             const std::vector<std::uint8_t> &region = {}) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!region.empty() && region.size() != u.grid.size()) throw InvalidArgument("region size mismatch");
  std::vector<double> parts;
  for_each_face(u.grid, [&](std::size_t m, std::size_t p, int axis, Vec2 mid) {
    if (u.assign[m] == u.assign[p]) return;
    if (!region.empty() && (!region[m] || !region[p])) return;
    const double c = face_cost(f, u.at(m), u.at(p), mid, axis, epsilon, u.grid.h);
    if (c != 0.0) parts.push_back(c);
  });
  return pairwise_sum(parts);
}

// ---- deformation fields ---------------------------------------------------

struct ElasticParams {
  double delta = 0.1;
  double beta = 0.8;
  double alpha = 0.5;
  double epsilon = 1.0;

  void validate(bool linearized) const {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0,1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (linearized && !(alpha > 0.0 && alpha < beta)) throw InvalidArgument("need 0 < alpha < beta");
  }
};

/// Sampled deformation. Every cell owns its four corner values (ll, lr, ul, ur),
/// so values on the two sides of a declared crack are independent.
struct DeformField {
  Grid grid;
  std::vector<Vec2> corners; // 4 per cell
  std::unordered_set<std::uint64_t> cracks; // face_key(minus_cell, axis)

  enum Corner { LL = 0, LR = 1, UL = 2, UR = 3 };

  Vec2 corner(std::size_t c, int k) const { return corners[4 * c + static_cast<std::size_t>(k)]; }
  bool is_crack(std::size_t minus_cell, int axis) const { return cracks.count(face_key(minus_cell, axis)) != 0; }

  static DeformField sample(const Grid &g, std::unordered_set<std::uint64_t> cracks,
                            const std::function<Vec2(std::size_t, Vec2)> &y) {
    DeformField d;
    d.grid = g;
    d.cracks = std::move(cracks);
    d.corners.assign(4 * g.size(), Vec2{});
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j);
        if (!g.inside(c)) continue;
        d.corners[4 * c + LL] = y(c, g.node(i, j));
        d.corners[4 * c + LR] = y(c, g.node(i + 1, j));
        d.corners[4 * c + UL] = y(c, g.node(i, j + 1));
        d.corners[4 * c + UR] = y(c, g.node(i + 1, j + 1));
      }
    return d;
  }

  /// Embeds a label field; faces between different labels become cracks.
  static DeformField from_labels(const LabelField &u) {
    std::unordered_set<std::uint64_t> cracks;
    for_each_face(u.grid, [&](std::size_t m, std::size_t p, int axis, Vec2) {
      if (u.assign[m] != u.assign[p]) cracks.insert(face_key(m, axis));
    });
    return sample(u.grid, std::move(cracks), [&](std::size_t c, Vec2 x) { return u.at(c)(x); });
  }

  /// Bilinear cell-centre gradient from the cell's own corners (exact on affine maps).
  Mat2 gradient(std::size_t c) const {
    const Vec2 ll = corner(c, LL), lr = corner(c, LR), ul = corner(c, UL), ur = corner(c, UR);
    const Vec2 d1 = ((lr - ll) + (ur - ul)) / (2.0 * grid.h);
    const Vec2 d2 = ((ul - ll) + (ur - lr)) / (2.0 * grid.h);
    return {d1.x, d2.x, d1.y, d2.y};
  }

  Vec2 cell_center_value(std::size_t c) const {
    return 0.25 * (corner(c, LL) + corner(c, LR) + corner(c, UL) + corner(c, UR));
  }

  /// Value on the shared face, seen from cell c. side: 0 left, 1 right, 2 bottom, 3 top.
  Vec2 face_value(std::size_t c, int side) const {
    switch (side) {
    case 0: return 0.5 * (corner(c, LL) + corner(c, UL));
    case 1: return 0.5 * (corner(c, LR) + corner(c, UR));
    case 2: return 0.5 * (corner(c, LL) + corner(c, LR));
    default: return 0.5 * (corner(c, UL) + corner(c, UR));
    }
  }

  /// Throws InvariantBreach when two cells joined by a non-crack face disagree on
  /// their shared corners: difference stencils would then straddle a discontinuity.
  void check_declared_cracks(double tol = 1e-9) const {
    double scale = 1.0;
    for (const Vec2 &v : corners) scale = std::max(scale, norm_inf(v));
    for_each_face(grid, [&](std::size_t m, std::size_t p, int axis, Vec2) {
      if (is_crack(m, axis)) return;
      const double d = axis == 0
                           ? std::max(norm(corner(m, LR) - corner(p, LL)), norm(corner(m, UR) - corner(p, UL)))
                           : std::max(norm(corner(m, UL) - corner(p, LL)), norm(corner(m, UR) - corner(p, LR)));
      if (d > tol * scale) throw InvariantBreach("undeclared discontinuity across a non-crack face");
    });
  }
};

/// dist^2(F, SO(2)) through the nearest rotation.
inline double dist2_so2(const Mat2 &F) {
  const double p = F.a11 + F.a22, q = F.a21 - F.a12;
  const double r = std::hypot(p, q);
  if (r == 0.0) {
    const double n = frob(F);
    return n * n + 2.0;
  }
  const double c = p / r, s = q / r;
  const Mat2 D = F - Mat2{c, -s, s, c};
  const double n = frob(D);
  return n * n;
}

namespace detail {

/// |grad^2|^2 per cell from differences of neighbouring cell gradients that do
/// not cross a crack: central when both sides are available, one-sided otherwise.
inline std::vector<double> second_gradient_sq(const DeformField &y) {
  const Grid &g = y.grid;
  std::vector<Mat2> G(g.size());
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.inside(c)) G[c] = y.gradient(c);
  std::vector<double> out(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t c = g.index(i, j);
      if (!g.inside(c)) continue;
      double s = 0.0;
      for (int axis = 0; axis < 2; ++axis) {
        const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
        const bool hasp = g.inside(i + di, j + dj) && !y.is_crack(c, axis);
        bool hasm = false;
        std::size_t cm = 0;
        if (g.inside(i - di, j - dj)) {
          cm = g.index(i - di, j - dj);
          hasm = !y.is_crack(cm, axis);
        }
        Mat2 D{};
        if (hasp && hasm) D = (1.0 / (2.0 * g.h)) * (G[g.index(i + di, j + dj)] - G[cm]);
        else if (hasp) D = (1.0 / g.h) * (G[g.index(i + di, j + dj)] - G[c]);
        else if (hasm) D = (1.0 / g.h) * (G[c] - G[cm]);
        const double n = frob(D);
        s += n * n;
      }
      out[c] = s;
    }
  return out;
}

inline double crack_surface(const DeformField &y, const SurfaceDensity &f, double epsilon) {
  std::vector<double> parts;
  for_each_face(y.grid, [&](std::size_t m, std::size_t p, int axis, Vec2 mid) {
    if (!y.is_crack(m, axis)) return;
    const Vec2 jump = axis == 0 ? y.face_value(p, 0) - y.face_value(m, 1) : y.face_value(p, 2) - y.face_value(m, 3);
    if (norm(jump) <= kJumpTol) return;
    parts.push_back(f.eval(mid / epsilon, jump, axis_normal(axis)) * y.grid.h);
  });
  return pairwise_sum(parts);
}

} // namespace detail

struct GriffithTerms {
  double bulk = 0.0, second = 0.0, surface = 0.0;
  double total() const { return bulk + second + surface; }
};

inline GriffithTerms griffith_terms(const DeformField &y, const SurfaceDensity &f, const ElasticParams &p) {
  p.validate(false);
  y.check_declared_cracks();
  const Grid &g = y.grid;
  const double area = g.h * g.h;
  std::vector<double> w, s;
  const auto sg = detail::second_gradient_sq(y);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!g.inside(c)) continue;
    w.push_back(dist2_so2(y.gradient(c)) * area);
    s.push_back(sg[c] * area);
  }
  GriffithTerms t;
  t.bulk = pairwise_sum(w) / (p.delta * p.delta);
  t.second = pairwise_sum(s) * std::pow(p.delta, -2.0 * p.beta);
  t.surface = detail::crack_surface(y, f, p.epsilon);
  return t;
}

inline double griffith_energy(const DeformField &y, const SurfaceDensity &f, const ElasticParams &p) {
  return griffith_terms(y, f, p).total();
}

/// Linearized energy of a displacement u; +inf when some |grad u| exceeds delta^(-alpha/4).
inline EnergyValue linearized_energy(const DeformField &u, const SurfaceDensity &f, const ElasticParams &p) {
  p.validate(true);
  u.check_declared_cracks();
  const Grid &g = u.grid;
  const double cap = std::pow(p.delta, -p.alpha / 4.0);
  const double da = std::pow(p.delta, p.alpha);
  const double area = g.h * g.h;
  std::vector<double> w, s;
  const auto sg = detail::second_gradient_sq(u);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!g.inside(c)) continue;
    const Mat2 G = u.gradient(c);
    if (frob(G) > cap) return EnergyValue::inf();
    w.push_back(dist2_so2(Mat2::identity() + da * G) * area);
    s.push_back(sg[c] * area);
  }
  const double bulk = pairwise_sum(w) / (p.delta * p.delta);
  const double second = pairwise_sum(s) * std::pow(p.delta, 2.0 * (p.alpha - p.beta));
  return EnergyValue::finite(bulk + second + detail::crack_surface(u, f, p.epsilon));
}

} // namespace rigidhom
