#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "core.hpp"

namespace rigidhom {

// ---- grid -----------------------------------------------------------------

/// Pixel grid with an optional region mask. Cell (i, j) covers
/// origin + h * ([i, i+1) x [j, j+1)).
struct Grid {
  Vec2 origin{};
  double h = 1.0;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> mask; // empty means every cell is inside

  Grid() = default;
  Grid(Vec2 o, double h_, int nx_, int ny_) : origin(o), h(h_), nx(nx_), ny(ny_) {
    if (!(h > 0.0)) throw InvalidArgument("grid spacing must be positive");
    if (nx < 1 || ny < 1) throw InvalidArgument("grid must have at least one cell");
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  int col(std::size_t c) const { return static_cast<int>(c % nx); }
  int row(std::size_t c) const { return static_cast<int>(c / nx); }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  bool inside(std::size_t c) const { return mask.empty() || mask[c] != 0; }
  bool inside(int i, int j) const { return in_bounds(i, j) && inside(index(i, j)); }
  Vec2 center(int i, int j) const { return origin + h * Vec2{i + 0.5, j + 0.5}; }
  Vec2 center(std::size_t c) const { return center(col(c), row(c)); }
  /// Lower-left corner of cell (i, j), i.e. node (i, j).
  Vec2 node(int i, int j) const { return origin + h * Vec2{double(i), double(j)}; }

  std::size_t masked_count() const {
    if (mask.empty()) return size();
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
  }

  bool same_layout(const Grid &o) const {
    return origin == o.origin && h == o.h && nx == o.nx && ny == o.ny && mask == o.mask;
  }

  /// 4-connectivity of the masked region.
  bool is_connected() const {
    std::size_t start = size();
    for (std::size_t c = 0; c < size(); ++c)
      if (inside(c)) { start = c; break; }
    if (start == size()) return false;
    std::vector<std::uint8_t> seen(size(), 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      ++count;
      const int i = col(c), j = row(c);
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int a = i + di[k], b = j + dj[k];
        if (!inside(a, b)) continue;
        const std::size_t n = index(a, b);
        if (!seen[n]) { seen[n] = 1; stack.push_back(n); }
      }
    }
    return count == masked_count();
  }
};

/// Distance (in cells, Chebyshev neighbourhood) from the outside of the masked
/// region; 1 for masked cells touching the outside or the grid edge.
inline std::vector<int> boundary_distance(const Grid &g) {
  std::vector<int> d(g.size(), 0);
  std::vector<std::size_t> frontier;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t c = g.index(i, j);
      if (!g.inside(c)) continue;
      bool edge = false;
      for (int dj = -1; dj <= 1 && !edge; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (!g.inside(i + di, j + dj)) { edge = true; break; }
      if (edge) { d[c] = 1; frontier.push_back(c); }
    }
  int level = 1;
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t c : frontier) {
      const int i = g.col(c), j = g.row(c);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!g.inside(i + di, j + dj)) continue;
          const std::size_t n = g.index(i + di, j + dj);
          if (d[n] == 0) { d[n] = level + 1; next.push_back(n); }
        }
    }
    frontier.swap(next);
    ++level;
  }
  return d;
}

/// Cells of the box R_nu ([-w/2, w/2) x [-t/2, t/2)) + center whose centers lie inside.
/// `w` runs along R_nu e1, `t` along nu.
inline Grid rasterize_box(Vec2 center, double w, double t, Vec2 nu, double h) {
  if (!(w > 0.0) || !(t > 0.0) || !(h > 0.0)) throw InvalidArgument("box sides and h must be positive");
  if (!is_unit(nu, 1e-9)) throw InvalidArgument("normal is not a unit vector");
  const Mat2 R = rotation_to(nu);
  const Vec2 tangent = R * e1;
  const double ex = 0.5 * (w * std::abs(tangent.x) + t * std::abs(nu.x));
  const double ey = 0.5 * (w * std::abs(tangent.y) + t * std::abs(nu.y));
  const int nx = std::max(1, static_cast<int>(std::ceil(2.0 * ex / h - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(2.0 * ey / h - 1e-9)));
  Grid g(center - Vec2{0.5 * nx * h, 0.5 * ny * h}, h, nx, ny);
  g.mask.assign(g.size(), 0);
  bool all = true;
  const double tol = 1e-12 * std::max({1.0, w, t});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 d = g.center(i, j) - center;
      const bool in = std::abs(dot(d, tangent)) < 0.5 * w - tol && std::abs(dot(d, nu)) < 0.5 * t - tol;
      g.mask[g.index(i, j)] = in;
      all = all && in;
    }
  if (all) g.mask.clear();
  return g;
}

/// Oriented cube Q_rho^nu(center).
inline Grid rasterize_cube(Vec2 center, double rho, Vec2 nu, double h) {
  return rasterize_box(center, rho, rho, nu, h);
}

// ---- rigid labels ---------------------------------------------------------

enum class LinearClass { Zero, Skew, SO2 };

inline const char *to_string(LinearClass c) {
  switch (c) {
  case LinearClass::Zero: return "zero";
  case LinearClass::Skew: return "skew";
  case LinearClass::SO2: return "so2";
  }
  return "?";
}

/// Rigid motion x -> M x + b.
struct RigidLabel {
  Mat2 M{};
  Vec2 b{};

  static RigidLabel constant(Vec2 b) { return {Mat2{}, b}; }

  Vec2 operator()(Vec2 x) const { return M * x + b; }

  bool belongs_to(LinearClass cls) const {
    switch (cls) {
    case LinearClass::Zero: return M == Mat2{};
    case LinearClass::Skew: return M.a11 == 0.0 && M.a22 == 0.0 && M.a12 == -M.a21;
    case LinearClass::SO2: {
      const Mat2 E = M.transpose() * M - Mat2::identity();
      return max_abs(E) <= 1e-10 && std::abs(M.det() - 1.0) <= 1e-10;
    }
    }
    return false;
  }

  /// Same affine map up to `tol` in every coefficient.
  bool same_motion(const RigidLabel &o, double tol = 1e-12) const {
    return max_abs(M - o.M) <= tol && norm_inf(b - o.b) <= tol;
  }
};

inline Vec2 eval_rigid(const RigidLabel &l, Vec2 x) { return l(x); }

// ---- label fields ---------------------------------------------------------

/// Piecewise rigid function sampled on a grid: cell c carries labels[assign[c]].
struct LabelField {
  Grid grid;
  std::vector<RigidLabel> labels;
  std::vector<int> assign; // -1 outside the mask

  LabelField() = default;
  LabelField(Grid g, std::vector<RigidLabel> l, std::vector<int> a)
      : grid(std::move(g)), labels(std::move(l)), assign(std::move(a)) {
    validate();
  }

  /// Field with a single label on the whole region.
  static LabelField uniform(const Grid &g, const RigidLabel &l) {
    std::vector<int> a(g.size(), -1);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (g.inside(c)) a[c] = 0;
    return LabelField(g, {l}, std::move(a));
  }

  void validate() const {
    if (assign.size() != grid.size()) throw InvalidArgument("assignment size does not match grid");
    for (std::size_t c = 0; c < assign.size(); ++c) {
      if (grid.inside(c)) {
        if (assign[c] < 0 || assign[c] >= static_cast<int>(labels.size()))
          throw InvalidArgument("masked cell without a valid label");
      } else if (assign[c] != -1) {
        throw InvalidArgument("cell outside the mask carries a label");
      }
    }
  }

  const RigidLabel &at(std::size_t c) const { return labels[static_cast<std::size_t>(assign[c])]; }
  Vec2 value(std::size_t c, Vec2 x) const { return at(c)(x); }

  bool all_in(LinearClass cls) const {
    for (const auto &l : labels)
      if (!l.belongs_to(cls)) return false;
    return true;
  }
};

/// Merges labels with equal motions (within tol) and drops unused ones.
/// Surviving labels keep the order of their first use by label index.
inline LabelField canonicalize(const LabelField &u, double tol = 1e-12) {
  std::vector<std::uint8_t> used(u.labels.size(), 0);
  for (int a : u.assign)
    if (a >= 0) used[static_cast<std::size_t>(a)] = 1;
  std::vector<int> remap(u.labels.size(), -1);
  std::vector<RigidLabel> out;
  for (std::size_t k = 0; k < u.labels.size(); ++k) {
    if (!used[k]) continue;
    for (std::size_t m = 0; m < out.size(); ++m)
      if (out[m].same_motion(u.labels[k], tol)) { remap[k] = static_cast<int>(m); break; }
    if (remap[k] < 0) {
      remap[k] = static_cast<int>(out.size());
      out.push_back(u.labels[k]);
    }
  }
  std::vector<int> a(u.assign.size(), -1);
  for (std::size_t c = 0; c < a.size(); ++c)
    if (u.assign[c] >= 0) a[c] = remap[static_cast<std::size_t>(u.assign[c])];
  return LabelField(u.grid, std::move(out), std::move(a));
}

// ---- jump faces -----------------------------------------------------------

inline constexpr double kJumpTol = 1e-12;

struct JumpFace {
  Vec2 midpoint;
  int axis = 0;        // normal is +e1 (axis 0) or +e2 (axis 1), pointing to the plus side
  Vec2 normal;
  double length = 0.0;
  Vec2 jump;           // u(plus) - u(minus) at the midpoint
  int plus = -1, minus = -1;            // label indices
  std::size_t cell_plus = 0, cell_minus = 0;
};

/// Calls fn(minus_cell, plus_cell, axis, midpoint) for every interior face of the
/// masked region, x-faces first, in row-major order.
template <class Fn>
void for_each_face(const Grid &g, Fn &&fn) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i + 1, j);
      if (g.inside(a) && g.inside(b)) fn(a, b, 0, g.origin + g.h * Vec2{i + 1.0, j + 0.5});
    }
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i, j + 1);
      if (g.inside(a) && g.inside(b)) fn(a, b, 1, g.origin + g.h * Vec2{i + 0.5, j + 1.0});
    }
}

inline Vec2 axis_normal(int axis) { return axis == 0 ? e1 : e2; }

inline std::vector<JumpFace> jump_faces(const LabelField &u) {
  std::vector<JumpFace> out;
  for_each_face(u.grid, [&](std::size_t m, std::size_t p, int axis, Vec2 mid) {
    const int lm = u.assign[m], lp = u.assign[p];
    if (lm == lp) return;
    const Vec2 jump = u.labels[lp](mid) - u.labels[lm](mid);
    if (norm(jump) <= kJumpTol) return;
    out.push_back({mid, axis, axis_normal(axis), u.grid.h, jump, lp, lm, p, m});
  });
  return out;
}

inline double jump_length(const LabelField &u) {
  return static_cast<double>(jump_faces(u).size()) * u.grid.h;
}

/// Common refinement: both outputs share one assignment whose labels index
/// pairs (label of u1, label of u2).
inline std::pair<LabelField, LabelField> refine(const LabelField &u1, const LabelField &u2) {
  if (!u1.grid.same_layout(u2.grid)) throw InvalidArgument("refine: grids differ");
  std::map<std::pair<int, int>, int> pairs;
  std::vector<int> a(u1.assign.size(), -1);
  std::vector<RigidLabel> l1, l2;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (u1.assign[c] < 0) continue;
    const auto key = std::make_pair(u1.assign[c], u2.assign[c]);
    auto it = pairs.find(key);
    if (it == pairs.end()) {
      it = pairs.emplace(key, static_cast<int>(l1.size())).first;
      l1.push_back(u1.labels[static_cast<std::size_t>(key.first)]);
      l2.push_back(u2.labels[static_cast<std::size_t>(key.second)]);
    }
    a[c] = it->second;
  }
  return {LabelField(u1.grid, std::move(l1), a), LabelField(u2.grid, std::move(l2), a)};
}

/// Key of the face between `minus_cell` and its +e(axis) neighbour.
inline std::uint64_t face_key(std::size_t minus_cell, int axis) {
  return (static_cast<std::uint64_t>(minus_cell) << 1) | static_cast<std::uint64_t>(axis);
}

/// 4-connected components of equal labels.
inline std::vector<int> label_components(const LabelField &u, int *count = nullptr) {
  const Grid &g = u.grid;
  std::vector<int> comp(g.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (u.assign[s] < 0 || comp[s] >= 0) continue;
    comp[s] = next;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const int i = g.col(c), j = g.row(c);
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        if (!g.inside(i + di[k], j + dj[k])) continue;
        const std::size_t n = g.index(i + di[k], j + dj[k]);
        if (comp[n] < 0 && u.assign[n] == u.assign[c]) { comp[n] = next; stack.push_back(n); }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

} // namespace rigidhom
