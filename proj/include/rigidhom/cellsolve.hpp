#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "energy.hpp"
#include "env.hpp"
#include "fields.hpp"
#include "maxflow.hpp"
#include "rng.hpp"

namespace rigidhom {

/// Cell problem on an oriented box with the two-valued jump datum through x.
struct CellProblem {
  Vec2 center{};
  double size = 8.0;   // side along R_nu e1
  double height = 0.0; // side along nu, 0 for a cube
  Vec2 nu = e2;
  Vec2 x{};            // datum base point
  Vec2 zeta = e1;
  LinearClass cls = LinearClass::Zero;
  double epsilon = 1.0;
  double h = 0.25;
  std::optional<double> k; // truncation level
  SurfaceDensity density;
  int band = 1;

  double side_along_nu() const { return height > 0.0 ? height : size; }
  bool oblique() const { return !(nu.x == 0.0 || nu.y == 0.0); }

  void validate() const {
    if (!(size > 0.0) || !(h > 0.0) || !(epsilon > 0.0)) throw InvalidArgument("cell problem sizes must be positive");
    if (band < 1) throw InvalidArgument("boundary band must be at least one cell");
    if (!is_unit(nu, 1e-9)) throw InvalidArgument("normal is not a unit vector");
    if (norm(zeta) == 0.0) throw InvalidArgument("zero jump datum");
  }

  Grid grid() const {
    validate();
    return rasterize_box(center, size, side_along_nu(), nu, h);
  }

  RigidLabel lower_label() const {
    return {cls == LinearClass::SO2 ? Mat2::identity() : Mat2{}, Vec2{}};
  }
  RigidLabel upper_label() const {
    return {cls == LinearClass::SO2 ? Mat2::identity() : Mat2{}, zeta};
  }
};

/// Cells within `band` (Chebyshev) of the region boundary.
inline std::vector<std::uint8_t> frozen_band(const Grid &g, int band) {
  const auto d = boundary_distance(g);
  std::vector<std::uint8_t> out(g.size(), 0);
  for (std::size_t c = 0; c < g.size(); ++c) out[c] = g.inside(c) && d[c] >= 1 && d[c] <= band;
  return out;
}

/// Datum u_{x,zeta,nu}: zeta where <y - x, nu> >= 0, 0 below.
inline LabelField boundary_field(const CellProblem &p) {
  const Grid g = p.grid();
  std::vector<int> a(g.size(), -1);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.inside(c)) a[c] = dot(g.center(c) - p.x, p.nu) >= 0.0 ? 1 : 0;
  return LabelField(g, {p.lower_label(), p.upper_label()}, std::move(a));
}

struct CellResult {
  double energy = 0.0;
  LabelField field;
  std::string solver;
  std::optional<double> certificate;
  std::optional<double> gap;
  bool discretization_bias = false; // oblique normal on an axis-aligned grid
};

// ---- exact two-label solver -----------------------------------------------

struct TwoLabelCut {
  std::vector<int> assign; // 0/1 inside the mask, -1 outside
  double flow = 0.0;
};

/// Minimum over fields taking values l0/l1 with `fixed` cells (0 or 1) held.
/// Free cells carry -1 in `fixed`. Ties resolve to the smallest l1 region.
inline TwoLabelCut min_cut_two_labels(const Grid &g, const RigidLabel &l0, const RigidLabel &l1,
                                      const std::vector<std::int8_t> &fixed, const SurfaceDensity &f,
                                      double epsilon) {
  if (fixed.size() != g.size()) throw InvalidArgument("fixed mask size mismatch");
  if (!g.is_connected()) throw InvalidArgument("region mask is not connected");
  std::vector<int> node(g.size(), -1);
  int n = 0;
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.inside(c)) node[c] = n++;
  const int s = n, t = n + 1;
  MaxFlow mf(n + 2);
  // Source side carries l1. Arc m->p is cut when m = l1 and p = l0.
  for_each_face(g, [&](std::size_t m, std::size_t p, int axis, Vec2 mid) {
    const double cmp = face_cost(f, l1, l0, mid, axis, epsilon, g.h);
    const double cpm = face_cost(f, l0, l1, mid, axis, epsilon, g.h);
    if (cmp > 0.0 || cpm > 0.0) mf.add_edge(node[m], node[p], cmp, cpm);
  });
  const double inf = mf.infinite_capacity();
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (node[c] < 0) continue;
    if (fixed[c] == 1) mf.add_edge(s, node[c], inf);
    else if (fixed[c] == 0) mf.add_edge(node[c], t, inf);
  }
  TwoLabelCut out;
  out.flow = mf.solve(s, t);
  const auto side = mf.source_side();
  out.assign.assign(g.size(), -1);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (node[c] >= 0) out.assign[c] = side[static_cast<std::size_t>(node[c])] ? 1 : 0;
  return out;
}

inline CellResult solve_mincut(const CellProblem &p) {
  if (p.cls == LinearClass::Skew) throw InvalidArgument("min-cut solves the zero or rotation class only");
  const LabelField bc = boundary_field(p);
  const Grid &g = bc.grid;
  const auto fz = frozen_band(g, p.band);
  std::vector<std::int8_t> fixed(g.size(), -1);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (fz[c]) fixed[c] = static_cast<std::int8_t>(bc.assign[c]);
  const auto cut = min_cut_two_labels(g, bc.labels[0], bc.labels[1], fixed, p.density, p.epsilon);
  CellResult r;
  r.field = LabelField(g, bc.labels, cut.assign);
  r.energy = surface_energy(r.field, p.density, p.epsilon);
  r.solver = "mincut";
  r.certificate = cut.flow;
  r.gap = 0.0;
  r.discretization_bias = p.oblique();
  if (std::abs(r.energy - cut.flow) > 1e-9 * (1.0 + r.energy))
    throw InvariantBreach("cut value and field energy disagree");
  return r;
}

// ---- multi-label local search ---------------------------------------------

struct LocalSchedule {
  int sweeps = 30;            // annealing sweeps over the active cells
  double t0 = 0.5;            // start temperature, relative to the mean jump-face cost
  double t1 = 1e-3;           // final temperature, same units
  double neighbor_bias = 0.8; // probability of proposing a neighbour's label
  int component_rounds = 3;   // whole-component relabel / refit rounds
  int max_icm_passes = 500;
  bool warm_start_cut = true; // start from the exact two-label minimizer
  bool reference_cut = true;  // report the two-label optimum as certificate
  std::size_t max_dict = 4096;
};

using LabelFilter = std::function<bool(const RigidLabel &)>;

/// True when |M| <= k and |M x + b| <= k on the bounding box of g.
inline bool within_truncation(const RigidLabel &l, const Grid &g, double k) {
  if (frob(l.M) > k) return false;
  const Vec2 lo = g.origin, hi = g.origin + g.h * Vec2{double(g.nx), double(g.ny)};
  for (Vec2 x : {lo, hi, Vec2{lo.x, hi.y}, Vec2{hi.x, lo.y}})
    if (norm(l(x)) > k) return false;
  return true;
}

namespace detail {

/// Least-squares motion of class `cls` through (point, value) samples.
inline RigidLabel fit_motion(LinearClass cls, const std::vector<Vec2> &xs, const std::vector<Vec2> &ts) {
  const std::size_t n = xs.size();
  Vec2 px{}, pt{};
  for (std::size_t i = 0; i < n; ++i) { px += xs[i]; pt += ts[i]; }
  px = px / double(n);
  pt = pt / double(n);
  if (cls == LinearClass::Zero) return RigidLabel::constant(pt);
  if (cls == LinearClass::SO2) {
    double sc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = xs[i] - px, b = ts[i] - pt;
      sc += dot(a, b);
      ss += a.x * b.y - a.y * b.x;
    }
    const Mat2 R = (sc == 0.0 && ss == 0.0) ? Mat2::identity() : Mat2::rotation(std::atan2(ss, sc));
    return {R, pt - R * px};
  }
  // Skew: u = (m x2 + b1, -m x1 + b2); with centred coordinates m decouples.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = xs[i] - px, b = ts[i] - pt;
    num += a.y * b.x - a.x * b.y;
    den += a.x * a.x + a.y * a.y;
  }
  const double m = den > 0.0 ? num / den : 0.0;
  const Mat2 M = Mat2::skew(m);
  return {M, pt - M * px};
}

class LocalSearch {
public:
  LocalSearch(const Grid &g, std::vector<std::uint8_t> frozen, std::vector<RigidLabel> dict, std::vector<int> assign,
              const SurfaceDensity &f, double eps, LinearClass cls, LabelFilter admissible, std::size_t max_dict)
      : g_(g), frozen_(std::move(frozen)), dict_(std::move(dict)), a_(std::move(assign)), f_(f), eps_(eps), cls_(cls),
        admissible_(std::move(admissible)), max_dict_(max_dict) {}

  const std::vector<int> &assign() const { return a_; }
  const std::vector<RigidLabel> &dict() const { return dict_; }

  /// Energy of the faces around cell c if it carried label l.
  double local_cost(std::size_t c, int l) const {
    const int i = g_.col(c), j = g_.row(c);
    const RigidLabel &L = dict_[static_cast<std::size_t>(l)];
    double s = 0.0;
    if (g_.inside(i + 1, j)) s += cost(L, a_[g_.index(i + 1, j)], g_.origin + g_.h * Vec2{i + 1.0, j + 0.5}, 0, false);
    if (g_.inside(i - 1, j)) s += cost(L, a_[g_.index(i - 1, j)], g_.origin + g_.h * Vec2{double(i), j + 0.5}, 0, true);
    if (g_.inside(i, j + 1)) s += cost(L, a_[g_.index(i, j + 1)], g_.origin + g_.h * Vec2{i + 0.5, j + 1.0}, 1, false);
    if (g_.inside(i, j - 1)) s += cost(L, a_[g_.index(i, j - 1)], g_.origin + g_.h * Vec2{i + 0.5, double(j)}, 1, true);
    return s;
  }

  bool active(std::size_t c) const {
    if (!g_.inside(c) || frozen_[c]) return false;
    const int i = g_.col(c), j = g_.row(c), l = a_[c];
    return (g_.inside(i + 1, j) && a_[g_.index(i + 1, j)] != l) || (g_.inside(i - 1, j) && a_[g_.index(i - 1, j)] != l) ||
           (g_.inside(i, j + 1) && a_[g_.index(i, j + 1)] != l) || (g_.inside(i, j - 1) && a_[g_.index(i, j - 1)] != l);
  }

  std::vector<std::size_t> active_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < g_.size(); ++c)
      if (active(c)) out.push_back(c);
    return out;
  }

  double total_energy() const {
    LabelField u(g_, dict_, a_);
    return surface_energy(u, f_, eps_);
  }

  void anneal(const LocalSchedule &s, std::mt19937_64 &rng) {
    if (s.sweeps <= 0) return;
    double e = total_energy();
    const std::size_t nj = jump_face_count();
    const double base = nj > 0 ? e / double(nj) : f_.params().c1 * g_.h;
    double best = e;
    std::vector<int> best_a = a_;
    for (int sweep = 0; sweep < s.sweeps; ++sweep) {
      const double frac = s.sweeps > 1 ? double(sweep) / (s.sweeps - 1) : 1.0;
      const double T = base * s.t0 * std::pow(s.t1 / s.t0, frac);
      auto cells = active_cells();
      for (std::size_t k = cells.size(); k > 1; --k) std::swap(cells[k - 1], cells[uniform_index(rng, k)]);
      for (std::size_t c : cells) {
        if (!active(c)) continue;
        const int cur = a_[c];
        const int prop = propose(c, s.neighbor_bias, rng);
        if (prop == cur) continue;
        const double d = local_cost(c, prop) - local_cost(c, cur);
        if (d <= 0.0 || uniform01(rng) < std::exp(-d / T)) {
          a_[c] = prop;
          e += d;
        }
      }
      if (e < best) {
        best = e;
        best_a = a_;
      }
    }
    a_ = std::move(best_a);
  }

  /// Single-cell relabeling to the best dictionary label until no strict gain.
  void icm(int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
      bool changed = false;
      for (std::size_t c : active_cells()) {
        const int cur = a_[c];
        double best = local_cost(c, cur);
        int arg = cur;
        const double tol = 1e-14 * std::max(1.0, best);
        for (int l = 0; l < static_cast<int>(dict_.size()); ++l) {
          if (l == cur) continue;
          const double v = local_cost(c, l);
          if (v < best - tol) { best = v; arg = l; }
        }
        if (arg != cur) { a_[c] = arg; changed = true; }
      }
      if (!changed) return;
    }
  }

  /// Whole-component moves: adopt a neighbouring component's label or a motion
  /// fitted to the neighbouring values along the component boundary.
  bool component_moves() {
    LabelField u(g_, dict_, a_);
    int ncomp = 0;
    const auto comp = label_components(u, &ncomp);
    std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(ncomp));
    std::vector<std::uint8_t> touches_frozen(static_cast<std::size_t>(ncomp), 0);
    for (std::size_t c = 0; c < g_.size(); ++c) {
      if (comp[c] < 0) continue;
      cells[static_cast<std::size_t>(comp[c])].push_back(c);
      if (frozen_[c]) touches_frozen[static_cast<std::size_t>(comp[c])] = 1;
    }
    bool improved = false;
    for (int k = 0; k < ncomp; ++k) {
      const auto &cs = cells[static_cast<std::size_t>(k)];
      if (touches_frozen[static_cast<std::size_t>(k)] || cs.empty()) continue;
      const int cur = a_[cs.front()];
      std::vector<int> cand;
      std::vector<Vec2> xs, ts;
      boundary_samples(cs, cur, cand, xs, ts);
      if (xs.empty()) continue;
      const RigidLabel fit = fit_motion(cls_, xs, ts);
      if (admissible_(fit) && dict_.size() < max_dict_) {
        int idx = -1;
        for (std::size_t m = 0; m < dict_.size(); ++m)
          if (dict_[m].same_motion(fit)) { idx = static_cast<int>(m); break; }
        if (idx < 0) {
          dict_.push_back(fit);
          idx = static_cast<int>(dict_.size()) - 1;
        }
        cand.push_back(idx);
      }
      double best = 0.0;
      int arg = cur;
      for (int l : cand) {
        if (l == cur) continue;
        const double d = component_delta(cs, cur, l);
        if (d < best - 1e-14 * std::max(1.0, std::abs(best))) { best = d; arg = l; }
      }
      if (arg != cur) {
        for (std::size_t c : cs) a_[c] = arg;
        improved = true;
      }
    }
    return improved;
  }

private:
  double cost(const RigidLabel &L, int other, Vec2 mid, int axis, bool other_is_minus) const {
    const RigidLabel &O = dict_[static_cast<std::size_t>(other)];
    return other_is_minus ? face_cost(f_, O, L, mid, axis, eps_, g_.h) : face_cost(f_, L, O, mid, axis, eps_, g_.h);
  }

  std::size_t jump_face_count() const {
    std::size_t n = 0;
    for_each_face(g_, [&](std::size_t m, std::size_t p, int, Vec2 mid) {
      if (a_[m] != a_[p] && norm(dict_[a_[p]](mid) - dict_[a_[m]](mid)) > kJumpTol) ++n;
    });
    return n;
  }

  int propose(std::size_t c, double bias, std::mt19937_64 &rng) const {
    const int i = g_.col(c), j = g_.row(c), cur = a_[c];
    int nb[4];
    int k = 0;
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int q = 0; q < 4; ++q)
      if (g_.inside(i + di[q], j + dj[q])) {
        const int l = a_[g_.index(i + di[q], j + dj[q])];
        if (l != cur) nb[k++] = l;
      }
    if (k > 0 && uniform01(rng) < bias) return nb[uniform_index(rng, static_cast<std::size_t>(k))];
    return static_cast<int>(uniform_index(rng, dict_.size()));
  }

  void boundary_samples(const std::vector<std::size_t> &cs, int cur, std::vector<int> &cand, std::vector<Vec2> &xs,
                        std::vector<Vec2> &ts) const {
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (std::size_t c : cs) {
      const int i = g_.col(c), j = g_.row(c);
      for (int q = 0; q < 4; ++q) {
        if (!g_.inside(i + di[q], j + dj[q])) continue;
        const int l = a_[g_.index(i + di[q], j + dj[q])];
        if (l == cur) continue;
        const Vec2 mid = g_.center(c) + 0.5 * g_.h * Vec2{double(di[q]), double(dj[q])};
        xs.push_back(mid);
        ts.push_back(dict_[static_cast<std::size_t>(l)](mid));
        if (std::find(cand.begin(), cand.end(), l) == cand.end()) cand.push_back(l);
      }
    }
  }

  double component_delta(const std::vector<std::size_t> &cs, int from, int to) const {
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    double d = 0.0;
    for (std::size_t c : cs) {
      const int i = g_.col(c), j = g_.row(c);
      for (int q = 0; q < 4; ++q) {
        if (!g_.inside(i + di[q], j + dj[q])) continue;
        const int l = a_[g_.index(i + di[q], j + dj[q])];
        if (l == from) continue; // interior face of the component
        const Vec2 mid = g_.center(c) + 0.5 * g_.h * Vec2{double(di[q]), double(dj[q])};
        const int axis = di[q] != 0 ? 0 : 1;
        const bool other_minus = di[q] < 0 || dj[q] < 0;
        d += cost(dict_[static_cast<std::size_t>(to)], l, mid, axis, other_minus) -
             cost(dict_[static_cast<std::size_t>(from)], l, mid, axis, other_minus);
      }
    }
    return d;
  }

  const Grid &g_;
  std::vector<std::uint8_t> frozen_;
  std::vector<RigidLabel> dict_;
  std::vector<int> a_;
  const SurfaceDensity &f_;
  double eps_;
  LinearClass cls_;
  LabelFilter admissible_;
  std::size_t max_dict_;
};

inline int find_label(const std::vector<RigidLabel> &dict, const RigidLabel &l) {
  for (std::size_t m = 0; m < dict.size(); ++m)
    if (dict[m].same_motion(l)) return static_cast<int>(m);
  return -1;
}

} // namespace detail

/// Heuristic multi-label solve: annealing, then single-cell and whole-component
/// descent. `initial`, when given, must agree with the datum on the frozen band.
inline CellResult solve_local(const CellProblem &p, std::vector<RigidLabel> dict, const LocalSchedule &sched,
                              EnvSeed seed, const LabelField *initial = nullptr, LabelFilter extra = {}) {
  if (dict.empty()) throw InvalidArgument("empty label dictionary");
  const LabelField bc = boundary_field(p);
  const Grid &g = bc.grid;
  if (!g.is_connected()) throw InvalidArgument("region mask is not connected");
  for (const auto &l : dict)
    if (!l.belongs_to(p.cls)) throw InvalidArgument("dictionary label outside the competitor class");
  for (const auto &l : bc.labels)
    if (detail::find_label(dict, l) < 0) throw InvalidArgument("dictionary lacks a boundary label");
  LabelFilter admissible = [&](const RigidLabel &l) {
    if (!l.belongs_to(p.cls)) return false;
    if (p.k && !within_truncation(l, g, *p.k)) return false;
    return !extra || extra(l);
  };
  for (const auto &l : dict)
    if (!admissible(l)) throw InvalidArgument("dictionary label violates the truncation or constraint");

  const auto fz = frozen_band(g, p.band);
  std::optional<double> reference;
  std::vector<int> start(g.size(), -1);
  if (initial) {
    if (!initial->grid.same_layout(g)) throw InvalidArgument("initial field grid differs from the problem grid");
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (!g.inside(c)) continue;
      const RigidLabel &l = initial->at(c);
      if (fz[c] && !l.same_motion(bc.at(c))) throw InvalidArgument("initial field violates the boundary datum");
      int idx = detail::find_label(dict, l);
      if (idx < 0) {
        if (!admissible(l)) throw InvalidArgument("initial field label violates the constraint");
        dict.push_back(l);
        idx = static_cast<int>(dict.size()) - 1;
      }
      start[c] = idx;
    }
  }
  if (sched.reference_cut || (sched.warm_start_cut && !initial)) {
    std::vector<std::int8_t> fixed(g.size(), -1);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (fz[c]) fixed[c] = static_cast<std::int8_t>(bc.assign[c]);
    const auto cut = min_cut_two_labels(g, bc.labels[0], bc.labels[1], fixed, p.density, p.epsilon);
    if (sched.reference_cut) reference = cut.flow;
    if (sched.warm_start_cut && !initial) {
      const int i0 = detail::find_label(dict, bc.labels[0]), i1 = detail::find_label(dict, bc.labels[1]);
      for (std::size_t c = 0; c < g.size(); ++c)
        if (g.inside(c)) start[c] = cut.assign[c] == 1 ? i1 : i0;
    }
  }
  if (!initial && !sched.warm_start_cut) {
    const int i0 = detail::find_label(dict, bc.labels[0]), i1 = detail::find_label(dict, bc.labels[1]);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (g.inside(c)) start[c] = bc.assign[c] == 1 ? i1 : i0;
  }

  detail::LocalSearch ls(g, fz, std::move(dict), std::move(start), p.density, p.epsilon, p.cls, admissible,
                         sched.max_dict);
  auto rng = make_engine(seed);
  ls.anneal(sched, rng);
  ls.icm(sched.max_icm_passes);
  for (int r = 0; r < sched.component_rounds; ++r) {
    const bool moved = ls.component_moves();
    ls.icm(sched.max_icm_passes);
    if (!moved) break;
  }

  CellResult out;
  out.field = canonicalize(LabelField(g, ls.dict(), ls.assign()));
  out.energy = surface_energy(out.field, p.density, p.epsilon);
  out.solver = "local";
  out.discretization_bias = p.oblique();
  if (reference) {
    out.certificate = reference;
    out.gap = out.energy - *reference;
  }
  return out;
}

/// m^k for increasing truncation levels, each solve warm-started from the
/// previous one so the sequence is nonincreasing by construction.
inline std::vector<CellResult> solve_truncation_levels(CellProblem p, const std::vector<RigidLabel> &dict,
                                                       const std::vector<double> &levels, const LocalSchedule &sched,
                                                       EnvSeed seed) {
  std::vector<CellResult> out;
  std::optional<LabelField> prev;
  double last = -1.0;
  for (double k : levels) {
    if (!(k > last)) throw InvalidArgument("truncation levels must increase");
    last = k;
    p.k = k;
    const Grid g = p.grid();
    std::vector<RigidLabel> dk;
    for (const auto &l : dict)
      if (within_truncation(l, g, k)) dk.push_back(l);
    LocalSchedule s = sched;
    if (prev) s.warm_start_cut = false;
    out.push_back(solve_local(p, dk, s, seed, prev ? &*prev : nullptr));
    prev = out.back().field;
  }
  return out;
}

// ---- gluing ---------------------------------------------------------------

/// `inner` on `subregion`, `outer` elsewhere. Both must agree on the cells of
/// `subregion` within `band` cells of its boundary.
inline LabelField glue(const LabelField &inner, const LabelField &outer, const std::vector<std::uint8_t> &subregion,
                       int band = 1) {
  const Grid &g = outer.grid;
  if (!inner.grid.same_layout(g)) throw InvalidArgument("glue: grids differ");
  if (subregion.size() != g.size()) throw InvalidArgument("glue: subregion size mismatch");
  Grid sub = g;
  sub.mask.assign(g.size(), 0);
  for (std::size_t c = 0; c < g.size(); ++c) sub.mask[c] = subregion[c] && g.inside(c);
  const auto d = boundary_distance(sub);
  const int shift = static_cast<int>(outer.labels.size());
  std::vector<RigidLabel> labels = outer.labels;
  labels.insert(labels.end(), inner.labels.begin(), inner.labels.end());
  std::vector<int> a = outer.assign;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!sub.mask[c]) continue;
    if (d[c] <= band && !inner.at(c).same_motion(outer.at(c)))
      throw InvalidArgument("glue: fields differ on the boundary band");
    a[c] = inner.assign[c] + shift;
  }
  return canonicalize(LabelField(g, std::move(labels), std::move(a)));
}

// ---- truncation -----------------------------------------------------------

struct RestStats {
  double area = 0.0;
  double perimeter = 0.0;       // faces inside the region on the boundary of the rest set
  double budget_area = 0.0;     // theta (|J_u| + |boundary|)^2
  double budget_perimeter = 0.0;
  bool within_budget = true;
  std::size_t removed_pieces = 0;
  double sup_in = 0.0;
  double sup_out = 0.0;
  double sup_bound = 0.0;       // c_theta * lambda
  bool sup_ok = true;
};

namespace detail {
inline double piece_sup(const LabelField &u, const std::vector<std::size_t> &cells) {
  double s = 0.0;
  const Grid &g = u.grid;
  for (std::size_t c : cells) {
    const int i = g.col(c), j = g.row(c);
    const RigidLabel &l = u.at(c);
    for (Vec2 x : {g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)}) s = std::max(s, norm(l(x)));
  }
  return s;
}
} // namespace detail

/// Replaces every piece on which |u| exceeds lambda by one label of `bdata`
/// (its most frequent one on that connected part of the rest set).
inline std::pair<LabelField, RestStats> truncate_field(const LabelField &u, double lambda, double theta,
                                                       const LabelField &bdata, double c_theta = 2.0) {
  if (!(lambda >= 1.0)) throw InvalidArgument("lambda must be >= 1");
  if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
  if (!u.grid.same_layout(bdata.grid)) throw InvalidArgument("truncate: grids differ");
  const Grid &g = u.grid;
  int np = 0;
  const auto comp = label_components(u, &np);
  std::vector<std::vector<std::size_t>> pieces(static_cast<std::size_t>(np));
  for (std::size_t c = 0; c < g.size(); ++c)
    if (comp[c] >= 0) pieces[static_cast<std::size_t>(comp[c])].push_back(c);

  RestStats st;
  std::vector<std::uint8_t> rest(g.size(), 0);
  for (const auto &cells : pieces) {
    const double s = detail::piece_sup(u, cells);
    st.sup_in = std::max(st.sup_in, s);
    if (s > lambda) {
      ++st.removed_pieces;
      for (std::size_t c : cells) rest[c] = 1;
    }
  }

  // One bdata label per connected part of the rest set.
  std::vector<RigidLabel> labels = u.labels;
  const int shift = static_cast<int>(labels.size());
  labels.insert(labels.end(), bdata.labels.begin(), bdata.labels.end());
  std::vector<int> a = u.assign;
  std::vector<std::uint8_t> seen(g.size(), 0);
  for (std::size_t s0 = 0; s0 < g.size(); ++s0) {
    if (!rest[s0] || seen[s0]) continue;
    std::vector<std::size_t> part{s0}, stack{s0};
    seen[s0] = 1;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const int i = g.col(c), j = g.row(c);
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int q = 0; q < 4; ++q) {
        if (!g.inside(i + di[q], j + dj[q])) continue;
        const std::size_t n = g.index(i + di[q], j + dj[q]);
        if (rest[n] && !seen[n]) { seen[n] = 1; stack.push_back(n); part.push_back(n); }
      }
    }
    std::vector<std::size_t> freq(bdata.labels.size(), 0);
    for (std::size_t c : part) ++freq[static_cast<std::size_t>(bdata.assign[c])];
    const int pick = static_cast<int>(std::max_element(freq.begin(), freq.end()) - freq.begin());
    for (std::size_t c : part) a[c] = pick + shift;
  }

  std::size_t jumps = 0, rest_faces = 0, boundary_faces = 0;
  for_each_face(g, [&](std::size_t m, std::size_t p, int, Vec2 mid) {
    if (u.assign[m] != u.assign[p] && norm(u.at(p)(mid) - u.at(m)(mid)) > kJumpTol) ++jumps;
    if (rest[m] != rest[p]) ++rest_faces;
  });
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!g.inside(c)) continue;
    const int i = g.col(c), j = g.row(c);
    boundary_faces += !g.inside(i + 1, j) + !g.inside(i - 1, j) + !g.inside(i, j + 1) + !g.inside(i, j - 1);
    if (rest[c]) st.area += g.h * g.h;
  }
  st.perimeter = static_cast<double>(rest_faces) * g.h;
  const double jb = static_cast<double>(jumps + boundary_faces) * g.h;
  st.budget_area = theta * jb * jb;
  st.budget_perimeter = theta * jb;
  st.within_budget = st.area <= st.budget_area && st.perimeter <= st.budget_perimeter;

  LabelField out = canonicalize(LabelField(g, std::move(labels), std::move(a)));
  int nq = 0;
  const auto cq = label_components(out, &nq);
  std::vector<std::vector<std::size_t>> qs(static_cast<std::size_t>(nq));
  for (std::size_t c = 0; c < g.size(); ++c)
    if (cq[c] >= 0) qs[static_cast<std::size_t>(cq[c])].push_back(c);
  for (const auto &cells : qs) st.sup_out = std::max(st.sup_out, detail::piece_sup(out, cells));
  st.sup_bound = c_theta * lambda;
  st.sup_ok = st.sup_out <= st.sup_bound;
  return {std::move(out), st};
}

} // namespace rigidhom
