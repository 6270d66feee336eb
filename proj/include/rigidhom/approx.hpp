#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "cellsolve.hpp"
#include "core.hpp"
#include "energy.hpp"
#include "fields.hpp"
#include "parallel.hpp"

namespace rigidhom {

// ---- projection -----------------------------------------------------------

/// Nearest rotation in the Frobenius norm.
inline Mat2 project_so2(const Mat2 &M) {
  const double p = M.a11 + M.a22, q = M.a21 - M.a12;
  const double r = std::hypot(p, q);
  if (r == 0.0) throw AmbiguousProjection("projection onto SO(2) is not unique");
  const double c = p / r, s = q / r;
  return {c, -s, s, c};
}

// ---- piecewise rigid approximation ----------------------------------------

struct ApproxParams {
  double delta = 0.1;
  double beta = 0.8;
  std::optional<double> gamma; // defaults to 3 beta / 4
  double C0 = 1.0;             // constant in the gradient clustering threshold C0 delta^gamma
  double c_star = 1.0;         // pieces with |M - R| > 2 c_star delta^(2 gamma - beta) are subdivided
  int jobs = 1;

  double gamma_value() const { return gamma ? *gamma : 0.75 * beta; }

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0,1)");
    const double g = gamma_value();
    if (!(g > 0.0 && g < beta)) throw InvalidArgument("need 0 < gamma < beta");
    if (!(C0 > 0.0) || !(c_star > 0.0)) throw InvalidArgument("constants must be positive");
  }
};

struct ApproxReport {
  double linf_error = 0.0;
  double extra_jump_length = 0.0;
  std::size_t pieces = 0;
  std::size_t subdivided = 0;
  std::size_t cuboids = 0;
  std::vector<double> rotation_distance; // |M_j - R_j| per piece
  double cuboid_error = 0.0;             // max |(M - R)(x - x_l)| on subdivided pieces
  double rate_linf = 0.0;                // delta^(2 gamma - beta)
  double rate_jump = 0.0;                // delta^(beta - gamma)
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t n = v.size(), m = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
  const double hi = v[m];
  if (n % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(m));
  return 0.5 * (lo + hi);
}

/// Crack test for the face between c and its neighbour in direction k (0 +x, 1 -x, 2 +y, 3 -y).
inline bool crack_between(const DeformField &y, std::size_t c, std::size_t n, int k) {
  switch (k) {
  case 0: return y.is_crack(c, 0);
  case 1: return y.is_crack(n, 0);
  case 2: return y.is_crack(c, 1);
  default: return y.is_crack(n, 1);
  }
}

/// Cut positions (node indices) for one axis of a piece spanning cells lo..hi:
/// one per interior tau grid line, moved to the line of least cross-section
/// within half a spacing. cross[k - lo] counts piece faces on node line k.
inline std::vector<int> choose_cuts(int lo, int hi, double tau_cells, const std::vector<std::size_t> &cross) {
  std::vector<int> cuts;
  if (hi - lo < 1) return cuts;
  if (tau_cells <= 1.0) {
    for (int k = lo + 1; k <= hi; ++k) cuts.push_back(k);
    return cuts;
  }
  for (int m = 1; lo + m * tau_cells < hi + 1; ++m) {
    const double c = lo + m * tau_cells;
    int best = -1;
    for (int k = std::max(lo + 1, static_cast<int>(std::ceil(c - 0.5 * tau_cells)));
         k <= hi && k <= c + 0.5 * tau_cells; ++k)
      if (best < 0 || cross[static_cast<std::size_t>(k - lo)] < cross[static_cast<std::size_t>(best - lo)]) best = k;
    if (best > 0 && (cuts.empty() || cuts.back() < best)) cuts.push_back(best);
  }
  return cuts;
}

} // namespace detail

/// Piecewise rigid approximation of a deformation: gradient clustering into
/// pieces, then rotation projection with cuboid refinement where needed.
inline std::pair<LabelField, ApproxReport> approximate(const DeformField &y, const ApproxParams &p) {
  p.validate();
  const Grid &g = y.grid;
  if (g.masked_count() == 0) throw InvalidArgument("empty region");
  if (y.corners.size() != 4 * g.size()) throw InvalidArgument("deformation sample size mismatch");
  y.check_declared_cracks();
  const double gam = p.gamma_value();
  const double thr = p.C0 * std::pow(p.delta, gam);

  std::vector<Mat2> G(g.size());
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.inside(c)) G[c] = y.gradient(c);

  // Step 1: region growing against the running mean gradient.
  std::vector<int> piece(g.size(), -1);
  std::vector<std::vector<std::size_t>> cells;
  std::vector<Mat2> mean;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!g.inside(s) || piece[s] >= 0) continue;
    const int id = static_cast<int>(cells.size());
    cells.emplace_back();
    Mat2 sum = G[s];
    std::size_t n = 1;
    piece[s] = id;
    std::deque<std::size_t> q{s};
    while (!q.empty()) {
      const std::size_t c = q.front();
      q.pop_front();
      cells.back().push_back(c);
      const int i = g.col(c), j = g.row(c);
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        if (!g.inside(i + di[k], j + dj[k])) continue;
        const std::size_t nb = g.index(i + di[k], j + dj[k]);
        if (piece[nb] >= 0 || detail::crack_between(y, c, nb, k)) continue;
        if (frob(G[nb] - (1.0 / double(n)) * sum) > thr) continue;
        piece[nb] = id;
        sum = sum + G[nb];
        ++n;
        q.push_back(nb);
      }
    }
    mean.push_back((1.0 / double(n)) * sum);
  }

  // Step 2, per piece.
  const double lim = 2.0 * p.c_star * std::pow(p.delta, 2.0 * gam - p.beta);
  const double tau_num = std::pow(p.delta, 4.0 * gam - 2.0 * p.beta);
  struct PieceOut {
    std::vector<RigidLabel> labels;
    std::vector<int> local; // label index per cell of the piece
    double dist = 0.0;
    bool split = false;
    double cuboid_error = 0.0;
  };
  std::vector<PieceOut> outs(cells.size());
  parallel_for(cells.size(), p.jobs, [&](std::size_t id) {
    const auto &cs = cells[id];
    const Mat2 M = mean[id];
    std::vector<double> b1, b2;
    for (std::size_t c : cs) {
      const Vec2 r = y.cell_center_value(c) - M * g.center(c);
      b1.push_back(r.x);
      b2.push_back(r.y);
    }
    const Vec2 b{detail::median(b1), detail::median(b2)};
    const Mat2 R = project_so2(M);
    PieceOut &o = outs[id];
    o.dist = frob(M - R);
    o.local.assign(cs.size(), 0);

    std::vector<int> cut_x, cut_y;
    int i0 = g.nx, i1 = -1, j0 = g.ny, j1 = -1;
    for (std::size_t c : cs) {
      i0 = std::min(i0, g.col(c)); i1 = std::max(i1, g.col(c));
      j0 = std::min(j0, g.row(c)); j1 = std::max(j1, g.row(c));
    }
    if (o.dist > lim) {
      o.split = true;
      const double tau = tau_num / (o.dist * o.dist);
      std::vector<std::size_t> cx(static_cast<std::size_t>(i1 - i0 + 2), 0), cy(static_cast<std::size_t>(j1 - j0 + 2), 0);
      for (std::size_t c : cs) {
        const int i = g.col(c), j = g.row(c);
        if (g.inside(i - 1, j) && piece[g.index(i - 1, j)] == static_cast<int>(id)) ++cx[static_cast<std::size_t>(i - i0)];
        if (g.inside(i, j - 1) && piece[g.index(i, j - 1)] == static_cast<int>(id)) ++cy[static_cast<std::size_t>(j - j0)];
      }
      cut_x = detail::choose_cuts(i0, i1, tau / g.h, cx);
      cut_y = detail::choose_cuts(j0, j1, tau / g.h, cy);
    }
    // cuboid index per cell
    std::map<std::pair<int, int>, std::vector<std::size_t>> boxes;
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const int bx = static_cast<int>(std::upper_bound(cut_x.begin(), cut_x.end(), g.col(cs[k])) - cut_x.begin());
      const int by = static_cast<int>(std::upper_bound(cut_y.begin(), cut_y.end(), g.row(cs[k])) - cut_y.begin());
      boxes[{bx, by}].push_back(k);
    }
    for (const auto &[key, ks] : boxes) {
      Vec2 cen{};
      for (std::size_t k : ks) cen += g.center(cs[k]);
      cen = cen / double(ks.size());
      std::size_t anchor = ks.front();
      double best = norm(g.center(cs[anchor]) - cen);
      for (std::size_t k : ks) {
        const double d = norm(g.center(cs[k]) - cen);
        if (d < best) { best = d; anchor = k; }
      }
      const Vec2 xl = g.center(cs[anchor]);
      const RigidLabel L{R, M * xl + b - R * xl};
      const int li = static_cast<int>(o.labels.size());
      o.labels.push_back(L);
      for (std::size_t k : ks) {
        o.local[k] = li;
        if (o.split) {
          const int i = g.col(cs[k]), j = g.row(cs[k]);
          for (Vec2 x : {g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)})
            o.cuboid_error = std::max(o.cuboid_error, norm((M * x + b) - L(x)));
        }
      }
    }
  });

  std::vector<RigidLabel> labels;
  std::vector<int> a(g.size(), -1);
  ApproxReport rep;
  rep.pieces = cells.size();
  for (std::size_t id = 0; id < cells.size(); ++id) {
    const int base = static_cast<int>(labels.size());
    labels.insert(labels.end(), outs[id].labels.begin(), outs[id].labels.end());
    for (std::size_t k = 0; k < cells[id].size(); ++k) a[cells[id][k]] = base + outs[id].local[k];
    rep.rotation_distance.push_back(outs[id].dist);
    rep.cuboids += outs[id].labels.size();
    rep.subdivided += outs[id].split;
    rep.cuboid_error = std::max(rep.cuboid_error, outs[id].cuboid_error);
  }
  LabelField u(g, std::move(labels), std::move(a));

  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!g.inside(c)) continue;
    const int i = g.col(c), j = g.row(c);
    const RigidLabel &L = u.at(c);
    rep.linf_error = std::max({rep.linf_error, norm(y.corner(c, DeformField::LL) - L(g.node(i, j))),
                               norm(y.corner(c, DeformField::LR) - L(g.node(i + 1, j))),
                               norm(y.corner(c, DeformField::UL) - L(g.node(i, j + 1))),
                               norm(y.corner(c, DeformField::UR) - L(g.node(i + 1, j + 1)))});
  }
  std::size_t extra = 0;
  for_each_face(g, [&](std::size_t m, std::size_t q, int axis, Vec2 mid) {
    if (y.is_crack(m, axis) || u.assign[m] == u.assign[q]) return;
    if (norm(u.at(q)(mid) - u.at(m)(mid)) > kJumpTol) ++extra;
  });
  rep.extra_jump_length = static_cast<double>(extra) * g.h;
  rep.rate_linf = std::pow(p.delta, 2.0 * gam - p.beta);
  rep.rate_jump = std::pow(p.delta, p.beta - gam);
  return {std::move(u), rep};
}

// ---- synthetic test deformations -----------------------------------------

struct SyntheticSpec {
  double delta = 0.1;
  double beta = 0.8;
  double gamma = 0.6;
  double h = 1.0 / 128;
  double strain = 4.0; // inclusion strain in units of delta^(2 gamma - beta)
};

/// Unit-square deformation: a mildly curved outer part, and a cracked square
/// inclusion of side delta^gamma under a symmetric strain.
inline DeformField synthetic_deformation(const SyntheticSpec &s) {
  if (!(s.delta > 0.0 && s.delta < 1.0) || !(s.h > 0.0)) throw InvalidArgument("bad synthetic parameters");
  const int n = static_cast<int>(std::lround(1.0 / s.h));
  const Grid g({0, 0}, 1.0 / n, n, n);
  const double side = std::pow(s.delta, s.gamma);
  const Vec2 xc{0.5, 0.5};
  std::vector<std::uint8_t> in(g.size(), 0);
  for (std::size_t c = 0; c < g.size(); ++c) in[c] = norm_inf(g.center(c) - xc) < 0.5 * side;
  std::unordered_set<std::uint64_t> cracks;
  for_each_face(g, [&](std::size_t m, std::size_t p, int axis, Vec2) {
    if (in[m] != in[p]) cracks.insert(face_key(m, axis));
  });
  const double k = s.strain * std::pow(s.delta, 2.0 * s.gamma - s.beta);
  const Mat2 A = Mat2::identity() + k * Mat2{std::sqrt(0.5), 0, 0, -std::sqrt(0.5)};
  const auto outer = [&](Vec2 x) { return x + s.delta * Vec2{0.25 * x.x * x.x, -0.25 * x.y * x.y}; };
  const Vec2 base = outer(xc) + Vec2{0.1 * s.delta, 0.0};
  return DeformField::sample(g, std::move(cracks), [&](std::size_t c, Vec2 x) {
    return in[c] ? base + A * (x - xc) : outer(x);
  });
}

// ---- linearization --------------------------------------------------------

struct LinearizedField {
  LabelField field;             // displacement labels delta^(-alpha/4) M_j x + delta^(-alpha) b_j
  std::vector<Mat2> skew;       // M_j
  std::vector<double> residual; // |R_j - I - delta^(3 alpha/4) M_j|
  double max_residual = 0.0;
};

/// Rotation labels near the identity to skew displacement labels.
inline LinearizedField linearize_labels(const LabelField &u, double delta, double alpha, double C = 2.0) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  const double s = std::pow(delta, 0.75 * alpha);
  const double lin = std::pow(delta, -0.25 * alpha), tr = std::pow(delta, -alpha);
  LinearizedField out;
  std::vector<RigidLabel> labels;
  for (const auto &l : u.labels) {
    if (!l.belongs_to(LinearClass::SO2)) throw InvalidArgument("label is not a rotation");
    const Mat2 D = l.M - Mat2::identity();
    if (frob(D) > C * s) throw OutOfRegime("rotation too far from the identity");
    const Mat2 M = skew_part((1.0 / s) * D);
    const double res = frob(D - s * M);
    out.skew.push_back(M);
    out.residual.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
    labels.push_back({lin * M, tr * l.b});
  }
  out.field = LabelField(u.grid, std::move(labels), u.assign);
  return out;
}

// ---- recovery sequences ---------------------------------------------------

using CellSolver = std::function<CellResult(const CellProblem &)>;
using FHomOracle = std::function<double(Vec2 zeta, Vec2 nu)>;

struct RecoveryParams {
  double epsilon = 1.0 / 16;
  double eta = 0.05;   // almost-minimality tolerance, reported
  double rho = 0.5;    // coarse spacing along each interface
  int t = 0;           // fine cube side in cell units; 0 means one fine cube per coarse segment
  double h_cell = 0.125;
  int band = 1;
  CellSolver cell_solver; // defaults to the exact min-cut
  int jobs = 1;
};

struct InterfaceReport {
  int axis = 0;
  double line = 0.0;            // coordinate of the interface line
  double from = 0.0, to = 0.0;  // extent along the tangent
  Vec2 zeta;
  double fhom = 0.0;
  int coarse_points = 0;
  int fine_cubes = 0;
  double cell_energy = 0.0;     // mean cell minimum per unit length
};

struct RecoveryReport {
  double energy = 0.0;
  double predicted = 0.0;       // sum fhom |Gamma_k|
  double ratio = 0.0;
  double max_gradient = 0.0;
  int t = 0;
  double h_fine = 0.0;
  double eta = 0.0;
  bool frozen_ok = true;
  std::vector<InterfaceReport> interfaces;
};

namespace detail {

struct Run {
  int axis;
  int line;      // node index of the interface line
  int k0, k1;    // cell index range along the tangent, inclusive
  int minus, plus;
};

/// Maximal straight runs of jump faces with a fixed label pair.
inline std::vector<Run> interface_runs(const LabelField &u) {
  const Grid &g = u.grid;
  std::map<std::tuple<int, int, int, int>, std::vector<int>> groups;
  for (const auto &f : jump_faces(u)) {
    const int i = g.col(f.cell_minus), j = g.row(f.cell_minus);
    if (f.axis == 0) groups[{0, i + 1, f.minus, f.plus}].push_back(j);
    else groups[{1, j + 1, f.minus, f.plus}].push_back(i);
  }
  std::vector<Run> runs;
  for (auto &[key, ks] : groups) {
    std::sort(ks.begin(), ks.end());
    std::size_t s = 0;
    for (std::size_t e = 1; e <= ks.size(); ++e) {
      if (e < ks.size() && ks[e] == ks[e - 1] + 1) continue;
      runs.push_back({std::get<0>(key), std::get<1>(key), ks[s], ks[e - 1], std::get<2>(key), std::get<3>(key)});
      s = e;
    }
  }
  return runs;
}

} // namespace detail

/// Recovery field: along every flat interface of u, fine cubes carrying
/// eps-rescaled copies of cell minimizers; u elsewhere.
inline std::pair<LabelField, RecoveryReport> build_recovery(const LabelField &u, const SurfaceDensity &f,
                                                            const RecoveryParams &rp, const FHomOracle &fhom) {
  if (!f.is_periodic()) throw Unsupported("recovery needs a periodic density");
  if (!(rp.epsilon > 0.0) || !(rp.rho > 0.0) || !(rp.h_cell > 0.0)) throw InvalidArgument("recovery sizes must be positive");
  if (!fhom) throw InvalidArgument("missing f_hom oracle");
  const Grid &gu = u.grid;
  const double hf = rp.epsilon * rp.h_cell;
  const double rr = gu.h / hf;
  const int r = static_cast<int>(std::lround(rr));
  if (r < 1 || std::abs(rr - r) > 1e-9) throw InvalidArgument("input grid spacing is not a multiple of eps * h_cell");

  Grid gf(gu.origin, hf, gu.nx * r, gu.ny * r);
  if (!gu.mask.empty()) {
    gf.mask.assign(gf.size(), 0);
    for (std::size_t c = 0; c < gf.size(); ++c) gf.mask[c] = gu.mask[gu.index(gf.col(c) / r, gf.row(c) / r)];
  }
  std::vector<int> a(gf.size(), -1);
  for (std::size_t c = 0; c < gf.size(); ++c)
    if (gf.inside(c)) a[c] = u.assign[gu.index(gf.col(c) / r, gf.row(c) / r)];
  std::vector<RigidLabel> labels = u.labels;

  // Coarse points and their cell problems.
  struct Coarse {
    std::size_t run;
    Vec2 x;        // physical base point on the interface
    double from, to;
    CellProblem prob;
    CellResult res;
  };
  const auto runs = detail::interface_runs(u);
  std::vector<Coarse> coarse;
  RecoveryReport rep;
  rep.h_fine = hf;
  rep.eta = rp.eta;
  int t_used = 0;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    const auto &R = runs[ri];
    const Vec2 nu = axis_normal(R.axis);
    const double line = R.axis == 0 ? gu.origin.x + R.line * gu.h : gu.origin.y + R.line * gu.h;
    const double from = (R.axis == 0 ? gu.origin.y : gu.origin.x) + R.k0 * gu.h;
    const double to = (R.axis == 0 ? gu.origin.y : gu.origin.x) + (R.k1 + 1) * gu.h;
    const double L = to - from;
    const int nseg = std::max(1, static_cast<int>(std::ceil(L / rp.rho - 1e-9)));
    const double seg = L / nseg;
    const double tc = rp.t > 0 ? rp.t : seg / rp.epsilon;
    const int t = static_cast<int>(std::lround(tc));
    if (t < 1 || std::abs(tc - t) > 1e-9) throw InvalidArgument("coarse segment is not a whole number of periods");
    const double per = seg / (t * rp.epsilon);
    if (std::abs(per - std::lround(per)) > 1e-9 || std::lround(per) < 1)
      throw InvalidArgument("fine cubes do not tile the coarse segment");
    t_used = std::max(t_used, t);
    InterfaceReport ir;
    ir.axis = R.axis;
    ir.line = line;
    ir.from = from;
    ir.to = to;
    ir.coarse_points = nseg;
    ir.fine_cubes = nseg * static_cast<int>(std::lround(per));
    for (int s = 0; s < nseg; ++s) {
      const double mid = from + (s + 0.5) * seg;
      const Vec2 x = R.axis == 0 ? Vec2{line, mid} : Vec2{mid, line};
      Coarse c{ri, x, from + s * seg, from + (s + 1) * seg, {}, {}};
      const Vec2 zeta = u.labels[R.plus](x) - u.labels[R.minus](x);
      CellProblem pb;
      pb.center = x / rp.epsilon;
      pb.x = pb.center;
      pb.size = t;
      pb.nu = nu;
      pb.zeta = zeta;
      pb.h = rp.h_cell;
      pb.band = rp.band;
      pb.density = f;
      c.prob = pb;
      coarse.push_back(std::move(c));
      if (s == 0) ir.zeta = zeta;
    }
    rep.interfaces.push_back(ir);
  }
  rep.t = t_used;

  parallel_for(coarse.size(), rp.jobs, [&](std::size_t k) {
    coarse[k].res = rp.cell_solver ? rp.cell_solver(coarse[k].prob) : solve_mincut(coarse[k].prob);
  });

  std::vector<std::uint8_t> taken(gf.size(), 0);
  for (const auto &c : coarse) {
    const auto &R = runs[c.run];
    const RigidLabel &um = u.labels[R.minus];
    const LabelField &w = c.res.field;
    const Grid &gw = w.grid;
    const double side = c.prob.size * rp.epsilon;
    const int per = static_cast<int>(std::lround((c.to - c.from) / side));
    auto &ir = rep.interfaces[c.run];
    ir.cell_energy += c.res.energy / c.prob.size / ir.coarse_points;
    std::map<int, int> remap; // w label -> output label
    const RigidLabel lo = c.prob.lower_label(), hi = c.prob.upper_label();
    for (int q = 0; q < per; ++q) {
      const double along = c.from + (q + 0.5) * side;
      const Vec2 yc = R.axis == 0 ? Vec2{c.x.x, along} : Vec2{along, c.x.y};
      const Vec2 shift = (c.x - yc) / rp.epsilon; // multiple of the period along the tangent
      const int ci0 = static_cast<int>(std::lround((yc.x - 0.5 * side - gf.origin.x) / hf));
      const int cj0 = static_cast<int>(std::lround((yc.y - 0.5 * side - gf.origin.y) / hf));
      const int n = static_cast<int>(std::lround(side / hf));
      for (int dj = 0; dj < n; ++dj)
        for (int di = 0; di < n; ++di) {
          const int i = ci0 + di, j = cj0 + dj;
          if (!gf.inside(i, j)) throw InvalidArgument("fine cube leaves the domain; reduce rho");
          const std::size_t cf = gf.index(i, j);
          if (taken[cf]) throw InvalidArgument("fine cubes of different interfaces overlap");
          taken[cf] = 1;
          if (a[cf] != R.minus && a[cf] != R.plus) throw InvalidArgument("fine cube meets another interface; reduce rho");
          const Vec2 xi = gf.center(i, j) / rp.epsilon + shift;
          const int wi = static_cast<int>(std::floor((xi.x - gw.origin.x) / gw.h));
          const int wj = static_cast<int>(std::floor((xi.y - gw.origin.y) / gw.h));
          if (!gw.inside(wi, wj)) throw InvariantBreach("fine cube and cell grid are misaligned");
          const std::size_t cw = gw.index(wi, wj);
          const int wl = w.assign[cw];
          const RigidLabel &L = w.labels[static_cast<std::size_t>(wl)];
          if (L.same_motion(lo)) { a[cf] = R.minus; continue; }
          if (L.same_motion(hi)) { a[cf] = R.plus; continue; }
          // other cell labels ride on u^- with the eps rescaling; keyed by cube too
          const int key = wl * per + q;
          auto it = remap.find(key);
          if (it == remap.end()) {
            const Vec2 off = c.x - yc;
            const RigidLabel V{um.M + (1.0 / rp.epsilon) * L.M, um.b + L.b + (1.0 / rp.epsilon) * (L.M * off)};
            labels.push_back(V);
            it = remap.emplace(key, static_cast<int>(labels.size()) - 1).first;
          }
          a[cf] = it->second;
        }
    }
  }

  LabelField out = canonicalize(LabelField(gf, std::move(labels), std::move(a)));
  for (std::size_t c = 0; c < gf.size(); ++c) {
    if (!gf.inside(c) || taken[c]) continue;
    if (!out.at(c).same_motion(u.at(gu.index(gf.col(c) / r, gf.row(c) / r)))) rep.frozen_ok = false;
  }
  rep.energy = surface_energy(out, f, rp.epsilon);
  for (auto &ir : rep.interfaces) {
    ir.fhom = fhom(ir.zeta, axis_normal(ir.axis));
    rep.predicted += ir.fhom * (ir.to - ir.from);
  }
  rep.ratio = rep.predicted > 0.0 ? rep.energy / rep.predicted : 0.0;
  for (const auto &l : out.labels) rep.max_gradient = std::max(rep.max_gradient, frob(l.M));
  return {std::move(out), rep};
}

} // namespace rigidhom
