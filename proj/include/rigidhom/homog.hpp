#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cellsolve.hpp"
#include "core.hpp"
#include "env.hpp"
#include "parallel.hpp"

namespace rigidhom {

/// Realization omega -> density.
using EnvFactory = std::function<SurfaceDensity(EnvSeed)>;

inline EnvFactory fixed_env(SurfaceDensity f) {
  return [f = std::move(f)](EnvSeed) { return f; };
}

struct SolverConfig {
  std::string kind = "mincut"; // "mincut" or "local"
  double h = 0.25;
  int band = 1;
  LinearClass cls = LinearClass::Zero;
  LocalSchedule schedule;
  int random_labels = 0;       // extra random dictionary labels for "local"
  double random_scale = 1.0;
  int jobs = 1;
};

/// Dictionary: the two datum labels plus `n` random motions of class `cls`.
inline std::vector<RigidLabel> random_dictionary(const CellProblem &p, int n, double scale, EnvSeed seed) {
  std::vector<RigidLabel> d{p.lower_label(), p.upper_label()};
  auto rng = make_engine(seed);
  for (int i = 0; i < n; ++i) {
    const Vec2 b = scale * Vec2{2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0};
    const double m = scale * (2.0 * uniform01(rng) - 1.0) / std::max(1.0, p.size);
    switch (p.cls) {
    case LinearClass::Zero: d.push_back(RigidLabel::constant(b)); break;
    case LinearClass::Skew: d.push_back({Mat2::skew(m), b}); break;
    case LinearClass::SO2: d.push_back({Mat2::rotation(m), b}); break;
    }
  }
  return d;
}

inline CellResult solve_cell(const CellProblem &p, const SolverConfig &s, EnvSeed seed) {
  if (s.kind == "mincut") return solve_mincut(p);
  if (s.kind == "local") return solve_local(p, random_dictionary(p, s.random_labels, s.random_scale, seed), s.schedule, seed);
  throw InvalidArgument("unknown solver kind: " + s.kind);
}

// ---- rational directions --------------------------------------------------

struct RationalDirection {
  int M = 1;    // nu = (p, q) / M
  int p = 0, q = 1;
};

namespace detail {
// Best approximation of v by a fraction with denominator <= cap.
inline std::pair<long, long> best_fraction(double v, long cap) {
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = v;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(x);
    const long ai = static_cast<long>(a);
    const long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > cap) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    const double frac = x - a;
    if (std::abs(v - double(h1) / double(k1)) <= 1e-12 || frac < 1e-15) break;
    x = 1.0 / frac;
  }
  return {h1, k1};
}
} // namespace detail

/// Integer scale M with M nu in Z^2, by continued fractions with denominators <= cap.
inline RationalDirection rationalize(Vec2 nu, int cap = 20) {
  if (!is_unit(nu, 1e-12)) throw InvalidArgument("normal is not a unit vector");
  const auto [p1, q1] = detail::best_fraction(std::abs(nu.x), cap);
  const auto [p2, q2] = detail::best_fraction(std::abs(nu.y), cap);
  if (q1 == 0 || q2 == 0 || std::abs(std::abs(nu.x) - double(p1) / q1) > 1e-12 ||
      std::abs(std::abs(nu.y) - double(p2) / q2) > 1e-12)
    throw UnsupportedDirection("normal is not rational within the denominator cap");
  const long M = std::lcm(q1, q2);
  if (M > cap) throw UnsupportedDirection("normal needs a scale above the cap");
  RationalDirection r;
  r.M = static_cast<int>(M);
  r.p = static_cast<int>((nu.x < 0 ? -1 : 1) * p1 * (M / q1));
  r.q = static_cast<int>((nu.y < 0 ? -1 : 1) * p2 * (M / q2));
  if (long(r.p) * r.p + long(r.q) * r.q != M * M) throw UnsupportedDirection("rationalized normal is not unit");
  return r;
}

// ---- subadditive process --------------------------------------------------

struct SubadditiveSample {
  EnvSeed omega;
  Vec2 zeta, nu;
  double a = 0.0, b = 0.0; // rectangle [a, b)
  int M = 1;
  double value = 0.0;
  std::string solver;
  std::optional<double> gap;
};

/// Cell problem on T_nu([a,b)): the rotated cube M R_nu([a,b) x [-c,c)), c = (b-a)/2,
/// with the datum through the origin.
inline CellProblem process_problem(Vec2 zeta, Vec2 nu, double a, double b, const SolverConfig &s,
                                   const SurfaceDensity &f) {
  if (!(b > a)) throw InvalidArgument("empty rectangle");
  const RationalDirection rd = rationalize(nu);
  const Vec2 tangent = rotation_to(nu) * e1;
  CellProblem p;
  p.center = (rd.M * 0.5 * (a + b)) * tangent;
  p.size = rd.M * (b - a);
  p.nu = nu;
  p.x = Vec2{};
  p.zeta = zeta;
  p.cls = s.cls;
  p.h = s.h;
  p.band = s.band;
  p.density = f;
  return p;
}

inline SubadditiveSample mu_sample(EnvSeed omega, Vec2 zeta, Vec2 nu, double a, double b, const SolverConfig &s,
                                   const EnvFactory &env) {
  const RationalDirection rd = rationalize(nu);
  const SurfaceDensity f = env(omega);
  const CellProblem p = process_problem(zeta, nu, a, b, s, f);
  const CellResult r = solve_cell(p, s, omega);
  SubadditiveSample out{omega, zeta, nu, a, b, rd.M, r.energy / rd.M, r.solver, r.gap};
  return out;
}

// ---- f_hom estimation -----------------------------------------------------

struct EstimateConfig {
  std::vector<double> t_schedule{8, 16, 32};
  int omega_count = 32;
  std::uint64_t seed = 0;   // omega_i = (seed + i, stream)
  std::uint32_t stream = 0;
  Vec2 x{};                 // base point; cubes centred at t x
  double r_factor = 1.0;    // r(t) = r_factor * t
};

struct LevelStats {
  double t = 0.0, r = 0.0;
  std::vector<double> values; // m / r(t), one per omega
  std::vector<std::uint64_t> seeds;
  double mean = 0.0, variance = 0.0, ci = 0.0;
};

struct FHomEstimate {
  Vec2 zeta, nu, x;
  std::vector<LevelStats> levels;
  double value = 0.0; // mean at the largest t
  double ci = 0.0;    // 1.96 standard errors at the largest t
  bool nonconverged = false;
  bool ergodic = false; // ensemble mean over random realizations
  bool discretization_bias = false;
  int omega_count = 0;
};

inline void summarize(LevelStats &L) {
  const double n = static_cast<double>(L.values.size());
  L.mean = pairwise_sum(L.values) / n;
  std::vector<double> sq;
  for (double v : L.values) sq.push_back((v - L.mean) * (v - L.mean));
  L.variance = n > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  L.ci = 1.96 * std::sqrt(L.variance / n);
}

inline FHomEstimate estimate_fhom(Vec2 zeta, Vec2 nu, const EstimateConfig &cfg, const SolverConfig &s,
                                  const EnvFactory &env) {
  if (cfg.t_schedule.size() < 2) throw InvalidArgument("t schedule needs at least two sizes");
  for (std::size_t i = 1; i < cfg.t_schedule.size(); ++i)
    if (!(cfg.t_schedule[i] > cfg.t_schedule[i - 1])) throw InvalidArgument("t schedule must increase");
  if (cfg.omega_count < 2) throw InvalidArgument("need at least two realizations");
  if (!(cfg.r_factor >= 1.0)) throw InvalidArgument("r(t) must be >= t");

  FHomEstimate est;
  est.zeta = zeta;
  est.nu = nu;
  est.x = cfg.x;
  est.omega_count = cfg.omega_count;
  const std::size_t nt = cfg.t_schedule.size(), nw = static_cast<std::size_t>(cfg.omega_count);
  std::vector<double> vals(nt * nw);
  std::vector<std::uint8_t> biased(nt * nw, 0);
  std::vector<double> c1(nt * nw), c2(nt * nw);
  parallel_for(nt * nw, s.jobs, [&](std::size_t k) {
    const double t = cfg.t_schedule[k / nw];
    const EnvSeed w{cfg.seed + k % nw, cfg.stream};
    const SurfaceDensity f = env(w);
    CellProblem p;
    p.center = t * cfg.x;
    p.x = t * cfg.x;
    p.size = cfg.r_factor * t;
    p.nu = nu;
    p.zeta = zeta;
    p.cls = s.cls;
    p.h = s.h;
    p.band = s.band;
    p.density = f;
    const CellResult r = solve_cell(p, s, w);
    vals[k] = r.energy / p.size;
    biased[k] = r.discretization_bias;
    c1[k] = f.params().c1;
    c2[k] = f.params().c2;
  });
  bool random_env = false;
  for (std::size_t it = 0; it < nt; ++it) {
    LevelStats L;
    L.t = cfg.t_schedule[it];
    L.r = cfg.r_factor * L.t;
    for (std::size_t iw = 0; iw < nw; ++iw) {
      const std::size_t k = it * nw + iw;
      const bool oblique = biased[k] != 0;
      if (!oblique && (vals[k] < c1[k] * (1.0 - 1e-12) || vals[k] > c2[k] * (1.0 + 1e-12)))
        throw InvariantBreach("cell ratio outside [c1, c2]");
      L.values.push_back(vals[k]);
      L.seeds.push_back(cfg.seed + iw);
      est.discretization_bias = est.discretization_bias || oblique;
    }
    summarize(L);
    est.levels.push_back(std::move(L));
  }
  random_env = !env(EnvSeed{cfg.seed, cfg.stream}).is_deterministic();
  est.value = est.levels.back().mean;
  est.ci = est.levels.back().ci;
  est.nonconverged = std::abs(est.levels[nt - 1].mean - est.levels[nt - 2].mean) > est.ci;
  est.ergodic = random_env;
  return est;
}

// ---- structure checks -----------------------------------------------------

struct FHomEntry {
  Vec2 zeta, nu, x;
  double value = 0.0, ci = 0.0;
};

namespace detail {
inline bool same_vec(Vec2 a, Vec2 b) { return norm(a - b) <= 1e-12; }
} // namespace detail

/// Report-only check of the bounds, (f3), (f4), (f7) and x-independence on a
/// table of estimates. Pairwise tolerances are the CIs of the two entries.
inline AxiomReport check_fhom_axioms(const std::vector<FHomEntry> &table, const DensityParams &p) {
  AxiomResult bounds{"bounds"}, f3{"f3"}, f4{"f4"}, f7{"f7"}, xind{"x-independence"}, cover{"coverage"};
  const auto note = [](AxiomResult &r, double v) {
    ++r.checked;
    if (v > r.worst) r.worst = v;
  };
  std::vector<Vec2> zs, ns;
  for (const auto &e : table) {
    note(bounds, std::max(p.c1 - e.value, e.value - p.c2));
    if (std::none_of(zs.begin(), zs.end(), [&](Vec2 z) { return detail::same_vec(z, e.zeta); })) zs.push_back(e.zeta);
    if (std::none_of(ns.begin(), ns.end(), [&](Vec2 n) { return detail::same_vec(n, e.nu) || detail::same_vec(n, -e.nu); }))
      ns.push_back(e.nu);
  }
  for (const auto &a : table)
    for (const auto &b : table) {
      if (&a == &b) continue;
      const double za = norm(a.zeta), zb = norm(b.zeta);
      if (detail::same_vec(a.x, b.x) && detail::same_vec(a.nu, b.nu)) {
        if (za <= zb) note(f3, a.value - p.c0 * b.value - (a.ci + p.c0 * b.ci));
        if (p.c0 * za <= zb) note(f4, a.value - b.value - (a.ci + b.ci));
      }
      if (detail::same_vec(a.x, b.x) && detail::same_vec(a.zeta, -b.zeta) && detail::same_vec(a.nu, -b.nu))
        note(f7, std::abs(a.value - b.value) - (a.ci + b.ci));
      if (!detail::same_vec(a.x, b.x) && detail::same_vec(a.zeta, b.zeta) && detail::same_vec(a.nu, b.nu))
        note(xind, std::abs(a.value - b.value) - std::hypot(a.ci, b.ci));
    }
  cover.checked = 1;
  cover.pass = zs.size() >= 3 && ns.size() >= 2;
  AxiomReport rep;
  rep.axioms = {bounds, f3, f4, f7, xind};
  for (auto &r : rep.axioms) r.pass = r.worst <= 1e-12 * std::max(1.0, p.c2);
  rep.axioms.push_back(cover);
  return rep;
}

// ---- Dirichlet infima -----------------------------------------------------

/// Infimum of the surface energy over fields equal to u0 on the `fixed` cells.
/// Two-valued data are solved exactly; otherwise by local search over u0's labels.
inline double dirichlet_infimum(const LabelField &u0, const std::vector<std::uint8_t> &fixed, double epsilon,
                                const SurfaceDensity &f, const SolverConfig &s = {}, EnvSeed seed = {}) {
  const Grid &g = u0.grid;
  if (fixed.size() != g.size()) throw InvalidArgument("fixed mask size mismatch");
  bool any = false;
  const auto d = boundary_distance(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!g.inside(c)) continue;
    any = any || fixed[c];
    if (d[c] == 1 && !fixed[c]) throw InvalidArgument("fixed region must contain the boundary band");
  }
  if (!any) throw InvalidArgument("fixed region is empty");
  const LabelField u = canonicalize(u0);
  if (u.labels.size() == 1) return 0.0;
  if (u.labels.size() == 2) {
    std::vector<std::int8_t> fx(g.size(), -1);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (g.inside(c) && fixed[c]) fx[c] = static_cast<std::int8_t>(u.assign[c]);
    const auto cut = min_cut_two_labels(g, u.labels[0], u.labels[1], fx, f, epsilon);
    return surface_energy(LabelField(g, u.labels, cut.assign), f, epsilon);
  }
  LinearClass cls = LinearClass::Zero;
  if (!u.all_in(LinearClass::Zero)) cls = u.all_in(LinearClass::Skew) ? LinearClass::Skew : LinearClass::SO2;
  detail::LocalSearch ls(g, fixed, u.labels, u.assign, f, epsilon, cls,
                         [](const RigidLabel &) { return false; }, u.labels.size());
  auto rng = make_engine(seed);
  ls.anneal(s.schedule, rng);
  ls.icm(s.schedule.max_icm_passes);
  return ls.total_energy();
}

} // namespace rigidhom
