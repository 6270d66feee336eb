#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rigidhom.hpp"

namespace rigidhom::cli {

using io::json;

inline constexpr const char *kToolVersion = "0.1.0";
inline constexpr int kConfigVersion = 1;

enum Exit { kOk = 0, kValidation = 1, kSolver = 2 };

struct Options {
  std::string command;
  json config;
  std::string out = "out";
  std::optional<std::uint64_t> seed; // overrides config "seed"
  std::optional<int> jobs;           // overrides config "jobs"
};

// ---- logging ---------------------------------------------------------------

inline int log_level() {
  const char *v = std::getenv("RIGIDHOM_LOG");
  if (!v) return 1;
  const std::string s = v;
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

inline void log(int level, const std::string &msg) {
  if (level <= log_level()) std::cerr << "[rigidhom] " << msg << '\n';
}

// ---- config parsing helpers ------------------------------------------------

using io::get_or;
using io::require_keys;

inline LinearClass class_from(const std::string &s) {
  if (s == "zero") return LinearClass::Zero;
  if (s == "skew") return LinearClass::Skew;
  if (s == "so2") return LinearClass::SO2;
  throw InvalidArgument("unknown competitor class '" + s + "'");
}

inline Vec2 vec_or(const json &j, const char *key, Vec2 def) {
  return j.contains(key) ? io::vec_from(j.at(key), key) : def;
}

inline LocalSchedule schedule_from(const json &j) {
  require_keys(j, {"sweeps", "t0", "t1", "neighbor_bias", "component_rounds", "max_icm_passes", "warm_start_cut",
                   "reference_cut", "max_dict"},
               "schedule");
  LocalSchedule s;
  s.sweeps = get_or(j, "sweeps", s.sweeps);
  s.t0 = get_or(j, "t0", s.t0);
  s.t1 = get_or(j, "t1", s.t1);
  s.neighbor_bias = get_or(j, "neighbor_bias", s.neighbor_bias);
  s.component_rounds = get_or(j, "component_rounds", s.component_rounds);
  s.max_icm_passes = get_or(j, "max_icm_passes", s.max_icm_passes);
  s.warm_start_cut = get_or(j, "warm_start_cut", s.warm_start_cut);
  s.reference_cut = get_or(j, "reference_cut", s.reference_cut);
  s.max_dict = get_or(j, "max_dict", s.max_dict);
  return s;
}

inline SolverConfig solver_from(const json &j, int jobs) {
  require_keys(j, {"kind", "h", "band", "class", "schedule", "random_labels", "random_scale"}, "solver");
  SolverConfig s;
  s.kind = get_or<std::string>(j, "kind", s.kind);
  if (s.kind != "mincut" && s.kind != "local") throw InvalidArgument("unknown solver kind '" + s.kind + "'");
  s.h = get_or(j, "h", s.h);
  s.band = get_or(j, "band", s.band);
  s.cls = class_from(get_or<std::string>(j, "class", "zero"));
  if (j.contains("schedule")) s.schedule = schedule_from(j.at("schedule"));
  s.random_labels = get_or(j, "random_labels", s.random_labels);
  s.random_scale = get_or(j, "random_scale", s.random_scale);
  s.jobs = jobs;
  return s;
}

inline EnvFactory env_from(const json &density) {
  const auto f = io::density_from_json(density);
  if (f.kind() != DensityKind::Checkerboard) return fixed_env(f);
  const auto values = f.table();
  const Vec2 off = f.offset();
  return [values, off](EnvSeed w) {
    auto g = SurfaceDensity::checkerboard(w, values);
    return off == Vec2{} ? g : g.shifted(off);
  };
}

struct Artifacts {
  std::filesystem::path dir;
  json manifest;
  std::vector<std::string> files;

  void write(const std::string &name, const std::string &text) {
    io::write_text((dir / name).string(), text);
    files.push_back(name);
  }
};

// ---- subcommands ------------------------------------------------------------

inline int run_fhom(const json &c, std::uint64_t seed, int jobs, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "density", "solver", "estimate", "directions", "check_axioms"}, "fhom");
  const json density = c.at("density");
  const auto env = env_from(density);
  const auto solver = solver_from(get_or(c, "solver", json::object()), jobs);
  EstimateConfig ec;
  if (c.contains("estimate")) {
    const auto &e = c.at("estimate");
    require_keys(e, {"t_schedule", "omega_count", "stream", "r_factor"}, "estimate");
    ec.t_schedule = get_or(e, "t_schedule", ec.t_schedule);
    ec.omega_count = get_or(e, "omega_count", ec.omega_count);
    ec.stream = get_or(e, "stream", ec.stream);
    ec.r_factor = get_or(e, "r_factor", ec.r_factor);
  }
  ec.seed = seed;
  std::vector<FHomEntry> table;
  json dirs = get_or(c, "directions", json::array({json{{"zeta", {1, 0}}, {"nu", {0, 1}}}}));
  if (!dirs.is_array() || dirs.empty()) throw InvalidArgument("directions must be a nonempty array");
  std::ostringstream csv;
  csv << io::kEstimateHeader << '\n';
  json ests = json::array();
  int k = 0;
  for (const auto &d : dirs) {
    require_keys(d, {"zeta", "nu", "x"}, "direction");
    EstimateConfig e = ec;
    e.x = vec_or(d, "x", {});
    const Vec2 zeta = vec_or(d, "zeta", e1), nu = vec_or(d, "nu", e2);
    log(1, "fhom zeta=(" + io::fmt(zeta.x) + "," + io::fmt(zeta.y) + ") nu=(" + io::fmt(nu.x) + "," + io::fmt(nu.y) + ")");
    const auto est = estimate_fhom(zeta, nu, e, solver, env);
    io::estimate_rows(csv, est, ec.stream);
    ests.push_back(io::estimate_json(est));
    table.push_back({zeta, nu, e.x, est.value, est.ci});
    out.write("convergence_" + std::to_string(k++) + ".svg", io::svg_convergence(est, "f_hom estimate"));
  }
  out.write("results.csv", csv.str());
  summary["estimates"] = ests;
  if (get_or(c, "check_axioms", false)) {
    const auto rep = check_fhom_axioms(table, io::density_from_json(density).params());
    summary["axioms"] = io::axioms_json(rep);
    if (!rep.all_pass()) return kValidation;
  }
  return kOk;
}

inline int run_cell(const json &c, std::uint64_t seed, int jobs, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "density", "problem", "solver"}, "cell");
  const auto f = io::density_from_json(c.at("density"));
  const auto solver = solver_from(get_or(c, "solver", json::object()), jobs);
  CellProblem p;
  const json pj = get_or(c, "problem", json::object());
  require_keys(pj, {"center", "size", "height", "nu", "zeta", "x", "class", "epsilon", "h", "k", "band"}, "problem");
  p.center = vec_or(pj, "center", {});
  p.size = get_or(pj, "size", p.size);
  p.height = get_or(pj, "height", p.height);
  p.nu = vec_or(pj, "nu", e2);
  p.zeta = vec_or(pj, "zeta", e1);
  p.x = vec_or(pj, "x", p.center);
  p.cls = pj.contains("class") ? class_from(pj.at("class").get<std::string>()) : solver.cls;
  p.epsilon = get_or(pj, "epsilon", p.epsilon);
  p.h = get_or(pj, "h", solver.h);
  if (pj.contains("k")) p.k = pj.at("k").get<double>();
  p.band = get_or(pj, "band", solver.band);
  p.density = f;
  const auto r = solve_cell(p, solver, EnvSeed{seed, 0});
  std::ostringstream csv;
  csv << "solver,energy,certificate,gap,jump_length,seed\n"
      << r.solver << ',' << io::fmt(r.energy) << ',' << (r.certificate ? io::fmt(*r.certificate) : "") << ','
      << (r.gap ? io::fmt(*r.gap) : "") << ',' << io::fmt(jump_length(r.field)) << ',' << seed << '\n';
  out.write("results.csv", csv.str());
  out.write("field.json", io::label_header(r.field).dump(2) + "\n");
  out.write("field.raster", io::label_raster(r.field));
  out.write("field.svg", io::svg_partition(r.field));
  summary["energy"] = r.energy;
  summary["solver"] = r.solver;
  summary["certificate"] = r.certificate ? json(*r.certificate) : json();
  summary["gap"] = r.gap ? json(*r.gap) : json();
  summary["discretization_bias"] = r.discretization_bias;
  return kOk;
}

inline int run_validate(const json &c, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "density", "sample"}, "validate");
  const auto f = io::density_from_json(c.at("density"));
  SamplePlan plan;
  if (c.contains("sample")) {
    const auto &s = c.at("sample");
    require_keys(s, {"nx", "nzeta", "nnu", "x_extent"}, "sample");
    plan.nx = get_or(s, "nx", plan.nx);
    plan.nzeta = get_or(s, "nzeta", plan.nzeta);
    plan.nnu = get_or(s, "nnu", plan.nnu);
    plan.x_extent = get_or(s, "x_extent", plan.x_extent);
  }
  const auto rep = validate_axioms(f, plan);
  std::ostringstream csv;
  csv << "axiom,structural,pass,worst,checked\n";
  for (const auto &a : rep.axioms)
    csv << a.name << ',' << a.structural << ',' << a.pass << ',' << io::fmt(a.worst) << ',' << a.checked << '\n';
  out.write("results.csv", csv.str());
  summary["report"] = io::axioms_json(rep);
  return rep.all_pass() ? kOk : kValidation;
}

inline ApproxParams approx_params_from(const json &j, int jobs) {
  require_keys(j, {"delta", "beta", "gamma", "C0", "c_star"}, "params");
  ApproxParams p;
  p.delta = get_or(j, "delta", p.delta);
  p.beta = get_or(j, "beta", p.beta);
  if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
  p.C0 = get_or(j, "C0", p.C0);
  p.c_star = get_or(j, "c_star", p.c_star);
  p.jobs = jobs;
  return p;
}

inline SyntheticSpec synthetic_from(const json &j) {
  require_keys(j, {"delta", "beta", "gamma", "h", "strain"}, "synthetic");
  SyntheticSpec s;
  s.delta = get_or(j, "delta", s.delta);
  s.beta = get_or(j, "beta", s.beta);
  s.gamma = get_or(j, "gamma", s.gamma);
  s.h = get_or(j, "h", s.h);
  s.strain = get_or(j, "strain", s.strain);
  return s;
}

inline json approx_json(const ApproxReport &r) {
  return {{"linf_error", r.linf_error}, {"extra_jump_length", r.extra_jump_length}, {"pieces", r.pieces},
          {"subdivided", r.subdivided}, {"cuboids", r.cuboids},  {"cuboid_error", r.cuboid_error},
          {"rate_linf", r.rate_linf},   {"rate_jump", r.rate_jump}, {"rotation_distance", r.rotation_distance}};
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline int run_approx(const json &c, int jobs, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "params", "synthetic", "deformation", "deltas"}, "approx");
  const ApproxParams base = approx_params_from(get_or(c, "params", json::object()), jobs);
  const SyntheticSpec syn = synthetic_from(get_or(c, "synthetic", json::object()));
  std::ostringstream csv;
  csv << "delta,linf_error,extra_jump_length,pieces,subdivided,cuboids,rate_linf,rate_jump\n";
  auto row = [&](double d, const ApproxReport &r) {
    csv << io::fmt(d) << ',' << io::fmt(r.linf_error) << ',' << io::fmt(r.extra_jump_length) << ',' << r.pieces << ','
        << r.subdivided << ',' << r.cuboids << ',' << io::fmt(r.rate_linf) << ',' << io::fmt(r.rate_jump) << '\n';
  };
  if (c.contains("deltas")) {
    if (c.contains("deformation")) throw InvalidArgument("deltas study works on the synthetic family only");
    const auto deltas = c.at("deltas").get<std::vector<double>>();
    if (deltas.size() < 2) throw InvalidArgument("a scaling study needs at least two deltas");
    std::vector<double> lin, jmp;
    json reps = json::array();
    for (double d : deltas) {
      SyntheticSpec s = syn;
      s.delta = d;
      ApproxParams p = base;
      p.delta = d;
      const auto [v, r] = approximate(synthetic_deformation(s), p);
      row(d, r);
      lin.push_back(r.linf_error);
      jmp.push_back(r.extra_jump_length);
      reps.push_back(approx_json(r));
    }
    summary["reports"] = reps;
    summary["slope_linf"] = loglog_slope(deltas, lin);
    summary["slope_jump"] = loglog_slope(deltas, jmp);
    out.write("scaling.svg", io::svg_plot({{"L-infinity error", deltas, lin, {}}, {"extra jump length", deltas, jmp, {}}},
                                          {"approximation scaling", "delta", "value", true, true}));
  } else {
    DeformField y;
    if (c.contains("deformation")) {
      const auto &d = c.at("deformation");
      require_keys(d, {"csv", "cracks"}, "deformation");
      y = io::deform_from(io::read_json(d.at("cracks").get<std::string>()),
                          io::read_text(d.at("csv").get<std::string>()));
    } else {
      y = synthetic_deformation(syn);
    }
    const auto [v, r] = approximate(y, base);
    row(base.delta, r);
    summary["report"] = approx_json(r);
    out.write("field.json", io::label_header(v).dump(2) + "\n");
    out.write("field.raster", io::label_raster(v));
    out.write("field.svg", io::svg_partition(v));
  }
  out.write("results.csv", csv.str());
  return kOk;
}

inline int run_recovery(const json &c, std::uint64_t seed, int jobs, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "density", "params", "field", "interface", "fhom"}, "recovery");
  const auto f = io::density_from_json(c.at("density"));
  RecoveryParams rp;
  const json pj = get_or(c, "params", json::object());
  require_keys(pj, {"epsilon", "eta", "rho", "t", "h_cell", "band"}, "params");
  rp.epsilon = get_or(pj, "epsilon", rp.epsilon);
  rp.eta = get_or(pj, "eta", rp.eta);
  rp.rho = get_or(pj, "rho", rp.rho);
  rp.t = get_or(pj, "t", rp.t);
  rp.h_cell = get_or(pj, "h_cell", rp.h_cell);
  rp.band = get_or(pj, "band", rp.band);
  rp.jobs = jobs;

  LabelField u;
  if (c.contains("field")) {
    const auto &fj = c.at("field");
    require_keys(fj, {"header", "raster"}, "field");
    u = io::label_field_from(io::read_json(fj.at("header").get<std::string>()),
                             io::read_text(fj.at("raster").get<std::string>()));
  } else {
    const json ij = get_or(c, "interface", json::object());
    require_keys(ij, {"h", "skew", "line", "jump"}, "interface");
    const double h = get_or(ij, "h", 1.0 / 64), line = get_or(ij, "line", 0.5);
    const Mat2 S = Mat2::skew(get_or(ij, "skew", 0.0));
    const Vec2 jump = vec_or(ij, "jump", e1);
    const int n = static_cast<int>(std::lround(1.0 / h));
    if (std::abs(n * h - 1.0) > 1e-12) throw InvalidArgument("interface h must divide 1");
    Grid g({0, 0}, 1.0 / n, n, n);
    std::vector<int> a(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) a[k] = g.center(k).y > line ? 1 : 0;
    u = LabelField(g, {RigidLabel{S, {}}, RigidLabel{S, jump}}, a);
  }

  FHomOracle oracle;
  const json fj = get_or(c, "fhom", json::object());
  require_keys(fj, {"value", "t_schedule", "omega_count", "h"}, "fhom");
  if (fj.contains("value")) {
    const double v = fj.at("value").get<double>();
    oracle = [v](Vec2, Vec2) { return v; };
  } else {
    EstimateConfig ec;
    ec.t_schedule = get_or(fj, "t_schedule", std::vector<double>{8, 16});
    ec.omega_count = get_or(fj, "omega_count", 2);
    ec.seed = seed;
    SolverConfig s;
    s.h = get_or(fj, "h", 0.125);
    s.jobs = jobs;
    auto cache = std::make_shared<std::map<std::array<double, 4>, double>>();
    oracle = [=](Vec2 zeta, Vec2 nu) {
      const std::array<double, 4> key{zeta.x, zeta.y, nu.x, nu.y};
      if (auto it = cache->find(key); it != cache->end()) return it->second;
      const double v = estimate_fhom(zeta, nu, ec, s, fixed_env(f)).value;
      (*cache)[key] = v;
      return v;
    };
  }
  const auto [v, r] = build_recovery(u, f, rp, oracle);
  std::ostringstream csv;
  csv << "axis,line,from,to,zeta1,zeta2,fhom,coarse_points,fine_cubes,cell_energy\n";
  json ifs = json::array();
  for (const auto &k : r.interfaces) {
    csv << k.axis << ',' << io::fmt(k.line) << ',' << io::fmt(k.from) << ',' << io::fmt(k.to) << ','
        << io::fmt(k.zeta.x) << ',' << io::fmt(k.zeta.y) << ',' << io::fmt(k.fhom) << ',' << k.coarse_points << ','
        << k.fine_cubes << ',' << io::fmt(k.cell_energy) << '\n';
    ifs.push_back({{"axis", k.axis}, {"line", k.line}, {"from", k.from}, {"to", k.to}, {"zeta", io::vec_json(k.zeta)},
                   {"fhom", k.fhom}, {"coarse_points", k.coarse_points}, {"fine_cubes", k.fine_cubes},
                   {"cell_energy", k.cell_energy}});
  }
  out.write("results.csv", csv.str());
  out.write("field.json", io::label_header(v).dump(2) + "\n");
  out.write("field.raster", io::label_raster(v));
  out.write("field.svg", io::svg_partition(v));
  summary["energy"] = r.energy;
  summary["predicted"] = r.predicted;
  summary["ratio"] = r.ratio;
  summary["max_gradient"] = r.max_gradient;
  summary["t"] = r.t;
  summary["h_fine"] = r.h_fine;
  summary["eta"] = r.eta;
  summary["frozen_ok"] = r.frozen_ok;
  summary["interfaces"] = ifs;
  return kOk;
}

inline json slicing_json(const SlicingReport &s) {
  return {{"certificate", s.certificate}, {"vertical", s.vertical}, {"columns", s.columns}, {"i1", s.i1},
          {"i2", s.i2},   {"i3", s.i3},   {"anomalous", s.anomalous}, {"case_a", s.case_a}, {"case_b", s.case_b},
          {"case_c", s.case_c}, {"pieces", s.pieces}, {"max_gradient", s.max_gradient}};
}

inline json gap_json(const GapReport &r) {
  json cands = json::array();
  for (const auto &c : r.candidates)
    cands.push_back({{"name", c.name}, {"energy", c.energy}, {"sound", c.sound},
                     {"slicing", c.slicing ? slicing_json(*c.slicing) : json()}});
  auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(); };
  return {{"a", r.cfg.a},
          {"rho", r.cfg.rho},
          {"epsilon", r.cfg.epsilon},
          {"h", r.cfg.h},
          {"cap", r.cfg.cap},
          {"small_regime", r.cfg.small_regime()},
          {"strip_energy", r.strip_energy},
          {"strip_bound", r.strip_bound},
          {"extrapolated", r.extrapolated},
          {"best_energy", r.best_energy},
          {"min_certificate", opt(r.min_certificate)},
          {"target", r.target},
          {"ratio", opt(r.ratio)},
          {"ratio_limit", opt(r.ratio_limit)},
          {"ratio_heuristic", r.ratio_heuristic},
          {"certificates_reach_target", r.certificates_reach_target},
          {"pass", r.pass},
          {"candidates", cands}};
}

inline int run_counterexample(const json &c, std::uint64_t seed, int jobs, Artifacts &out, json &summary) {
  require_keys(c, {"version", "seed", "jobs", "a", "rho", "epsilon", "h", "cap", "local", "snapshots"},
               "counterexample");
  CounterexConfig cfg;
  cfg.a = get_or(c, "a", cfg.a);
  cfg.rho = get_or(c, "rho", cfg.rho);
  cfg.epsilon = get_or(c, "epsilon", cfg.epsilon);
  cfg.h = get_or(c, "h", cfg.h);
  cfg.cap = get_or(c, "cap", cfg.cap);
  cfg.validate();
  GapOptions opt;
  opt.seed = {seed, 0};
  opt.jobs = jobs;
  if (c.contains("local")) {
    const auto &l = c.at("local");
    require_keys(l, {"enabled", "schedule"}, "local");
    opt.run_local = get_or(l, "enabled", opt.run_local);
    if (l.contains("schedule")) opt.schedule = schedule_from(l.at("schedule"));
  }
  const auto rep = run_gap_experiment(cfg, opt);
  const auto ub = verify_upper_bound(cfg);
  std::ostringstream csv;
  csv << "candidate,energy,certificate,sound,i1,i2,i3\n";
  for (const auto &k : rep.candidates) {
    csv << k.name << ',' << io::fmt(k.energy) << ',';
    if (k.slicing) csv << io::fmt(k.slicing->certificate) << ',' << k.sound << ',' << k.slicing->i1 << ','
                       << k.slicing->i2 << ',' << k.slicing->i3 << '\n';
    else csv << ",,,,\n";
  }
  out.write("results.csv", csv.str());
  summary["gap"] = gap_json(rep);
  auto terms = [](const StripTerms &t) {
    return json{{"vertical", t.vertical}, {"squares", t.squares}, {"gamma", t.gamma}, {"total", t.total()}};
  };
  summary["upper_bound"] = {{"energy", ub.energy},
                            {"bound", ub.bound},
                            {"limit_bound", ub.limit_bound},
                            {"pass", ub.pass},
                            {"measured", terms(ub.measured)},
                            {"exact", ub.exact ? terms(*ub.exact) : json()},
                            {"bound_terms", terms(ub.bound_terms)}};
  if (get_or(c, "snapshots", true)) {
    out.write("strip.svg", io::svg_partition(build_strip_competitor(cfg)));
    out.write("capped_strip.svg", io::svg_partition(strip_field(cfg, cfg.cap)));
  }
  return rep.pass ? kOk : kValidation;
}

// ---- driver ------------------------------------------------------------------

inline json error_json(const char *kind, const std::string &msg) { return {{"error", kind}, {"message", msg}}; }

/// Runs one subcommand and writes manifest.json, results.csv, summary.json and plots to opt.out.
inline int run(const Options &opt, std::ostream &err = std::cerr) {
  try {
    const json &c = opt.config;
    if (!c.is_object()) throw InvalidArgument("config must be a JSON object");
    if (!c.contains("version")) throw InvalidArgument("config lacks a schema version");
    if (c.at("version") != kConfigVersion) throw InvalidArgument("unsupported config version");
    const std::uint64_t seed = opt.seed ? *opt.seed : get_or<std::uint64_t>(c, "seed", 0);
    const int jobs = opt.jobs ? *opt.jobs : get_or(c, "jobs", 1);
    if (jobs < 1) throw InvalidArgument("jobs must be positive");

    Artifacts out;
    out.dir = opt.out;
    std::filesystem::create_directories(out.dir);
    json summary{{"command", opt.command}};
    int code = kOk;
    if (opt.command == "fhom") code = run_fhom(c, seed, jobs, out, summary);
    else if (opt.command == "cell") code = run_cell(c, seed, jobs, out, summary);
    else if (opt.command == "validate") code = run_validate(c, out, summary);
    else if (opt.command == "approx") code = run_approx(c, jobs, out, summary);
    else if (opt.command == "recovery") code = run_recovery(c, seed, jobs, out, summary);
    else if (opt.command == "counterexample") code = run_counterexample(c, seed, jobs, out, summary);
    else throw InvalidArgument("unknown subcommand '" + opt.command + "'");

    summary["exit_code"] = code;
    out.write("summary.json", summary.dump(2) + "\n");
    json manifest{{"tool", "rigidhom"},
                  {"version", kToolVersion},
                  {"schema_version", kConfigVersion},
                  {"command", opt.command},
                  {"seed", seed},
                  {"jobs", jobs},
                  {"config", c},
                  {"files", out.files}};
    io::write_text((out.dir / "manifest.json").string(), manifest.dump(2) + "\n");
    log(1, opt.command + " finished with exit code " + std::to_string(code));
    return code;
  } catch (const InvalidArgument &e) {
    err << error_json("invalid-argument", e.what()).dump() << '\n';
    return kValidation;
  } catch (const UnsupportedDirection &e) {
    err << error_json("unsupported-direction", e.what()).dump() << '\n';
    return kValidation;
  } catch (const Unsupported &e) {
    err << error_json("unsupported", e.what()).dump() << '\n';
    return kValidation;
  } catch (const json::exception &e) {
    err << error_json("malformed-config", e.what()).dump() << '\n';
    return kValidation;
  } catch (const std::exception &e) {
    err << error_json("solver-error", e.what()).dump() << '\n';
    return kSolver;
  }
}

} // namespace rigidhom::cli
