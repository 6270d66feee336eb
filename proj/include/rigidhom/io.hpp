#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "energy.hpp"
#include "env.hpp"
#include "fields.hpp"
#include "homog.hpp"

namespace rigidhom::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string &s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

/// Throws unless every key of `j` is in `allowed`.
inline void require_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto &[k, _] : j.items()) {
    bool ok = false;
    for (const char *a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument(where + ": unknown key '" + k + "'");
  }
}

template <class T> T get_or(const json &j, const char *key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline json vec_json(Vec2 v) { return json::array({v.x, v.y}); }
inline Vec2 vec_from(const json &j, const std::string &where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InvalidArgument(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// ---- densities --------------------------------------------------------------

inline json params_json(const DensityParams &p) {
  json s = json::array();
  for (const auto &[r, v] : p.sigma.nodes()) s.push_back(json::array({r, v}));
  return {{"c0", p.c0}, {"c1", p.c1}, {"c2", p.c2}, {"sigma", s}};
}

inline DensityParams params_from(const json &j, DensityParams p) {
  require_keys(j, {"c0", "c1", "c2", "sigma"}, "params");
  p.c0 = get_or(j, "c0", p.c0);
  p.c1 = get_or(j, "c1", p.c1);
  p.c2 = get_or(j, "c2", p.c2);
  if (j.contains("sigma")) {
    std::vector<std::pair<double, double>> nodes;
    for (const auto &n : j.at("sigma")) {
      const Vec2 v = vec_from(n, "sigma node");
      nodes.emplace_back(v.x, v.y);
    }
    p.sigma = Modulus(std::move(nodes));
  }
  p.validate();
  return p;
}

/// {kind, params, seed, ...kind specific}
inline json density_to_json(const SurfaceDensity &f) {
  json j{{"kind", to_string(f.kind())}, {"params", params_json(f.params())}};
  switch (f.kind()) {
  case DensityKind::Constant: j["value"] = f.value(); break;
  case DensityKind::PeriodicTable:
    j["table"] = {{"nx", f.table_nx()}, {"ny", f.table_ny()}, {"values", f.table()}};
    break;
  case DensityKind::Checkerboard:
    j["values"] = f.table();
    j["seed"] = {{"seed", f.seed().seed}, {"stream", f.seed().stream}};
    break;
  case DensityKind::Counterexample: j["a"] = f.a(); break;
  case DensityKind::Custom: throw Unsupported("custom densities are not serializable");
  }
  if (f.offset() != Vec2{}) j["offset"] = vec_json(f.offset());
  return j;
}

inline SurfaceDensity density_from_json(const json &j) {
  require_keys(j, {"kind", "params", "seed", "value", "table", "values", "a", "offset", "weak", "strong"}, "density");
  const auto kind = get_or<std::string>(j, "kind", "");
  SurfaceDensity f;
  try {
    if (kind == "constant") {
      f = SurfaceDensity::constant(get_or(j, "value", 1.0));
    } else if (kind == "layered") {
      f = SurfaceDensity::layered(get_or(j, "weak", 0.5), get_or(j, "strong", 1.0));
    } else if (kind == "periodic") {
      const auto &t = j.at("table");
      require_keys(t, {"nx", "ny", "values"}, "table");
      f = SurfaceDensity::periodic(t.at("nx").get<int>(), t.at("ny").get<int>(),
                                   t.at("values").get<std::vector<double>>());
    } else if (kind == "checkerboard") {
      EnvSeed s;
      if (j.contains("seed")) {
        require_keys(j.at("seed"), {"seed", "stream"}, "seed");
        s.seed = get_or<std::uint64_t>(j.at("seed"), "seed", 0);
        s.stream = get_or<std::uint32_t>(j.at("seed"), "stream", 0);
      }
      f = SurfaceDensity::checkerboard(s, j.at("values").get<std::vector<double>>());
    } else if (kind == "counterexample") {
      f = SurfaceDensity::counterexample(get_or(j, "a", 10.0));
    } else {
      throw InvalidArgument("unknown density kind '" + kind + "'");
    }
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("density: ") + e.what());
  }
  if (j.contains("params")) f = f.with_params(params_from(j.at("params"), f.params()));
  if (j.contains("offset")) {
    const Vec2 z = vec_from(j.at("offset"), "offset");
    f = f.shifted(z);
  }
  return f;
}

/// Unit-cell table as a row-major CSV raster, first line is row 0.
inline std::string table_csv(const SurfaceDensity &f) {
  if (f.kind() != DensityKind::PeriodicTable) throw InvalidArgument("not a periodic table density");
  std::ostringstream os;
  for (int j = 0; j < f.table_ny(); ++j) {
    for (int i = 0; i < f.table_nx(); ++i) os << (i ? "," : "") << fmt(f.table()[j * f.table_nx() + i]);
    os << '\n';
  }
  return os.str();
}

inline SurfaceDensity table_from_csv(const std::string &text) {
  std::vector<double> vals;
  int nx = -1, ny = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int n = 0;
    while (std::getline(ls, cell, ',')) {
      vals.push_back(parse_double(cell));
      ++n;
    }
    if (nx >= 0 && n != nx) throw InvalidArgument("ragged density raster");
    nx = n;
    ++ny;
  }
  if (ny == 0) throw InvalidArgument("empty density raster");
  return SurfaceDensity::periodic(nx, ny, std::move(vals));
}

// ---- label fields -----------------------------------------------------------

inline json grid_json(const Grid &g) {
  json j{{"origin", vec_json(g.origin)}, {"h", g.h}, {"nx", g.nx}, {"ny", g.ny}};
  if (!g.mask.empty()) {
    std::string m;
    for (auto v : g.mask) m.push_back(v ? '1' : '0');
    j["mask"] = m;
  }
  return j;
}

inline Grid grid_from(const json &j) {
  require_keys(j, {"origin", "h", "nx", "ny", "mask"}, "grid");
  Grid g(vec_from(j.at("origin"), "origin"), j.at("h").get<double>(), j.at("nx").get<int>(), j.at("ny").get<int>());
  if (j.contains("mask")) {
    const auto m = j.at("mask").get<std::string>();
    if (m.size() != g.size()) throw InvalidArgument("mask length mismatch");
    g.mask.resize(m.size());
    for (std::size_t c = 0; c < m.size(); ++c) g.mask[c] = m[c] == '1';
  }
  return g;
}

inline json label_json(const RigidLabel &l) {
  return {{"M", json::array({l.M.a11, l.M.a12, l.M.a21, l.M.a22})}, {"b", vec_json(l.b)}};
}

inline RigidLabel label_from(const json &j) {
  require_keys(j, {"M", "b"}, "label");
  const auto m = j.at("M").get<std::vector<double>>();
  if (m.size() != 4) throw InvalidArgument("label matrix needs four entries");
  return {{m[0], m[1], m[2], m[3]}, vec_from(j.at("b"), "b")};
}

/// Header: version, grid and labels. The assignment goes to a separate raster.
inline json label_header(const LabelField &u) {
  json labels = json::array();
  for (const auto &l : u.labels) labels.push_back(label_json(l));
  return {{"version", kSchemaVersion}, {"grid", grid_json(u.grid)}, {"labels", labels}};
}

/// Row-major integer raster, one grid row per line starting at row 0; -1 outside the mask.
inline std::string label_raster(const LabelField &u) {
  std::ostringstream os;
  for (int j = 0; j < u.grid.ny; ++j) {
    for (int i = 0; i < u.grid.nx; ++i) os << (i ? " " : "") << u.assign[u.grid.index(i, j)];
    os << '\n';
  }
  return os.str();
}

inline LabelField label_field_from(const json &header, const std::string &raster) {
  require_keys(header, {"version", "grid", "labels"}, "label field");
  if (get_or(header, "version", 0) != kSchemaVersion) throw InvalidArgument("unsupported label field version");
  const Grid g = grid_from(header.at("grid"));
  std::vector<RigidLabel> labels;
  for (const auto &l : header.at("labels")) labels.push_back(label_from(l));
  std::vector<int> a;
  a.reserve(g.size());
  std::istringstream is(raster);
  int v;
  while (is >> v) a.push_back(v);
  if (!is.eof()) throw InvalidArgument("malformed label raster");
  return LabelField(g, std::move(labels), std::move(a));
}

// ---- deformation fields ------------------------------------------------------

/// cell,corner,y1,y2 with corners LL, LR, UL, UR.
inline std::string deform_csv(const DeformField &y) {
  std::ostringstream os;
  os << "cell,corner,y1,y2\n";
  for (std::size_t c = 0; c < y.grid.size(); ++c) {
    if (!y.grid.inside(c)) continue;
    for (int k = 0; k < 4; ++k) os << c << ',' << k << ',' << fmt(y.corner(c, k).x) << ',' << fmt(y.corner(c, k).y) << '\n';
  }
  return os.str();
}

inline json crack_json(const DeformField &y) {
  std::vector<std::uint64_t> keys(y.cracks.begin(), y.cracks.end());
  std::sort(keys.begin(), keys.end());
  json faces = json::array();
  for (auto k : keys) faces.push_back({{"cell", k >> 1}, {"axis", k & 1}});
  return {{"version", kSchemaVersion}, {"grid", grid_json(y.grid)}, {"cracks", faces}};
}

inline DeformField deform_from(const json &cracks, const std::string &csv) {
  require_keys(cracks, {"version", "grid", "cracks"}, "crack list");
  DeformField d;
  d.grid = grid_from(cracks.at("grid"));
  d.corners.assign(4 * d.grid.size(), Vec2{});
  for (const auto &f : cracks.at("cracks")) {
    require_keys(f, {"cell", "axis"}, "crack");
    const auto cell = f.at("cell").get<std::size_t>();
    const int axis = f.at("axis").get<int>();
    if (cell >= d.grid.size() || (axis != 0 && axis != 1)) throw InvalidArgument("crack face out of range");
    d.cracks.insert(face_key(cell, axis));
  }
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  if (line != "cell,corner,y1,y2") throw InvalidArgument("unexpected deformation CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto &s : f)
      if (!std::getline(ls, s, ',')) throw InvalidArgument("short deformation CSV row");
    const auto c = static_cast<std::size_t>(parse_double(f[0]));
    const int k = static_cast<int>(parse_double(f[1]));
    if (c >= d.grid.size() || k < 0 || k > 3) throw InvalidArgument("deformation CSV index out of range");
    d.corners[4 * c + k] = {parse_double(f[2]), parse_double(f[3])};
  }
  return d;
}

// ---- estimates ----------------------------------------------------------------

inline const char *kEstimateHeader = "zeta1,zeta2,nu1,nu2,x1,x2,t,seed,stream,value";

/// One row per (t, omega); the seed columns identify the realization.
inline void estimate_rows(std::ostream &os, const FHomEstimate &e, std::uint32_t stream) {
  for (const auto &L : e.levels)
    for (std::size_t k = 0; k < L.values.size(); ++k)
      os << fmt(e.zeta.x) << ',' << fmt(e.zeta.y) << ',' << fmt(e.nu.x) << ',' << fmt(e.nu.y) << ',' << fmt(e.x.x)
         << ',' << fmt(e.x.y) << ',' << fmt(L.t) << ',' << (k < L.seeds.size() ? L.seeds[k] : 0) << ',' << stream
         << ',' << fmt(L.values[k]) << '\n';
}

inline json estimate_json(const FHomEstimate &e) {
  json levels = json::array();
  for (const auto &L : e.levels)
    levels.push_back({{"t", L.t}, {"mean", L.mean}, {"variance", L.variance}, {"ci", L.ci}, {"samples", L.values.size()}});
  return {{"zeta", vec_json(e.zeta)},
          {"nu", vec_json(e.nu)},
          {"x", vec_json(e.x)},
          {"value", e.value},
          {"ci", e.ci},
          {"nonconverged", e.nonconverged},
          {"ergodic", e.ergodic},
          {"discretization_bias", e.discretization_bias},
          {"omega_count", e.omega_count},
          {"levels", levels}};
}

inline json axioms_json(const AxiomReport &r) {
  json a = json::array();
  for (const auto &x : r.axioms)
    a.push_back({{"name", x.name}, {"structural", x.structural}, {"pass", x.pass}, {"worst", x.worst}, {"checked", x.checked}});
  return {{"all_pass", r.all_pass()}, {"axioms", a}};
}

// ---- SVG ------------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::vector<double> band; // optional half-width around y
};

struct PlotOptions {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  int width = 640, height = 420;
};

namespace detail {
inline const char *palette(std::size_t i) {
  static const char *c[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  return c[i % 6];
}
inline std::string esc(const std::string &s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}
} // namespace detail

/// Static line plot with optional shaded bands.
inline std::string svg_plot(const std::vector<Series> &series, const PlotOptions &o) {
  auto tx = [&](double v) { return o.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return o.logy ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto &s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double b = i < s.band.size() ? s.band[i] : 0.0;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i] - b > 0 || !o.logy ? s.y[i] - b : s.y[i]));
      y1 = std::max(y1, ty(s.y[i] + b));
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double L = 70, R = 20, T = 40, B = 50, W = o.width - L - R, H = o.height - T - B;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * W; };
  auto py = [&](double v) { return T + H - (ty(v) - y0) / (y1 - y0) * H; };
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << o.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::esc(o.title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double vx = x0 + (x1 - x0) * k / 4, vy = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << L + W * k / 4 << "\" y=\"" << T + H + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << fmt(std::round((o.logx ? std::pow(10, vx) : vx) * 1e4) / 1e4) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << T + H - H * k / 4 + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << fmt(std::round((o.logy ? std::pow(10, vy) : vy) * 1e4) / 1e4) << "</text>\n";
  }
  os << "<text x=\"" << L + W / 2 << "\" y=\"" << o.height - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << detail::esc(o.xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << T + H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << T + H / 2 << ")\">" << detail::esc(o.ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto &S = series[s];
    const char *col = detail::palette(s);
    if (!S.band.empty()) {
      os << "<polygon fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < S.x.size(); ++i) os << px(S.x[i]) << ',' << py(S.y[i] + S.band[i]) << ' ';
      for (std::size_t i = S.x.size(); i-- > 0;) os << px(S.x[i]) << ',' << py(std::max(S.y[i] - S.band[i], o.logy ? S.y[i] * 1e-3 : -1e300)) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < S.x.size(); ++i) os << px(S.x[i]) << ',' << py(S.y[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < S.x.size(); ++i)
      os << "<circle cx=\"" << px(S.x[i]) << "\" cy=\"" << py(S.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * s << "\" font-size=\"12\" fill=\"" << col << "\">"
       << detail::esc(S.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Convergence plot of the level means with 1.96 SE bands.
inline std::string svg_convergence(const FHomEstimate &e, const std::string &title) {
  Series s{"mean m/t", {}, {}, {}};
  for (const auto &L : e.levels) {
    s.x.push_back(L.t);
    s.y.push_back(L.mean);
    s.band.push_back(L.ci);
  }
  return svg_plot({s}, {title, "t", "estimate", true, false});
}

/// Partition rendering: one colour per label, runs merged along rows, jump faces in black.
inline std::string svg_partition(const LabelField &u, int max_px = 640) {
  const Grid &g = u.grid;
  const double s = static_cast<double>(max_px) / std::max(g.nx, g.ny);
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g.nx * s << "\" height=\"" << g.ny * s << "\">\n";
  auto colour = [](int l) {
    if (l < 0) return std::string("#ffffff");
    const std::uint64_t hsh = splitmix64(static_cast<std::uint64_t>(l) + 7);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", int(96 + (hsh & 127)), int(96 + ((hsh >> 8) & 127)),
                  int(96 + ((hsh >> 16) & 127)));
    return std::string(buf);
  };
  for (int j = 0; j < g.ny; ++j) {
    int i = 0;
    while (i < g.nx) {
      const int l = u.assign[g.index(i, j)];
      int k = i;
      while (k < g.nx && u.assign[g.index(k, j)] == l) ++k;
      os << "<rect x=\"" << i * s << "\" y=\"" << (g.ny - 1 - j) * s << "\" width=\"" << (k - i) * s
         << "\" height=\"" << s << "\" fill=\"" << colour(l) << "\"/>\n";
      i = k;
    }
  }
  for (const auto &jf : jump_faces(u)) {
    const int i = g.col(jf.cell_minus), j = g.row(jf.cell_minus);
    const double x = (i + 1) * s, y = (g.ny - 1 - j) * s;
    if (jf.axis == 0) os << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x << "\" y2=\"" << y + s;
    else os << "<line x1=\"" << i * s << "\" y1=\"" << y << "\" x2=\"" << x << "\" y2=\"" << y;
    os << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- files -----------------------------------------------------------------------

inline void write_text(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path);
  f << text;
}

inline std::string read_text(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline json read_json(const std::string &path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error &e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

} // namespace rigidhom::io
