#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace rigidhom {

/// Piecewise-linear modulus of continuity. Constant beyond the last node.
class Modulus {
public:
  Modulus() : nodes_{{0.0, 0.0}, {0.5, 0.5}} {}
  explicit Modulus(std::vector<std::pair<double, double>> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty() || nodes_.front().first != 0.0 || nodes_.front().second != 0.0)
      throw InvalidArgument("modulus table must start at (0,0)");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i].first > nodes_[i - 1].first))
        throw InvalidArgument("modulus abscissae must increase");
      if (nodes_[i].second < nodes_[i - 1].second)
        throw InvalidArgument("modulus must be nondecreasing");
    }
    if (nodes_.back().second > 0.5) throw InvalidArgument("modulus must not exceed 1/2");
  }

  double operator()(double r) const {
    if (r <= 0.0) return 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (r <= nodes_[i].first) {
        const auto [r0, s0] = nodes_[i - 1];
        const auto [r1, s1] = nodes_[i];
        return s0 + (s1 - s0) * (r - r0) / (r1 - r0);
      }
    }
    return nodes_.back().second;
  }

  const std::vector<std::pair<double, double>> &nodes() const { return nodes_; }

private:
  std::vector<std::pair<double, double>> nodes_;
};

struct DensityParams {
  double c0 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  Modulus sigma;

  void validate() const {
    if (!(c0 >= 1.0)) throw InvalidArgument("c0 must be >= 1");
    if (!(c1 > 0.0)) throw InvalidArgument("c1 must be > 0");
    // c1 == c2 is allowed so constant densities are representable.
    if (!(c1 <= c2)) throw InvalidArgument("c1 must not exceed c2");
  }
};

enum class DensityKind { Constant, PeriodicTable, Checkerboard, Counterexample, Custom };

inline const char *to_string(DensityKind k) {
  switch (k) {
  case DensityKind::Constant: return "constant";
  case DensityKind::PeriodicTable: return "periodic";
  case DensityKind::Checkerboard: return "checkerboard";
  case DensityKind::Counterexample: return "counterexample";
  case DensityKind::Custom: return "custom";
  }
  return "?";
}

/// f(x, zeta, nu). Immutable; copies share the table storage.
class SurfaceDensity {
public:
  using Fn = std::function<double(Vec2, Vec2, Vec2)>;

  /// Constant density 1.
  SurfaceDensity() : kind_(DensityKind::Constant), value_(1.0) {}

  static SurfaceDensity constant(double c) {
    if (!(c > 0.0)) throw InvalidArgument("constant density must be positive");
    SurfaceDensity f(DensityKind::Constant);
    f.value_ = c;
    f.params_.c1 = c;
    f.params_.c2 = c;
    return f;
  }

  /// Unit-cell raster, row-major with row 0 covering frac(x2) in [0, 1/ny).
  static SurfaceDensity periodic(int nx, int ny, std::vector<double> values) {
    if (nx < 1 || ny < 1 || values.size() != static_cast<std::size_t>(nx) * ny)
      throw InvalidArgument("periodic table shape mismatch");
    SurfaceDensity f(DensityKind::PeriodicTable);
    f.nx_ = nx;
    f.ny_ = ny;
    f.set_range(values);
    f.table_ = std::make_shared<const std::vector<double>>(std::move(values));
    return f;
  }

  /// Laminate: `weak` on frac(x2) in [0, 1/2), `strong` elsewhere.
  static SurfaceDensity layered(double weak, double strong) { return periodic(1, 2, {weak, strong}); }

  /// i.i.d. unit cells drawing from `values`, keyed by (seed, cell index).
  static SurfaceDensity checkerboard(EnvSeed seed, std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("checkerboard needs at least one value");
    SurfaceDensity f(DensityKind::Checkerboard);
    f.seed_ = seed;
    f.set_range(values);
    f.table_ = std::make_shared<const std::vector<double>>(std::move(values));
    return f;
  }

  static SurfaceDensity counterexample(double a) {
    if (!(a >= 1.0)) throw InvalidArgument("counterexample parameter a must be >= 1");
    SurfaceDensity f(DensityKind::Counterexample);
    f.value_ = a;
    f.params_.c0 = std::sqrt(2.0) * a;
    f.params_.c1 = 1.0;
    // a^3 off the band; a^2 (a|nu2| + |nu1|) peaks at a^2 sqrt(a^2+1) for oblique normals.
    f.params_.c2 = std::max(a * a * a, a * a * std::sqrt(a * a + 1.0));
    const double slope = std::sqrt(a * a + 1.0) / 10.0;
    f.params_.sigma = Modulus({{0.0, 0.0}, {0.5 / slope, 0.5}});
    return f;
  }

  /// Arbitrary evaluator, used for controls in tests. Not serializable.
  static SurfaceDensity custom(Fn fn, DensityParams p, bool periodic_in_z = false) {
    SurfaceDensity f(DensityKind::Custom);
    f.fn_ = std::make_shared<const Fn>(std::move(fn));
    f.params_ = std::move(p);
    f.custom_shiftable_ = periodic_in_z;
    return f;
  }

  DensityKind kind() const { return kind_; }
  const DensityParams &params() const { return params_; }
  SurfaceDensity with_params(DensityParams p) const {
    p.validate();
    SurfaceDensity f = *this;
    f.params_ = std::move(p);
    return f;
  }
  Vec2 offset() const { return offset_; }
  double value() const { return value_; }
  double a() const { return value_; }
  EnvSeed seed() const { return seed_; }
  int table_nx() const { return nx_; }
  int table_ny() const { return ny_; }
  const std::vector<double> &table() const {
    static const std::vector<double> empty;
    return table_ ? *table_ : empty;
  }
  /// True when f does not depend on the realization (constant, periodic, counterexample).
  bool is_deterministic() const { return kind_ != DensityKind::Checkerboard; }
  bool is_periodic() const {
    return kind_ == DensityKind::Constant || kind_ == DensityKind::PeriodicTable ||
           kind_ == DensityKind::Counterexample;
  }

  /// Checked evaluation.
  double operator()(Vec2 x, Vec2 zeta, Vec2 nu) const {
    if (zeta.x == 0.0 && zeta.y == 0.0) throw InvalidArgument("zero jump");
    if (!is_unit(nu)) throw InvalidArgument("normal is not a unit vector");
    return eval(x, zeta, nu);
  }

  /// Unchecked evaluation for inner loops.
  double eval(Vec2 x, Vec2 zeta, Vec2 nu) const {
    const Vec2 y = x + offset_;
    switch (kind_) {
    case DensityKind::Constant: return value_;
    case DensityKind::PeriodicTable: {
      const double fx = y.x - std::floor(y.x), fy = y.y - std::floor(y.y);
      const int i = std::min(nx_ - 1, static_cast<int>(fx * nx_));
      const int j = std::min(ny_ - 1, static_cast<int>(fy * ny_));
      return (*table_)[static_cast<std::size_t>(j) * nx_ + i];
    }
    case DensityKind::Checkerboard: {
      const auto i = static_cast<std::int64_t>(std::floor(y.x));
      const auto j = static_cast<std::int64_t>(std::floor(y.y));
      return (*table_)[counter_hash(seed_, i, j) % table_->size()];
    }
    case DensityKind::Counterexample: {
      const double a = value_;
      const double r = y.y - std::floor(y.y + 0.5);
      if (std::abs(r) > 0.25) return a * a * a;
      const double inner = std::min(5.0 + a * std::abs(zeta.x) + std::abs(zeta.y), a * a);
      return inner * (a * std::abs(nu.y) + std::abs(nu.x));
    }
    case DensityKind::Custom: return (*fn_)(y, zeta, nu);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// Environment shifted by z: result(x) = f(x + z).
  SurfaceDensity shifted(Vec2 z) const {
    if (z.x != std::floor(z.x) || z.y != std::floor(z.y))
      throw InvalidArgument("shift must be an integer vector");
    if (kind_ == DensityKind::Custom && !custom_shiftable_)
      throw Unsupported("custom density is not declared shift-covariant");
    SurfaceDensity f = *this;
    if (kind_ != DensityKind::Constant) f.offset_ = offset_ + z;
    return f;
  }

private:
  explicit SurfaceDensity(DensityKind k) : kind_(k) {}

  void set_range(const std::vector<double> &values) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double v : values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("density values must be positive");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    params_.c1 = lo;
    params_.c2 = hi;
  }

  DensityKind kind_;
  DensityParams params_;
  Vec2 offset_{};
  double value_ = 0.0;
  int nx_ = 0, ny_ = 0;
  EnvSeed seed_{};
  std::shared_ptr<const std::vector<double>> table_;
  std::shared_ptr<const Fn> fn_;
  bool custom_shiftable_ = false;
};

inline double eval_density(const SurfaceDensity &f, Vec2 x, Vec2 zeta, Vec2 nu) { return f(x, zeta, nu); }

inline SurfaceDensity shift_environment(const SurfaceDensity &f, Vec2 z) { return f.shifted(z); }

// ---- axiom validation -----------------------------------------------------

struct SamplePlan {
  int nx = 16;          // x samples per axis
  int nzeta = 16;
  int nnu = 16;
  double x_extent = 1.0; // x sampled on [-extent/2, extent/2)^2
};

struct AxiomResult {
  std::string name;
  bool structural = false;
  bool pass = true;
  double worst = 0.0; // largest violation, 0 when none
  std::size_t checked = 0;
};

struct AxiomReport {
  std::vector<AxiomResult> axioms;

  bool all_pass() const {
    for (const auto &a : axioms)
      if (!a.pass) return false;
    return true;
  }
  const AxiomResult &at(const std::string &name) const {
    for (const auto &a : axioms)
      if (a.name == name) return a;
    throw InvalidArgument("no axiom named " + name);
  }
};

namespace detail {
// Jump samples: log-spaced magnitudes in [0.1, 10] at golden-angle directions.
inline std::vector<Vec2> zeta_samples(int n) {
  std::vector<Vec2> out;
  const double golden = 2.399963229728653;
  for (int k = 0; k < n; ++k) {
    const double r = n == 1 ? 1.0 : std::pow(10.0, -1.0 + 2.0 * k / (n - 1));
    out.push_back(r * Vec2{std::cos(golden * k), std::sin(golden * k)});
  }
  return out;
}
inline std::vector<Vec2> nu_samples(int n) {
  std::vector<Vec2> out;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    out.push_back({std::cos(t), std::sin(t)});
  }
  return out;
}
} // namespace detail

inline AxiomReport validate_axioms(const SurfaceDensity &f, const SamplePlan &plan) {
  if (plan.nx < 1 || plan.nzeta < 1 || plan.nnu < 1) throw InvalidArgument("sample counts must be >= 1");
  const DensityParams &p = f.params();
  const auto zetas = detail::zeta_samples(plan.nzeta);
  const auto nus = detail::nu_samples(plan.nnu);

  AxiomResult f1{"f1", true, true, 0.0, 0};
  AxiomResult f2{"f2"}, f3{"f3"}, f4{"f4"}, f5{"f5"}, f6{"f6"}, f7{"f7"};
  const auto note = [](AxiomResult &r, double v) {
    ++r.checked;
    if (v > r.worst) r.worst = v;
  };

  std::vector<double> vals(zetas.size());
  for (int ix = 0; ix < plan.nx; ++ix) {
    for (int iy = 0; iy < plan.nx; ++iy) {
      const Vec2 x{plan.x_extent * ((ix + 0.5) / plan.nx - 0.5), plan.x_extent * ((iy + 0.5) / plan.nx - 0.5)};
      for (const Vec2 nu : nus) {
        for (std::size_t k = 0; k < zetas.size(); ++k) {
          vals[k] = f.eval(x, zetas[k], nu);
          note(f5, p.c1 - vals[k]);
          note(f6, vals[k] - p.c2);
          note(f7, std::abs(vals[k] - f.eval(x, -zetas[k], -nu)));
        }
        for (std::size_t i = 0; i < zetas.size(); ++i) {
          for (std::size_t j = 0; j < zetas.size(); ++j) {
            if (i == j) continue;
            const double fi = vals[i], fj = vals[j];
            const double ni = norm(zetas[i]), nj = norm(zetas[j]);
            note(f2, std::abs(fj - fi) - p.sigma(norm(zetas[j] - zetas[i])) * (fi + fj));
            if (ni <= nj) note(f3, fi - p.c0 * fj);
            if (p.c0 * ni <= nj) note(f4, fi - fj);
          }
        }
      }
    }
  }
  const double tol = 1e-12 * std::max(1.0, p.c2);
  AxiomReport rep;
  rep.axioms = {f1, f2, f3, f4, f5, f6, f7};
  for (auto &a : rep.axioms) {
    if (a.structural) continue;
    a.pass = a.worst <= tol;
  }
  return rep;
}

} // namespace rigidhom
