#include "xipinn/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <numbers>
#include <stdexcept>

#include "xipinn/error.hpp"

namespace xipinn {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Jet2> seed_point(int dim, const SpaceTime& p) {
  std::vector<Jet2> xt(dim + 1);
  for (int k = 0; k < dim; ++k) xt[k] = Jet2::variable(p.x[k], k);
  xt[dim] = Jet2::variable(p.t, dim);
  return xt;
}

// ---- Example 1: translating circle, continuous solution with flux balance.

Benchmark make_ex1() {
  Benchmark b;
  auto& s = b.spec;
  s.name = "ex1";
  s.kind = PdeKind::parabolic;
  s.spatial_dim = 2;
  s.domain = DomainShape::box(2, {-1, -1, 0}, {1, 1, 0});
  s.t_end = 1.0;
  s.beta_plus = 10.0;
  s.beta_minus = 1.0;
  s.jump_kind = JumpKind::zero;
  s.velocity = [](std::span<const Jet2> xt) {
    const Jet2& t = xt[2];
    return std::vector<Jet2>{-0.3 * kPi * sin(kPi * t), 0.3 * kPi * cos(kPi * t)};
  };

  const double radius = kPi / 6.0;
  auto rho = [](std::span<const Jet2> xt) {
    const Jet2& t = xt[2];
    return square(xt[0] - 0.3 * cos(kPi * t)) + square(xt[1] - 0.3 * sin(kPi * t));
  };
  const double bp = s.beta_plus, bm = s.beta_minus;
  b.exact.arity = 1;
  b.exact.u_plus = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{pow(rho(xt), 2.5) / radius / bp +
                             std::pow(radius, 4) * (1.0 / bm - 1.0 / bp)};
  };
  b.exact.u_minus = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{pow(rho(xt), 2.5) / radius / bm};
  };

  b.level_set.phi0 = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{square(xt[0] - 0.3) + square(xt[1]) - radius * radius};
  };
  b.level_set.analytic = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{rho(xt) - radius * radius};
  };
  b.level_set.interface = [=](std::span<const double> a, double t) {
    return Vec3{0.3 * std::cos(kPi * t) + radius * std::cos(a[0]),
                0.3 * std::sin(kPi * t) + radius * std::sin(a[0]), 0.0};
  };
  b.level_set.param_ranges = {{0.0, 2.0 * kPi}};
  return b;
}

// ---- Example 2: rotating and rising ellipsoid in 3D, discontinuous solution.

Benchmark make_ex2() {
  Benchmark b;
  auto& s = b.spec;
  s.name = "ex2";
  s.kind = PdeKind::parabolic;
  s.spatial_dim = 3;
  s.domain = DomainShape::box(3, {-1, -1, -1}, {1, 1, 1});
  s.t_end = 1.0;
  s.beta_plus = 10.0;
  s.beta_minus = 1.0;
  s.jump_kind = JumpKind::nonzero;
  s.velocity = [](std::span<const Jet2> xt) {
    return std::vector<Jet2>{-0.5 * kPi * xt[1], 0.5 * kPi * xt[0], Jet2(0.5)};
  };
  b.exact.arity = 1;
  b.exact.u_plus = [](std::span<const Jet2> xt) {
    return std::vector<Jet2>{exp(square(xt[0]) + square(xt[1]) + square(xt[2])) * cos(xt[3])};
  };
  b.exact.u_minus = [](std::span<const Jet2> xt) {
    return std::vector<Jet2>{0.1 * sin(xt[0]) * cos(xt[3]) * exp(xt[2]) * exp(-xt[3])};
  };
  auto ellipsoid = [](const Jet2& a, const Jet2& bb, const Jet2& c) {
    return square(a) / 0.49 + square(bb) / 0.25 + square(c) / 0.25 - 1.0;
  };
  b.level_set.phi0 = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{ellipsoid(xt[0], xt[1], xt[2] + 0.25)};
  };
  b.level_set.analytic = [=](std::span<const Jet2> xt) {
    const Jet2 ang = 0.5 * kPi * xt[3];
    const Jet2 c = cos(ang), sn = sin(ang);
    return std::vector<Jet2>{ellipsoid(xt[0] * c + xt[1] * sn, -(xt[0] * sn) + xt[1] * c,
                                       xt[2] - 0.5 * xt[3] + 0.25)};
  };
  b.level_set.interface = [](std::span<const double> a, double t) {
    const double bx = 0.7 * std::sin(a[0]) * std::cos(a[1]);
    const double by = 0.5 * std::sin(a[0]) * std::sin(a[1]);
    const double bz = 0.5 * std::cos(a[0]) - 0.25;
    const double ang = 0.5 * kPi * t;
    return Vec3{bx * std::cos(ang) - by * std::sin(ang), bx * std::sin(ang) + by * std::cos(ang),
                bz + 0.5 * t};
  };
  b.level_set.param_ranges = {{0.0, kPi}, {0.0, 2.0 * kPi}};
  return b;
}

// ---- Oseen exact solution shared by Examples 3 and 4.

void set_oseen_solution(Benchmark& b) {
  b.exact.arity = 3;
  b.exact.u_plus = [](std::span<const Jet2> xt) {
    const Jet2 ex = exp(xt[0]);
    const Jet2 arg = kPi * xt[1] + kPi * xt[2];
    return std::vector<Jet2>{ex * sin(arg), (1.0 / kPi) * ex * cos(arg),
                             sin(0.5 * kPi * xt[0]) * cos(0.5 * kPi * xt[1])};
  };
  b.exact.u_minus = [](std::span<const Jet2> xt) {
    const Jet2 ct = cos(xt[2]);
    return std::vector<Jet2>{cos(kPi * xt[0]) * sin(kPi * xt[1]) * ct,
                             -(sin(kPi * xt[0]) * cos(kPi * xt[1]) * ct),
                             cos(0.5 * kPi * xt[0]) * sin(0.5 * kPi * xt[1])};
  };
}

// ---- Example 3: star-shaped interface rotating in a disk.

Jet2 star_radius(const Jet2& angle) {
  return 0.3 * pow(2.5 + 1.5 * sin(5.0 * angle + 5.0 * kPi / 36.0), -0.25);
}

Benchmark make_ex3() {
  Benchmark b;
  auto& s = b.spec;
  s.name = "ex3";
  s.kind = PdeKind::oseen;
  s.spatial_dim = 2;
  s.domain = DomainShape::disk({0.5, 0.5, 0.0}, 0.5);
  s.t_end = 1.0;
  s.beta_plus = 1e-3;
  s.beta_minus = 1.0;
  s.jump_kind = JumpKind::nonzero;
  s.velocity = [](std::span<const Jet2> xt) {
    return std::vector<Jet2>{0.5 - xt[1], xt[0] - 0.5};
  };
  set_oseen_solution(b);

  auto star = [](const Jet2& dx, const Jet2& dy) {
    return sqrt(square(dx) + square(dy)) - star_radius(atan2(dy, dx));
  };
  b.level_set.phi0 = [=](std::span<const Jet2> xt) {
    return std::vector<Jet2>{star(xt[0] - 0.5, xt[1] - 0.5)};
  };
  // Rigid rotation about (0.5, 0.5) with unit angular speed.
  b.level_set.analytic = [=](std::span<const Jet2> xt) {
    const Jet2 dx = xt[0] - 0.5, dy = xt[1] - 0.5;
    const Jet2 c = cos(xt[2]), sn = sin(xt[2]);
    return std::vector<Jet2>{star(dx * c + dy * sn, -(dx * sn) + dy * c)};
  };
  b.level_set.interface = [](std::span<const double> a, double t) {
    const double r = star_radius(Jet2(a[0])).v;
    const double ang = a[0] + t;
    return Vec3{0.5 + r * std::cos(ang), 0.5 + r * std::sin(ang), 0.0};
  };
  b.level_set.param_ranges = {{0.0, 2.0 * kPi}};
  return b;
}

// ---- Example 4: disk stretched by a time-reversing vortex.

Benchmark make_ex4() {
  Benchmark b;
  auto& s = b.spec;
  s.name = "ex4";
  s.kind = PdeKind::oseen;
  s.spatial_dim = 2;
  s.domain = DomainShape::box(2, {0, 0, 0}, {1, 1, 0});
  s.t_end = 1.0;
  s.beta_plus = 1e-3;
  s.beta_minus = 1.0;
  s.jump_kind = JumpKind::nonzero;
  s.velocity = [](std::span<const Jet2> xt) {
    const Jet2 amp = cos(kPi * xt[2] / 3.0);
    return std::vector<Jet2>{amp * square(sin(kPi * xt[0])) * sin(2.0 * kPi * xt[1]),
                             -(amp * square(sin(kPi * xt[1])) * sin(2.0 * kPi * xt[0]))};
  };
  set_oseen_solution(b);
  b.level_set.phi0 = [](std::span<const Jet2> xt) {
    return std::vector<Jet2>{square(xt[0] - 0.5) + square(xt[1] - 0.75) - 0.15 * 0.15};
  };
  b.level_set.interface = [](std::span<const double> a, double) {
    return Vec3{0.5 + 0.15 * std::cos(a[0]), 0.75 + 0.15 * std::sin(a[0]), 0.0};
  };
  b.level_set.param_ranges = {{0.0, 2.0 * kPi}};
  return b;
}

}  // namespace

std::vector<FieldSample> sample_field(const Field& f, int dim, const SpaceTime& p) {
  const auto xt = seed_point(dim, p);
  const auto out = f(xt);
  std::vector<FieldSample> res(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    res[c].value = out[c].v;
    for (int k = 0; k < dim; ++k) {
      res[c].grad[k] = out[c].g[k];
      res[c].lap += out[c].hess(k, k);
    }
    res[c].dt = out[c].g[dim];
  }
  return res;
}

std::vector<double> field_values(const Field& f, int dim, const SpaceTime& p) {
  std::vector<Jet2> xt(dim + 1);
  for (int k = 0; k < dim; ++k) xt[k] = Jet2(p.x[k]);
  xt[dim] = Jet2(p.t);
  const auto out = f(xt);
  std::vector<double> res(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) res[c] = out[c].v;
  return res;
}

Region classify_region(double phi, double tol) {
  if (!(std::abs(phi) > tol))
    throw InterfacePointError("point lies on the interface (|phi| = " + std::to_string(phi) + ")");
  return phi > 0 ? Region::plus : Region::minus;
}

DomainShape DomainShape::box(int dim, Vec3 lo, Vec3 hi) {
  DomainShape d;
  d.kind = Kind::box;
  d.dim = dim;
  d.lo = lo;
  d.hi = hi;
  return d;
}

DomainShape DomainShape::disk(Vec3 center, double radius) {
  DomainShape d;
  d.kind = Kind::disk;
  d.dim = 2;
  d.center = center;
  d.radius = radius;
  d.lo = {center[0] - radius, center[1] - radius, 0.0};
  d.hi = {center[0] + radius, center[1] + radius, 0.0};
  return d;
}

bool DomainShape::contains(const Vec3& x) const {
  if (kind == Kind::disk) {
    const double dx = x[0] - center[0], dy = x[1] - center[1];
    return dx * dx + dy * dy <= radius * radius;
  }
  for (int k = 0; k < dim; ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

double DomainShape::boundary_distance(const Vec3& x) const {
  if (kind == Kind::disk) return std::abs(radius - std::hypot(x[0] - center[0], x[1] - center[1]));
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) d = std::min({d, std::abs(x[k] - lo[k]), std::abs(hi[k] - x[k])});
  return d;
}

void ProblemSpec::validate() const {
  if (spatial_dim != 2 && spatial_dim != 3)
    throw std::invalid_argument("ProblemSpec: spatial_dim must be 2 or 3");
  if (!(beta_plus > 0) || !(beta_minus > 0))
    throw std::invalid_argument("ProblemSpec: beta_plus and beta_minus must be positive");
  if (!(t_end > 0)) throw std::invalid_argument("ProblemSpec: t_end must be positive");
  if (!velocity) throw std::invalid_argument("ProblemSpec: velocity field missing");
  if (domain.dim != spatial_dim) throw std::invalid_argument("ProblemSpec: domain dim mismatch");
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"ex1", "ex2", "ex3", "ex4"};
  return names;
}

Benchmark benchmark_registry(std::string_view name) {
  Benchmark b;
  if (name == "ex1") b = make_ex1();
  else if (name == "ex2") b = make_ex2();
  else if (name == "ex3") b = make_ex3();
  else if (name == "ex4") b = make_ex4();
  else throw std::invalid_argument("unknown benchmark '" + std::string(name) + "' (expected ex1..ex4)");
  b.spec.validate();
  return b;
}

std::vector<double> manufacture_source(const ProblemSpec& spec, const ExactSolution& exact,
                                       const SpaceTime& p, Region region) {
  const int d = spec.spatial_dim;
  const auto u = exact.derivatives(region, d, p);
  const double beta = spec.beta(region);
  if (spec.kind == PdeKind::parabolic) return {u[0].dt - beta * u[0].lap};
  const auto vel = field_values(spec.velocity, d, p);
  const auto& pr = u[d];
  std::vector<double> f(d);
  for (int c = 0; c < d; ++c) {
    double adv = 0.0;
    for (int k = 0; k < d; ++k) adv += vel[k] * u[c].grad[k];
    f[c] = u[c].dt + adv - beta * u[c].lap + pr.grad[c];
  }
  return f;
}

double analytic_phi(const Benchmark& bench, const SpaceTime& p) {
  if (!bench.level_set.analytic)
    throw std::invalid_argument("benchmark " + bench.spec.name + " has no closed-form level set");
  return field_values(*bench.level_set.analytic, bench.spec.spatial_dim, p)[0];
}

std::vector<double> manufacture_source(const Benchmark& bench, const SpaceTime& p) {
  const Region r = classify_region(analytic_phi(bench, p));
  return manufacture_source(bench.spec, bench.exact, p, r);
}

std::vector<double> boundary_data(const ProblemSpec& spec, const ExactSolution& exact,
                                  const SpaceTime& p) {
  return field_values(exact.u_plus, spec.spatial_dim, p);
}

std::vector<double> initial_data(const ProblemSpec& spec, const ExactSolution& exact,
                                 const Vec3& x, Region region) {
  SpaceTime p{x, 0.0};
  auto v = field_values(exact.branch(region), spec.spatial_dim, p);
  v.resize(spec.equation_arity());
  return v;
}

std::vector<double> jump_value_data(const ProblemSpec& spec, const ExactSolution& exact,
                                    const SpaceTime& p) {
  const auto up = field_values(exact.u_plus, spec.spatial_dim, p);
  const auto um = field_values(exact.u_minus, spec.spatial_dim, p);
  std::vector<double> h(spec.equation_arity());
  for (std::size_t c = 0; c < h.size(); ++c) h[c] = up[c] - um[c];
  return h;
}

std::vector<double> jump_flux_data(const ProblemSpec& spec, const ExactSolution& exact,
                                   const SpaceTime& p, const Vec3& n) {
  const int d = spec.spatial_dim;
  const auto up = exact.derivatives(Region::plus, d, p);
  const auto um = exact.derivatives(Region::minus, d, p);
  auto dn = [&](const FieldSample& s) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) acc += s.grad[k] * n[k];
    return acc;
  };
  if (spec.kind == PdeKind::parabolic)
    return {spec.beta_plus * dn(up[0]) - spec.beta_minus * dn(um[0])};
  std::vector<double> h(d);
  for (int c = 0; c < d; ++c)
    h[c] = (spec.beta_plus * dn(up[c]) - up[d].value * n[c]) -
           (spec.beta_minus * dn(um[c]) - um[d].value * n[c]);
  return h;
}

}  // namespace xipinn
