#include "xipinn/sampling.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "xipinn/flowmap.hpp"
#include "xipinn/rng.hpp"

namespace xipinn {

void SamplePlan::validate() const {
  if (n_interior < 1 || n_boundary < 1 || n_initial < 1 || n_interface < 1)
    throw std::invalid_argument("sample counts must be >= 1");
  if (n_interface_times < 1) throw std::invalid_argument("n_interface_times must be >= 1");
}

namespace {

Philox stream(std::uint64_t seed, SampleStream s) { return Philox(seed, static_cast<std::uint64_t>(s)); }

Vec3 draw_point(const DomainShape& d, Philox& rng) {
  for (;;) {
    Vec3 x{};
    for (int k = 0; k < d.dim; ++k) x[k] = rng.uniform(d.lo[k], d.hi[k]);
    if (d.kind == DomainShape::Kind::box || d.contains(x)) return x;
  }
}

}  // namespace

std::vector<Vec3> sample_domain(const DomainShape& domain, int n, std::uint64_t seed, SampleStream s) {
  auto rng = stream(seed, s);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = draw_point(domain, rng);
  return pts;
}

InteriorSet sample_interior(const DomainShape& domain, double t_end, int n, std::uint64_t seed) {
  auto rng = stream(seed, SampleStream::interior);
  InteriorSet s;
  s.points.resize(n);
  for (auto& p : s.points) {
    p.x = draw_point(domain, rng);
    p.t = rng.uniform(0.0, t_end);
  }
  return s;
}

BoundarySet sample_boundary(const DomainShape& d, double t_end, int n, std::uint64_t seed) {
  auto rng = stream(seed, SampleStream::boundary);
  BoundarySet s;
  s.points.resize(n);
  if (d.kind == DomainShape::Kind::disk) {
    for (auto& p : s.points) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p.x = {d.center[0] + d.radius * std::cos(a), d.center[1] + d.radius * std::sin(a), 0.0};
      p.t = rng.uniform(0.0, t_end);
    }
    return s;
  }
  // face (axis k, side) has measure prod_{j != k} (hi_j - lo_j)
  std::vector<double> measure;
  for (int k = 0; k < d.dim; ++k) {
    double m = 1.0;
    for (int j = 0; j < d.dim; ++j)
      if (j != k) m *= d.hi[j] - d.lo[j];
    measure.push_back(m);
    measure.push_back(m);
  }
  double total = 0.0;
  for (double m : measure) total += m;
  for (auto& p : s.points) {
    double u = rng.uniform(0.0, total);
    std::size_t f = 0;
    while (f + 1 < measure.size() && u >= measure[f]) u -= measure[f++];
    const int axis = static_cast<int>(f / 2);
    for (int k = 0; k < d.dim; ++k) p.x[k] = rng.uniform(d.lo[k], d.hi[k]);
    p.x[axis] = f % 2 ? d.hi[axis] : d.lo[axis];
    p.t = rng.uniform(0.0, t_end);
  }
  return s;
}

InitialSet sample_initial(const DomainShape& domain, int n, std::uint64_t seed) {
  auto rng = stream(seed, SampleStream::initial);
  InitialSet s;
  s.points.resize(n);
  for (auto& p : s.points) p = {draw_point(domain, rng), 0.0};
  return s;
}

std::vector<Vec3> sample_initial_interface(const Benchmark& bench, int n, std::uint64_t seed) {
  auto rng = stream(seed, SampleStream::interface);
  std::vector<Vec3> pts(n);
  std::vector<double> a(bench.level_set.param_ranges.size());
  for (auto& x : pts) {
    for (std::size_t k = 0; k < a.size(); ++k)
      a[k] = rng.uniform(bench.level_set.param_ranges[k].first, bench.level_set.param_ranges[k].second);
    x = bench.level_set.interface(a, 0.0);
  }
  return pts;
}

std::vector<double> equispaced_times(double t_end, int n) {
  if (n < 1) throw std::invalid_argument("equispaced_times: n must be >= 1");
  if (n == 1) return {t_end};
  std::vector<double> t(n);
  for (int j = 0; j < n; ++j) t[j] = t_end * j / (n - 1);
  return t;
}

InterfaceSet sample_interface(const Benchmark& bench, const LevelSetField& ls, int n_per_time,
                              std::span<const double> times, std::uint64_t seed, int rk_steps_per_unit) {
  const int dim = bench.spec.spatial_dim;
  const bool closed_form = ls.is_analytic() && bench.level_set.analytic.has_value();
  auto rng = stream(seed, SampleStream::interface);
  const auto& ranges = bench.level_set.param_ranges;
  std::vector<double> a(ranges.size());
  InterfaceSet s;
  for (double t : times) {
    for (int i = 0; i < n_per_time; ++i) {
      for (int attempt = 0;; ++attempt) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = rng.uniform(ranges[k].first, ranges[k].second);
        Vec3 x;
        if (closed_form) {
          x = bench.level_set.interface(a, t);
        } else {
          const Vec3 x0 = bench.level_set.interface(a, 0.0);
          const int steps = std::max(1, static_cast<int>(std::ceil(rk_steps_per_unit * t)));
          x = t > 0 ? rk4_advect(bench.spec.velocity, dim, x0, 0.0, t, steps) : x0;
        }
        const SpaceTime p{x, t};
        const auto g = ls.eval(p).grad;
        double nn = 0.0;
        for (int k = 0; k < dim; ++k) nn += g[k] * g[k];
        nn = std::sqrt(nn);
        if (nn > 1e-10) {
          Vec3 n{};
          for (int k = 0; k < dim; ++k) n[k] = g[k] / nn;
          s.points.push_back(p);
          s.normals.push_back(n);
          break;
        }
        if (attempt > 1000) throw std::runtime_error("sample_interface: level-set gradient vanishes on the interface");
      }
    }
  }
  return s;
}

SampleSets sample_all(const Benchmark& bench, const LevelSetField& ls, const SamplePlan& plan) {
  plan.validate();
  const auto& d = bench.spec.domain;
  const double T = bench.spec.t_end;
  SampleSets s;
  s.interior = sample_interior(d, T, plan.n_interior, plan.seed);
  s.boundary = sample_boundary(d, T, plan.n_boundary, plan.seed);
  s.initial = sample_initial(d, plan.n_initial, plan.seed);
  const int n_times = std::min(plan.n_interface_times, plan.n_interface);
  const int per_time = std::max(1, static_cast<int>(std::lround(double(plan.n_interface) / n_times)));
  const auto times = equispaced_times(T, n_times);
  s.interface = sample_interface(bench, ls, per_time, times, plan.seed);
  return s;
}

std::vector<SpaceTime> test_grid(const DomainShape& d, double t_end, int resolution, int n_times) {
  if (resolution < 2) throw std::invalid_argument("test_grid: resolution must be >= 2");
  const auto times = equispaced_times(t_end, n_times);
  auto coord = [&](int k, int i) {
    return i == resolution - 1 ? d.hi[k] : d.lo[k] + (d.hi[k] - d.lo[k]) * i / (resolution - 1);
  };
  std::vector<SpaceTime> pts;
  const int nz = d.dim == 3 ? resolution : 1;
  for (double t : times)
    for (int i = 0; i < resolution; ++i)
      for (int j = 0; j < resolution; ++j)
        for (int l = 0; l < nz; ++l) {
          Vec3 x{coord(0, i), coord(1, j), d.dim == 3 ? coord(2, l) : 0.0};
          if (d.kind == DomainShape::Kind::disk && !d.contains(x)) continue;
          pts.push_back({x, t});
        }
  return pts;
}

void write_points_csv(std::ostream& os, int dim, const SampleSets& sets) {
  os.precision(17);
  for (int k = 0; k < dim; ++k) os << 'x' << k << ',';
  os << "t,set\n";
  auto dump = [&](const std::vector<SpaceTime>& pts, const char* tag) {
    for (const auto& p : pts) {
      for (int k = 0; k < dim; ++k) os << p.x[k] << ',';
      os << p.t << ',' << tag << '\n';
    }
  };
  dump(sets.interior.points, "interior");
  dump(sets.boundary.points, "boundary");
  dump(sets.initial.points, "initial");
  dump(sets.interface.points, "interface");
}

}  // namespace xipinn
