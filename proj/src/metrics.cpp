#include "xipinn/metrics.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "xipinn/levelset.hpp"
#include "xipinn/parallel.hpp"

namespace xipinn {

namespace {

struct PointError {
  bool used = false;
  double sq0 = 0.0, sq1 = 0.0;
};

}  // namespace

ErrorReport error_norms(const Model& model, const Benchmark& bench, const LevelSetField& ls, ExtensionKind kind,
                        bool extended, std::span<const SpaceTime> points, double tol) {
  if (points.empty()) throw std::invalid_argument("error_norms: empty test set");
  const int d = bench.spec.spatial_dim;
  const int nc = bench.spec.equation_arity();
  std::vector<PointError> pe(points.size());
  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto probe = make_probe(ls, kind, points[i], extended, tol);
      if (!probe) continue;
      const auto got = model.derivatives(*probe, d, 1);
      const auto ref = bench.exact.derivatives(probe->region, d, points[i]);
      auto& q = pe[i];
      q.used = true;
      for (int c = 0; c < nc; ++c) {
        const double dv = got.u[c] - ref[c].value;
        q.sq0 += dv * dv;
        for (int k = 0; k < d; ++k) {
          const double dg = got.grad[c][k] - ref[c].grad[k];
          q.sq1 += dg * dg;
        }
      }
      q.sq1 += q.sq0;
    }
  });

  ErrorReport r;
  r.benchmark = bench.spec.name;
  double s0 = 0, s1 = 0;
  std::vector<double> t0, t1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!pe[i].used) {
      ++r.excluded;
      continue;
    }
    ++r.points;
    s0 += pe[i].sq0;
    s1 += pe[i].sq1;
    std::size_t j = 0;
    while (j < r.times.size() && r.times[j] != points[i].t) ++j;
    if (j == r.times.size()) {
      r.times.push_back(points[i].t);
      t0.push_back(0);
      t1.push_back(0);
      r.points_t.push_back(0);
    }
    t0[j] += pe[i].sq0;
    t1[j] += pe[i].sq1;
    ++r.points_t[j];
  }
  if (r.points == 0) throw std::invalid_argument("error_norms: every test point lies on the interface");
  r.e0 = std::sqrt(s0 / r.points);
  r.e1 = std::sqrt(s1 / r.points);
  for (std::size_t j = 0; j < r.times.size(); ++j) {
    r.e0_t.push_back(std::sqrt(t0[j] / r.points_t[j]));
    r.e1_t.push_back(std::sqrt(t1[j] / r.points_t[j]));
  }
  return r;
}

void export_grid(std::ostream& os, const Model& model, const Benchmark& bench, const LevelSetField& ls,
                 ExtensionKind kind, bool extended, std::span<const SpaceTime> points, double tol) {
  const int d = bench.spec.spatial_dim;
  const int nc = bench.spec.solution_arity();
  std::vector<std::vector<double>> rows(points.size());
  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto probe = make_probe(ls, kind, points[i], extended, tol);
      if (!probe) continue;
      const auto got = model.derivatives(*probe, d, 0);
      const auto ref = field_values(bench.exact.branch(probe->region), d, points[i]);
      auto& row = rows[i];
      for (int c = 0; c < nc; ++c) row.push_back(got.u[c]);
      for (int c = 0; c < nc; ++c) row.push_back(ref[c]);
      for (int c = 0; c < nc; ++c) row.push_back(std::abs(got.u[c] - ref[c]));
    }
  });
  os.precision(17);
  for (int k = 0; k < d; ++k) os << 'x' << k << ',';
  os << 't';
  for (const char* tag : {"u_pred", "u_exact", "abs_err"})
    for (int c = 0; c < nc; ++c) os << ',' << tag << c;
  os << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (rows[i].empty()) continue;
    for (int k = 0; k < d; ++k) os << points[i].x[k] << ',';
    os << points[i].t;
    for (double v : rows[i]) os << ',' << v;
    os << '\n';
  }
  if (!os) throw std::runtime_error("export_grid: write failed");
}

void write_report_csv(std::ostream& os, const ErrorReport& r) {
  os.precision(17);
  os << "benchmark,seed,time,points,excluded,e0,e1,runtime\n";
  os << r.benchmark << ',' << r.seed << ",all," << r.points << ',' << r.excluded << ',' << r.e0 << ',' << r.e1 << ','
     << r.runtime << '\n';
  for (std::size_t j = 0; j < r.times.size(); ++j)
    os << r.benchmark << ',' << r.seed << ',' << r.times[j] << ',' << r.points_t[j] << ",0," << r.e0_t[j] << ','
       << r.e1_t[j] << ",\n";
}

}  // namespace xipinn
