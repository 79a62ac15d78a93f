#include "xipinn/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "xipinn/jet.hpp"
#include "xipinn/parallel.hpp"
#include "xipinn/sampling.hpp"

namespace xipinn {

Vec3 rk4_advect(const Field& velocity, int dim, const Vec3& x0, double t0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("rk4_advect: steps must be >= 1");
  const double h = (t1 - t0) / steps;
  auto f = [&](const Vec3& x, double t) {
    std::vector<Jet2> xt(dim + 1);
    for (int k = 0; k < dim; ++k) xt[k] = Jet2(x[k]);
    xt[dim] = Jet2(t);
    const auto v = velocity(xt);
    Vec3 r{};
    for (int k = 0; k < dim; ++k) r[k] = v[k].v;
    return r;
  };
  auto axpy = [dim](const Vec3& x, double a, const Vec3& y) {
    Vec3 r = x;
    for (int k = 0; k < dim; ++k) r[k] += a * y[k];
    return r;
  };
  Vec3 x = x0;
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    const Vec3 k1 = f(x, t);
    const Vec3 k2 = f(axpy(x, 0.5 * h, k1), t + 0.5 * h);
    const Vec3 k3 = f(axpy(x, 0.5 * h, k2), t + 0.5 * h);
    const Vec3 k4 = f(axpy(x, h, k3), t + h);
    for (int k = 0; k < dim; ++k) {
      x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
      if (!std::isfinite(x[k])) throw NumericalError("rk4_advect: non-finite state at step " + std::to_string(s));
    }
  }
  return x;
}

TrajectoryTable build_trajectories(const Field& velocity, int dim, std::vector<Vec3> initial,
                                   std::vector<double> times, int steps_per_unit) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("trajectory times must start at 0");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw std::invalid_argument("trajectory times must increase");
  TrajectoryTable tab;
  tab.dim = dim;
  tab.initial = std::move(initial);
  tab.times = std::move(times);
  tab.positions.assign(tab.times.size(), tab.initial);
  const std::size_t n = tab.initial.size();
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = 1; j < tab.times.size(); ++j) {
        const double dt = tab.times[j] - tab.times[j - 1];
        const int steps = std::max(1, static_cast<int>(std::ceil(steps_per_unit * dt - 1e-9)));
        tab.positions[j][i] = rk4_advect(velocity, dim, tab.positions[j - 1][i], tab.times[j - 1], tab.times[j], steps);
      }
  });
  return tab;
}

namespace {

// Residual samples scale * (F(x, t) + x - target).
struct FlowSample {
  Vec3 x;
  double t;
  Vec3 base;  // x - target
  double scale;
};

std::vector<FlowSample> flow_samples(const TrajectoryTable& traj, std::size_t j0, std::size_t j1,
                                     std::span<const Vec3> anchors) {
  if (j1 < j0 || j1 >= traj.times.size()) throw std::invalid_argument("flow fit: bad time index range");
  const int d = traj.dim;
  const double T = traj.times[j0];
  std::vector<FlowSample> s;
  if (!anchors.empty()) {
    const double sa = std::sqrt(1.0 / anchors.size());
    for (const auto& a : anchors) s.push_back({a, T, Vec3{}, sa});
  }
  const std::size_t n_t = j1 - j0 + 1, n_g = traj.initial.size();
  if (n_g > 0) {
    const double st = std::sqrt(1.0 / (double(n_t) * n_g));
    for (std::size_t j = j0; j <= j1; ++j)
      for (std::size_t i = 0; i < n_g; ++i) {
        const Vec3& x = traj.at(j, i);
        const Vec3& target = traj.at(j0, i);
        Vec3 base{};
        for (int k = 0; k < d; ++k) base[k] = x[k] - target[k];
        s.push_back({x, traj.times[j], base, st});
      }
  }
  return s;
}

lm::Assembler flow_assembler(const std::vector<FlowSample>& samples, net::Mlp& work, int d) {
  lm::Assembler a;
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size()) * d;
  a.residual_count = [m] { return m; };
  a.eval = [&samples, &work, d](const Eigen::VectorXd& theta, Eigen::VectorXd& r, lm::RowMatrix* J) {
    work.params() = theta;
    const net::Mlp& net = work;
    if (J) J->setZero(r.size(), theta.size());
    parallel_for(samples.size(), [&](std::size_t b, std::size_t e) {
      net::JetTape tape;
      double in[4];
      for (std::size_t n = b; n < e; ++n) {
        const auto& s = samples[n];
        for (int k = 0; k < d; ++k) in[k] = s.x[k];
        in[d] = s.t;
        tape.record(net, std::span<const double>(in, d + 1), 0);
        for (int c = 0; c < d; ++c) {
          const Eigen::Index row = static_cast<Eigen::Index>(n) * d + c;
          r[row] = s.scale * (tape.value(c) + s.base[c]);
          if (J) {
            Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(d, 1);
            seed(c, 0) = s.scale;
            tape.pullback(seed, J->row(row).data());
          }
        }
      }
    });
  };
  return a;
}

}  // namespace

double flow_fit_loss(const FlowMapNet& map, const TrajectoryTable& traj, std::size_t j0, std::size_t j1,
                     std::span<const Vec3> anchors) {
  const auto samples = flow_samples(traj, j0, j1, anchors);
  net::Mlp work = map.net;
  auto a = flow_assembler(samples, work, traj.dim);
  Eigen::VectorXd r(a.residual_count());
  a.eval(map.net.params(), r, nullptr);
  return r.squaredNorm();
}

FlowFitResult fit_flow_map(const TrajectoryTable& traj, std::size_t j0, std::size_t j1,
                           std::span<const Vec3> anchors, FlowMapNet init, const lm::LmConfig& cfg) {
  if (init.net.input_dim() != traj.dim + 1 || init.net.output_dim() != traj.dim)
    throw std::invalid_argument("fit_flow_map: network must map (x, t) to a spatial vector");
  const auto samples = flow_samples(traj, j0, j1, anchors);
  net::Mlp work = init.net;
  auto a = flow_assembler(samples, work, traj.dim);
  FlowFitResult res;
  res.trace = lm::train(a, init.net.params(), cfg);
  res.map = std::move(init);
  res.map.net.params() = res.trace.params;
  res.map.t_start = traj.times[j0];
  res.map.t_end = traj.times[j1];
  res.loss = res.trace.final_loss;
  res.reached_target = res.loss <= cfg.loss_stop;
  return res;
}

JacobianFn flow_map_jacobian(const FlowMapNet& map) {
  return [&map](const Vec3& x, double t) {
    const int d = map.dim();
    double in[4];
    for (int k = 0; k < d; ++k) in[k] = x[k];
    in[d] = t;
    net::JetTape tape;
    tape.record(map.net, std::span<const double>(in, d + 1), 1);
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
    for (int c = 0; c < d; ++c)
      for (int k = 0; k < d; ++k) J(c, k) += tape.d(c, k);
    return J;
  };
}

std::vector<Vec3> grid_nodes(const DomainShape& d, double h) {
  if (!(h > 0)) throw std::invalid_argument("grid spacing must be positive");
  std::array<int, 3> n{1, 1, 1};
  for (int k = 0; k < d.dim; ++k) n[k] = static_cast<int>(std::floor((d.hi[k] - d.lo[k]) / h + 1e-9)) + 1;
  auto coord = [&](int k, int i) { return std::min(d.hi[k], d.lo[k] + i * h); };
  std::vector<Vec3> nodes;
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int l = 0; l < n[2]; ++l) {
        Vec3 x{coord(0, i), coord(1, j), d.dim == 3 ? coord(2, l) : 0.0};
        if (d.contains(x)) nodes.push_back(x);
      }
  return nodes;
}

double min_jacobian_det(const JacobianFn& jac, double t, std::span<const Vec3> nodes, int dim) {
  std::vector<double> mins(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Eigen::MatrixXd J = jac(nodes[i], t);
      mins[i] = J.topLeftCorner(dim, dim).determinant();
    }
  });
  double m = std::numeric_limits<double>::infinity();
  for (double v : mins) m = std::min(m, v);
  return m;
}

double min_jacobian_det(const FlowMapNet& map, double t, const DomainShape& domain, double h) {
  const auto nodes = grid_nodes(domain, h);
  return min_jacobian_det(flow_map_jacobian(map), t, nodes, map.dim());
}

AdaptiveSteppingError::AdaptiveSteppingError(double t, double det)
    : NumericalError("adaptive time stepping: a single step to t = " + std::to_string(t) +
                     " already gives Jacobian determinant " + std::to_string(det) +
                     " (time grid too coarse for the flow)"),
      t_(t) {}

AdaptiveResult adaptive_time_stepping(SubMapTrainer& trainer, std::span<const double> times, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
  if (times.size() < 2) throw std::invalid_argument("time grid needs at least two times");
  const std::size_t N = times.size() - 1;
  AdaptiveResult res;
  std::size_t s = 0;
  std::ptrdiff_t last_good = -1;
  IntervalRecord cur, good;
  trainer.begin(s);
  cur = {times[s], times[s], 0.0, 0.0, 0};
  std::size_t i = s;
  while (i < N) {
    ++i;
    const double loss = trainer.fit(s, i);
    const double det = trainer.min_det(s, i);
    ++cur.refits;
    if (det > delta) {
      trainer.keep();
      last_good = static_cast<std::ptrdiff_t>(i);
      good = cur;
      good.t_end = times[i];
      good.loss = loss;
      good.min_det = det;
      continue;
    }
    if (last_good < 0) throw AdaptiveSteppingError(times[i], det);
    std::ostringstream ev;
    ev << "split at t=" << times[last_good] << " (det " << det << " <= " << delta << " at t=" << times[i] << ")";
    res.events.push_back(ev.str());
    trainer.freeze(s, static_cast<std::size_t>(last_good));
    res.intervals.push_back(good);
    s = static_cast<std::size_t>(last_good);
    last_good = -1;
    trainer.begin(s);
    cur = {times[s], times[s], 0.0, 0.0, 0};
    i = s;
  }
  trainer.freeze(s, N);
  res.intervals.push_back(good);
  return res;
}

FlowMapTrainer::FlowMapTrainer(const TrajectoryTable& traj, std::vector<Vec3> anchors, DomainShape domain, Options opt)
    : traj_(traj), anchors_(std::move(anchors)), domain_(domain), opt_(std::move(opt)) {
  nodes_ = grid_nodes(domain_, opt_.grid_spacing);
}

void FlowMapTrainer::begin(std::size_t s) {
  current_ = make_flow_map(traj_.dim, opt_.hidden, opt_.seed + static_cast<std::uint64_t>(begun_++),
                           traj_.times[s], traj_.times[s]);
}

double FlowMapTrainer::fit(std::size_t s, std::size_t i) {
  auto res = fit_flow_map(traj_, s, i, anchors_, current_, opt_.lm);
  current_ = std::move(res.map);
  current_loss_ = res.loss;
  return res.loss;
}

double FlowMapTrainer::min_det(std::size_t s, std::size_t i) {
  const auto jac = flow_map_jacobian(current_);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = s; j <= i; ++j) m = std::min(m, min_jacobian_det(jac, traj_.times[j], nodes_, traj_.dim));
  return m;
}

void FlowMapTrainer::keep() {
  kept_ = current_;
  kept_loss_ = current_loss_;
}

void FlowMapTrainer::freeze(std::size_t s, std::size_t e) {
  FlowMapNet m = kept_;
  m.t_start = traj_.times[s];
  m.t_end = traj_.times[e];
  frozen_.push_back(std::move(m));
  frozen_losses_.push_back(kept_loss_);
}

LevelSetLearnResult learn_level_set(const Benchmark& bench, const LevelSetLearnConfig& cfg) {
  const int dim = bench.spec.spatial_dim;
  const double T = bench.spec.t_end;
  if (cfg.n_times < 1) throw std::invalid_argument("levelset.n_times must be >= 1");
  auto initial = sample_initial_interface(bench, cfg.n_interface, cfg.seed);
  const auto anchors = sample_domain(bench.spec.domain, cfg.n_anchor, cfg.seed, SampleStream::anchor);
  LevelSetLearnResult out;
  out.trajectories = build_trajectories(bench.spec.velocity, dim, std::move(initial),
                                        equispaced_times(T, cfg.n_times + 1), cfg.rk_steps_per_unit);
  const auto& traj = out.trajectories;
  FlowMapTrainer::Options opt{cfg.hidden, cfg.seed, cfg.grid_spacing, cfg.lm};
  FlowMapTrainer trainer(traj, anchors, bench.spec.domain, opt);
  if (cfg.adaptive) {
    out.steps = adaptive_time_stepping(trainer, traj.times, cfg.delta);
  } else {
    const std::size_t N = traj.times.size() - 1;
    trainer.begin(0);
    const double loss = trainer.fit(0, N);
    const double det = trainer.min_det(0, N);
    trainer.keep();
    trainer.freeze(0, N);
    out.steps.intervals.push_back({0.0, T, loss, det, 1});
  }
  out.field = LevelSetField::neural(bench.level_set.phi0, dim, trainer.frozen());
  out.flow_error = flowmap_error(out.field, traj);
  return out;
}

double flowmap_error(const LevelSetField& ls, const TrajectoryTable& traj) {
  const std::size_t nt = traj.times.size(), ng = traj.initial.size();
  if (nt == 0 || ng == 0) throw std::invalid_argument("flowmap_error: empty trajectory table");
  std::vector<double> rows(nt, 0.0);
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j)
      for (std::size_t i = 0; i < ng; ++i) {
        const Vec3 y = ls.pull_back(traj.at(j, i), traj.times[j]);
        for (int k = 0; k < traj.dim; ++k) rows[j] += std::pow(y[k] - traj.initial[i][k], 2);
      }
  });
  double s = 0.0;
  for (double v : rows) s += v;
  return s / (double(nt) * ng);
}

double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b, int dim) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff_distance: empty point set");
  auto directed = [dim](std::span<const Vec3> p, std::span<const Vec3> q) {
    std::vector<double> best(p.size());
    parallel_for(p.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& y : q) {
          double d2 = 0.0;
          for (int k = 0; k < dim; ++k) d2 += (p[i][k] - y[k]) * (p[i][k] - y[k]);
          m = std::min(m, d2);
        }
        best[i] = m;
      }
    });
    return *std::max_element(best.begin(), best.end());
  };
  return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

std::vector<Vec3> zero_set_2d(const std::function<double(const Vec3&)>& f, const DomainShape& d, int res) {
  if (res < 1) throw std::invalid_argument("zero_set_2d: resolution must be >= 1");
  const double hx = (d.hi[0] - d.lo[0]) / res, hy = (d.hi[1] - d.lo[1]) / res;
  auto node = [&](int i, int j) { return Vec3{d.lo[0] + i * hx, d.lo[1] + j * hy, 0.0}; };
  std::vector<double> v((res + 1) * (res + 1));
  parallel_for(res + 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (int j = 0; j <= res; ++j) v[i * (res + 1) + j] = f(node(static_cast<int>(i), j));
  });
  auto val = [&](int i, int j) { return v[i * (res + 1) + j]; };
  std::vector<Vec3> out;
  auto refine = [&](Vec3 a, Vec3 b, double fa, double fb) {
    // regula falsi with Illinois modification
    int side = 0;
    Vec3 c = a;
    for (int it = 0; it < 40; ++it) {
      const double w = fa / (fa - fb);
      for (int k = 0; k < 2; ++k) c[k] = a[k] + w * (b[k] - a[k]);
      const double fc = f(c);
      if (fc == 0.0 || std::abs(b[0] - a[0]) + std::abs(b[1] - a[1]) < 1e-14) break;
      if ((fc > 0) == (fa > 0)) {
        a = c;
        fa = fc;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = c;
        fb = fc;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
    }
    if (d.contains(c)) out.push_back(c);
  };
  for (int i = 0; i <= res; ++i)
    for (int j = 0; j <= res; ++j) {
      const double f0 = val(i, j);
      if (i < res && (f0 > 0) != (val(i + 1, j) > 0)) refine(node(i, j), node(i + 1, j), f0, val(i + 1, j));
      if (j < res && (f0 > 0) != (val(i, j + 1) > 0)) refine(node(i, j), node(i, j + 1), f0, val(i, j + 1));
    }
  return out;
}

}  // namespace xipinn
