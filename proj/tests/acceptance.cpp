// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "xipinn/experiment.hpp"
#include "xipinn/jet.hpp"
#include "xipinn/levelset.hpp"

using namespace xipinn;
using xipinn::testing::fd_hessian;
using xipinn::testing::fd_jacobian;
using xipinn::testing::random_net;
using xipinn::testing::random_vector;
using xipinn::testing::rel_err;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with a short description.
struct Check {
  Outcome out;
  int failures = 0;
  void operator()(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ < 5) out.detail += (out.detail.empty() ? "" : "; ") + what;
    out.pass = false;
  }
  Outcome done(const std::string& summary) {
    if (out.pass) out.detail = summary;
    else if (failures > 5) out.detail += "; ... (" + std::to_string(failures) + " failures)";
    return out;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool monotone(const lm::LmTrace& tr) {
  double last = tr.initial_loss;
  for (const auto& s : tr.steps)
    if (s.accepted) {
      if (s.loss > last) return false;
      last = s.loss;
    }
  return true;
}

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// 1. network derivative jets against central differences
Outcome derivative_jets() {
  Check c;
  double worst1 = 0, worst2 = 0, worstp = 0, worsts = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n_in = 2 + trial % 3, n_out = 1 + trial % 2;
    const auto m = random_net({n_in, 8, 6, n_out}, 1000 + trial);
    const Eigen::VectorXd x = random_vector(n_in, 5000 + trial);
    const auto jet = net::forward_jet(m, as_span(x), {.order = 2, .param_value = true, .param_dinputs = true});
    auto f = [&](const Eigen::VectorXd& y) { return xipinn::testing::eval_net(m, y); };
    const double e1 = rel_err(jet.d_inputs, fd_jacobian(f, x, 1e-5));
    worst1 = std::max(worst1, e1);
    c(e1 <= 1e-6, "first derivative trial " + std::to_string(trial) + " err " + fmt(e1));
    for (int o = 0; o < n_out; ++o) {
      auto fo = [&](const Eigen::VectorXd& y) { return xipinn::testing::eval_net(m, y)[o]; };
      const double e2 = rel_err(jet.hessian[o], fd_hessian(fo, x, 1e-4));
      const double sym = (jet.hessian[o] - jet.hessian[o].transpose()).cwiseAbs().maxCoeff();
      worst2 = std::max(worst2, e2);
      worsts = std::max(worsts, sym);
      c(e2 <= 1e-4, "hessian trial " + std::to_string(trial) + " err " + fmt(e2));
      c(sym <= 1e-12, "hessian asymmetry " + fmt(sym));
    }
    Eigen::MatrixXd fd(n_out, m.param_count());
    for (Eigen::Index k = 0; k < m.param_count(); ++k) {
      net::Mlp a = m, b = m;
      a.params()[k] += 1e-6;
      b.params()[k] -= 1e-6;
      fd.col(k) = (xipinn::testing::eval_net(a, x) - xipinn::testing::eval_net(b, x)) / 2e-6;
    }
    const double ep = rel_err(jet.dparam_value, fd);
    worstp = std::max(worstp, ep);
    c(ep <= 1e-6, "parameter gradient trial " + std::to_string(trial) + " err " + fmt(ep));
  }
  return c.done("100 trials; worst rel err d1 " + fmt(worst1) + ", d2 " + fmt(worst2) + ", dtheta " + fmt(worstp) +
                ", asymmetry " + fmt(worsts));
}

// 2. chain-rule assembly of (x, t) derivatives of U(x, t, z(x, t))
Outcome chain_rule() {
  Check c;
  const auto b1 = benchmark_registry("ex1"), b2 = benchmark_registry("ex2");
  const auto ls1 = analytic_level_set(b1), ls2 = analytic_level_set(b2);
  Philox rng(77, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& ls = trial % 4 == 3 ? ls2 : ls1;
    const int dim = ls.dim();
    const auto kind = trial % 2 ? ExtensionKind::indicator : ExtensionKind::abs_level_set;
    const auto m = random_net({dim + 2, 8, 8, 1}, 300 + trial, net::Activation::tanh, 0.8);
    SpaceTime p;
    do {
      for (int k = 0; k < dim; ++k) p.x[k] = rng.uniform(-0.9, 0.9);
      p.t = rng.uniform(0.1, 0.9);
    } while (std::abs(ls.value(p)) < 0.05);
    const auto probe = *make_probe(ls, kind, p, true);
    const auto d = NetModel(m).derivatives(probe, dim, 2);
    auto g = [&](const SpaceTime& q) {
      const double phi = ls.value(q);
      std::vector<double> in(dim + 2);
      for (int k = 0; k < dim; ++k) in[k] = q.x[k];
      in[dim] = q.t;
      in[dim + 1] = kind == ExtensionKind::indicator ? (phi > 0 ? 1.0 : -1.0) : std::abs(phi);
      return m(in)[0];
    };
    const double h = 1e-4, g0 = g(p);
    Eigen::VectorXd grad(dim), grad_fd(dim);
    double lap_fd = 0;
    for (int k = 0; k < dim; ++k) {
      SpaceTime a = p, b = p;
      a.x[k] += h;
      b.x[k] -= h;
      grad_fd[k] = (g(a) - g(b)) / (2 * h);
      lap_fd += (g(a) - 2 * g0 + g(b)) / (h * h);
      grad[k] = d.grad[0][k];
    }
    SpaceTime a = p, b = p;
    a.t += h;
    b.t -= h;
    const double ut_fd = (g(a) - g(b)) / (2 * h);
    const double eg = rel_err(grad, grad_fd);
    const double et = std::abs(d.u_t[0] - ut_fd) / std::max(std::abs(ut_fd), 1e-2);
    const double el = std::abs(d.lap[0] - lap_fd) / std::max(std::abs(lap_fd), 1e-1);
    worst = std::max({worst, eg, et, el});
    c(eg <= 1e-4 && et <= 1e-4 && el <= 1e-4, "trial " + std::to_string(trial) + " (" + to_string(kind) + ") err " +
                                                   fmt(std::max({eg, et, el})));
  }
  return c.done("100 composites, both kinds, 2D and 3D; worst rel err " + fmt(worst));
}

// 3. manufactured data closes every residual block
Outcome exact_oracle() {
  Check c;
  double worst = 0;
  int rows = 0;
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    const auto b = benchmark_registry(name);
    const auto ls = analytic_level_set(b);
    SamplePlan plan;
    plan.n_interior = 1000;
    plan.n_boundary = 400;
    plan.n_initial = 300;
    plan.n_interface = 200;
    plan.seed = 12;
    const auto sets = sample_all(b, ls, plan);
    ResidualOptions opt;
    opt.weights.mean_square = false;  // unit scales: rows are per-point residuals
    for (auto kind : {ExtensionKind::indicator, ExtensionKind::abs_level_set}) {
      const auto sys = build_xi_system(b, ls, kind, sets, opt);
      Eigen::VectorXd r;
      sys.evaluate(ExactModel(b.exact), r);
      for (const auto& blk : sys.blocks) {
        const double m = r.segment(blk.first_row, blk.rows).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, m);
        c(m <= 1e-8, std::string(name) + " " + block_name(blk.block) + " max " + fmt(m));
      }
      rows += static_cast<int>(r.size());
    }
  }
  return c.done(std::to_string(rows) + " rows over ex1-ex3, both extensions; max |r| " + fmt(worst));
}

// 4. RK4 convergence order on the ex1 field; the velocity depends on t only,
// so x(t) = x0 + 0.3 (cos(pi t) - 1, sin(pi t)).
Outcome rk4_order() {
  const auto b = benchmark_registry("ex1");
  const double pi = std::numbers::pi;
  auto err = [&](int steps) {
    double worst = 0;
    for (const Vec3 x0 : {Vec3{0.6, 0, 0}, Vec3{-0.4, 0.7, 0}, Vec3{0.1, -0.5, 0}}) {
      const Vec3 x = rk4_advect(b.spec.velocity, 2, x0, 0.0, 1.0, steps);
      worst = std::max(worst, std::hypot(x[0] - (x0[0] + 0.3 * (std::cos(pi) - 1)), x[1] - (x0[1] + 0.3 * std::sin(pi))));
    }
    return worst;
  };
  const double e10 = err(10), e20 = err(20), e40 = err(40);
  const double o1 = std::log2(e10 / e20), o2 = std::log2(e20 / e40);
  Outcome out;
  out.pass = std::min(o1, o2) >= 3.9;
  out.detail = "errors " + fmt(e10) + ", " + fmt(e20) + ", " + fmt(e40) + "; observed orders " + fmt(o1) + ", " + fmt(o2);
  return out;
}

// 5. LM sanity
Outcome lm_sanity() {
  Check c;
  lm::Assembler lin;
  Eigen::MatrixXd A(5, 3);
  A << 1, 2, 0, 0, 1, 1, 3, 0, 1, 1, 1, 1, 2, -1, 0;
  Eigen::VectorXd bv(5);
  bv << 1, -2, 0.5, 3, 1;
  lin.residual_count = [] { return Eigen::Index(5); };
  lin.eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, lm::RowMatrix* J) {
    r = A * x - bv;
    if (J) *J = A;
  };
  lm::LmConfig gn;
  gn.pin_lambda = true;
  gn.lambda_init = 0;
  gn.floor = 0;
  gn.loss_stop = 0;
  gn.max_iters = 1;
  const auto t1 = lm::train(lin, Eigen::VectorXd::Zero(3), gn);
  const Eigen::VectorXd ref = A.colPivHouseholderQr().solve(bv);
  const double e = (t1.params - ref).norm() / ref.norm();
  c(t1.steps.size() == 1 && e <= 1e-13, "one-step linear solve err " + fmt(e));

  lm::Assembler rb;
  rb.residual_count = [] { return Eigen::Index(2); };
  rb.eval = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, lm::RowMatrix* J) {
    r.resize(2);
    r << x[0] - 1.0, 10.0 * (x[1] - x[0] * x[0]);
    if (J) {
      J->resize(2, 2);
      *J << 1.0, 0.0, -20.0 * x[0], 10.0;
    }
  };
  lm::LmConfig cfg;
  cfg.loss_stop = 1e-12;
  cfg.max_iters = 200;
  const auto t2 = lm::train(rb, Eigen::Vector2d(-1.2, 1.0), cfg);
  c(t2.final_loss <= 1e-12 && t2.steps.size() <= 200,
    "Rosenbrock loss " + fmt(t2.final_loss) + " after " + std::to_string(t2.steps.size()));

  // a small network trace
  const auto b = benchmark_registry("ex1");
  const auto ls = analytic_level_set(b);
  SamplePlan plan;
  plan.n_interior = 200;
  plan.n_boundary = 60;
  plan.n_initial = 40;
  plan.n_interface = 30;
  const auto sys = build_xi_system(b, ls, ExtensionKind::abs_level_set, sample_all(b, ls, plan));
  auto net = net::init_network({4, 10, 10, 1}, 3);
  net::Mlp work = net;
  lm::LmConfig nc;
  nc.max_iters = 100;
  const auto t3 = lm::train(sys.assembler(work), net.params(), nc);
  for (const auto* tr : {&t1, &t2, &t3}) c(monotone(*tr), "accepted losses increase");
  return c.done("GN step err " + fmt(e) + "; Rosenbrock loss " + fmt(t2.final_loss) + " in " +
                std::to_string(t2.steps.size()) + " iterations; 3 traces monotone");
}

// 6. NTK structure
Outcome ntk_structure() {
  Check c;
  lm::RowMatrix G(2, 1);
  G << 1.0, 2.0;
  const auto K = ntk_matrix(G);
  const auto ev = ntk_spectrum(K);
  const auto m = convergence_metrics({K}, {2});
  c(std::abs(ev[0] - 5) <= 1e-12 && std::abs(ev[1]) <= 1e-12, "toy eigenvalues " + fmt(ev[0]) + ", " + fmt(ev[1]));
  c(std::abs(m.c_total - 2.5) <= 1e-15, "toy c_total " + fmt(m.c_total));
  c(K(0, 1) == 2 && K(1, 1) == 4 && K(0, 0) == 1, "toy kernel entries");
  const auto cmp = ntk_compare(benchmark_registry("ex1"), 32, {200, 80, 40, 80}, 5);
  for (const auto* rep : {&cmp.xi, &cmp.vanilla}) {
    for (const auto& op : rep->operators) {
      c((op.kernel - op.kernel.transpose()).norm() == 0.0, rep->model + " " + op.name + " not symmetric");
      c(op.eigenvalues[op.eigenvalues.size() - 1] >= -1e-8 * op.eigenvalues[0], rep->model + " " + op.name + " not PSD");
    }
    const auto& f = rep->full_eigenvalues;
    c(f[f.size() - 1] >= -1e-8 * f[0], rep->model + " full kernel not PSD");
  }
  return c.done("toy eigenvalues {" + fmt(ev[0]) + ", " + fmt(ev[1]) + "}, c_total " + fmt(m.c_total) +
                "; width-32 kernels symmetric and PSD");
}

// 7. Jacobian monitor on a contraction flow, det = ((1 - t)/(1 - T_s))^2
class Contraction : public SubMapTrainer {
 public:
  explicit Contraction(std::vector<double> times) : times_(std::move(times)) {
    nodes_ = grid_nodes(DomainShape::box(2, {0, 0, 0}, {1, 1, 0}), 1.0 / 16);
  }
  void begin(std::size_t s) override { start_ = times_[s]; }
  double fit(std::size_t, std::size_t) override { return 0.0; }
  double min_det(std::size_t s, std::size_t i) override {
    const double ts = start_;
    JacobianFn jac = [ts](const Vec3&, double t) {
      return Eigen::MatrixXd(((1 - t) / (1 - ts)) * Eigen::MatrixXd::Identity(2, 2));
    };
    double m = 1e300;
    for (std::size_t j = s; j <= i; ++j) m = std::min(m, min_jacobian_det(jac, times_[j], nodes_, 2));
    return m;
  }
  void keep() override {}
  void freeze(std::size_t s, std::size_t e) override { frozen.push_back({times_[s], times_[e]}); }
  std::vector<std::pair<double, double>> frozen;

 private:
  std::vector<double> times_;
  std::vector<Vec3> nodes_;
  double start_ = 0;
};

Outcome jacobian_monitor() {
  std::vector<double> times;
  for (int j = 0; j <= 16; ++j) times.push_back(j / 20.0);
  Contraction tr(times);
  adaptive_time_stepping(tr, times, 0.3);
  const double t_star = 1 - std::sqrt(0.3);
  Outcome out;
  out.pass = !tr.frozen.empty() && std::abs(tr.frozen[0].second - t_star) <= 0.05 && tr.frozen[0].second <= t_star;
  out.detail = "analytic split " + fmt(t_star) + ", detected after " + (tr.frozen.empty() ? "-" : fmt(tr.frozen[0].second)) +
               " (grid step 0.05)";
  return out;
}

ExperimentConfig ex1_config(std::vector<int> hidden, int interior, int boundary, int initial, int interface, int iters) {
  ExperimentConfig cfg;
  cfg.benchmark = "ex1";
  cfg.hidden = std::move(hidden);
  cfg.samples.n_interior = interior;
  cfg.samples.n_boundary = boundary;
  cfg.samples.n_initial = initial;
  cfg.samples.n_interface = interface;
  cfg.lm.max_iters = iters;
  cfg.lm.loss_stop = 1e-13;
  validate_config(cfg);
  return cfg;
}

// 8. Example 1 desk-scale training
Outcome ex1_training() {
  const auto cfg = ex1_config({32, 32, 32}, 2000, 400, 300, 100, 1000);
  const auto b = benchmark_registry("ex1");
  const auto r = train_experiment(cfg, b, analytic_level_set(b));
  Outcome out;
  out.pass = r.report.e0 <= 1e-3 && r.report.e1 <= 1e-2 && monotone(r.trace);
  out.detail = "e0 " + fmt(r.report.e0) + " (<= 1e-3), e1 " + fmt(r.report.e1) + " (<= 1e-2) after " +
               std::to_string(r.trace.steps.size()) + " LM iterations, loss " + fmt(r.trace.final_loss) +
               "; reference e0 1.37e-05, e1 1.48e-04";
  return out;
}

// 9. capacity ordering with identical sampling
Outcome capacity() {
  const auto b = benchmark_registry("ex1");
  const auto ls = analytic_level_set(b);
  const auto big = train_experiment(ex1_config({64, 64, 64}, 1000, 200, 150, 100, 150), b, ls);
  const auto small = train_experiment(ex1_config({32, 32}, 1000, 200, 150, 100, 150), b, ls);
  Outcome out;
  out.pass = big.report.e0 <= small.report.e0;
  out.detail = "e0 (L=3, W=64) " + fmt(big.report.e0) + " vs (L=2, W=32) " + fmt(small.report.e0) + ", 150 iterations each";
  return out;
}

// 10. flow map for the ex1 rotation, one interval
Outcome ex1_flow_map() {
  const auto b = benchmark_registry("ex1");
  LevelSetLearnConfig cfg;
  cfg.hidden = {24, 24, 24};
  cfg.adaptive = false;
  cfg.lm.max_iters = 200;
  cfg.lm.loss_stop = 1e-10;
  const auto res = learn_level_set(b, cfg);
  const auto exact = analytic_level_set(b);
  double worst = 0;
  for (double t : {0.25, 0.5, 0.75, 1.0}) {
    const auto got = zero_set_2d([&](const Vec3& x) { return res.field.value({x, t}); }, b.spec.domain, 201);
    const auto ref = zero_set_2d([&](const Vec3& x) { return exact.value({x, t}); }, b.spec.domain, 201);
    worst = std::max(worst, hausdorff_distance(got, ref, 2));
  }
  Outcome out;
  out.pass = res.flow_error <= 1e-4 && worst <= 1e-2;
  out.detail = "E " + fmt(res.flow_error) + " (<= 1e-4), max Hausdorff " + fmt(worst) + " (<= 1e-2)";
  return out;
}

// 11. adaptive time stepping on the ex4 vortex
Outcome ex4_adaptive() {
  const auto b = benchmark_registry("ex4");
  LevelSetLearnConfig cfg;
  cfg.hidden = {24, 24, 24};
  cfg.delta = 0.2;
  cfg.lm.max_iters = 150;
  cfg.lm.loss_stop = 1e-8;
  const auto res = learn_level_set(b, cfg);
  double min_det = 1e300;
  for (const auto& iv : res.steps.intervals) min_det = std::min(min_det, iv.min_det);
  const auto K = res.steps.intervals.size();
  Outcome out;
  out.pass = K >= 2 && min_det > 0.2 && res.flow_error <= 1e-3;
  out.detail = "K " + std::to_string(K) + ", min det over checkpoints " + fmt(min_det) + " (> 0.2), E " +
               fmt(res.flow_error) + " (<= 1e-3)";
  return out;
}

// 12. NTK comparison at width 512
Outcome ntk_comparison() {
  const auto c = ntk_compare(benchmark_registry("ex1"), 512, {1000, 400, 200, 400}, 0);
  const double ratio = c.xi.metrics.c_total / c.vanilla.metrics.c_total;
  Outcome out;
  out.pass = ratio > 1;
  out.detail = "c_total XI " + fmt(c.xi.metrics.c_total) + ", vanilla " + fmt(c.vanilla.metrics.c_total) + ", ratio " +
               fmt(ratio) + " (reference 1.81e4 vs 1.27e3)";
  return out;
}

// 13. full-scale runs are provided as configs, not gated
Outcome full_scale_configs() {
  Check c;
  const std::filesystem::path dir = XIPINN_SOURCE_DIR "/configs";
  for (const char* name : {"ex1_full.json", "ex2_full.json", "ex3_full.json"}) {
    try {
      const auto cfg = load_config(dir / name);
      c(cfg.samples.n_interior == 15000, std::string(name) + ": expected 15K interior points");
    } catch (const std::exception& e) {
      c(false, std::string(name) + ": " + e.what());
    }
  }
  return c.done("ex1-ex3 full-scale configs present and valid (results recorded, not asserted)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"derivative jets vs finite differences", derivative_jets},
      {"chain-rule assembly", chain_rule},
      {"exact-solution oracle closes all blocks", exact_oracle},
      {"RK4 order", rk4_order},
      {"LM sanity", lm_sanity},
      {"NTK structure", ntk_structure},
      {"Jacobian-monitor split time", jacobian_monitor},
      {"Example 1 training accuracy", ex1_training},
      {"capacity ordering", capacity},
      {"Example 1 flow map", ex1_flow_map},
      {"adaptive flow-map stepping on Example 4", ex4_adaptive},
      {"NTK comparison ordering", ntk_comparison},
      {"full-scale configs (not gated)", full_scale_configs},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
