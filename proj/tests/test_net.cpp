#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "xipinn/error.hpp"
#include "xipinn/jet.hpp"

using namespace xipinn;
using namespace xipinn::net;
using xipinn::testing::eval_net;
using xipinn::testing::fd_hessian;
using xipinn::testing::fd_jacobian;
using xipinn::testing::random_net;
using xipinn::testing::random_vector;
using xipinn::testing::rel_err;

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

TEST_CASE("parameter count and layout") {
  auto m = init_network({3, 64, 64, 64, 1}, 1);
  CHECK(m.param_count() == 3 * 64 + 64 + 2 * (64 * 64 + 64) + 64 + 1);
  CHECK(m.param_count() == 8641);
  CHECK(init_network({5, 64, 64, 64, 1}, 1).param_count() == 8769);
  CHECK(m.weight_offset(0) == 0);
  CHECK(m.bias_offset(0) == 192);
  CHECK(m.weight_offset(1) == 256);
  for (int l = 0; l < m.num_affine(); ++l) CHECK(m.bias(l).isZero());
  CHECK_THROWS_AS(init_network({3, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Mlp({3, 0, 1}), std::invalid_argument);
}

TEST_CASE("initialization is deterministic and scaled by fan-in") {
  auto a = init_network({4, 200, 200, 1}, 11);
  auto b = init_network({4, 200, 200, 1}, 11);
  auto c = init_network({4, 200, 200, 1}, 12);
  CHECK(a.params() == b.params());
  CHECK(a.params() != c.params());
  const auto w = a.weight(1);
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  CHECK(var == doctest::Approx(1.0 / 200).epsilon(0.05));
}

TEST_CASE("affine network has exact constant derivatives") {
  Mlp m({3, 2}, Activation::tanh);
  m.weight(0) << 1, 2, 3, -4, 5, -6;
  m.bias(0) << 0.5, -0.5;
  Eigen::Vector3d x(0.3, -0.2, 0.7);
  auto jet = forward_jet(m, as_span(x), {});
  CHECK(jet.value[0] == doctest::Approx(0.3 - 0.4 + 2.1 + 0.5));
  CHECK(jet.d_inputs == Eigen::MatrixXd(m.weight(0)));
  for (const auto& h : jet.hessian) CHECK(h.isZero());
}

TEST_CASE("zero weights give the output bias and vanishing derivatives") {
  Mlp m({2, 5, 5, 1});
  m.bias(2)[0] = 1.25;
  Eigen::Vector2d x(0.1, 0.2);
  auto jet = forward_jet(m, as_span(x), {});
  CHECK(jet.value[0] == 1.25);
  CHECK(jet.d_inputs.isZero());
  CHECK(jet.hessian[0].isZero());
}

TEST_CASE("input derivatives match finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    const int n_in = 2 + trial % 3;
    const int n_out = 1 + trial % 2;
    const auto m = random_net({n_in, 8, 6, n_out}, 1000 + trial);
    const Eigen::VectorXd x = random_vector(n_in, 5000 + trial);
    auto jet = forward_jet(m, as_span(x), {});
    auto f = [&](const Eigen::VectorXd& y) { return eval_net(m, y); };
    CHECK(rel_err(jet.value, f(x)) < 1e-14);
    CHECK(rel_err(jet.d_inputs, fd_jacobian(f, x, 1e-5)) < 1e-6);
    for (int o = 0; o < n_out; ++o) {
      auto fo = [&](const Eigen::VectorXd& y) { return eval_net(m, y)[o]; };
      CHECK(rel_err(jet.hessian[o], fd_hessian(fo, x, 1e-4)) < 1e-4);
      CHECK((jet.hessian[o] - jet.hessian[o].transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const int n_in = 2 + trial % 2;
    const auto m0 = random_net({n_in, 6, 5, 2}, 2000 + trial);
    const Eigen::VectorXd x = random_vector(n_in, 6000 + trial);
    auto jet = forward_jet(m0, as_span(x), {.order = 1, .param_value = true, .param_dinputs = true});
    const auto P = m0.param_count();
    Eigen::MatrixXd fd_val(2, P);
    std::vector<Eigen::MatrixXd> fd_din(n_in, Eigen::MatrixXd(2, P));
    for (Eigen::Index k = 0; k < P; ++k) {
      auto shifted = [&](double s) {
        Mlp m = m0;
        m.params()[k] += s;
        return forward_jet(m, as_span(x), {.order = 1});
      };
      const double h = 1e-6;
      auto p = shifted(h), q = shifted(-h);
      fd_val.col(k) = (p.value - q.value) / (2 * h);
      for (int i = 0; i < n_in; ++i) fd_din[i].col(k) = (p.d_inputs.col(i) - q.d_inputs.col(i)) / (2 * h);
    }
    CHECK(rel_err(jet.dparam_value, fd_val) < 1e-6);
    for (int i = 0; i < n_in; ++i) CHECK(rel_err(jet.dparam_dinputs[i], fd_din[i]) < 1e-6);
  }
}

TEST_CASE("second-order channels pull back correctly") {
  const auto m0 = random_net({3, 7, 7, 1}, 77);
  const Eigen::VectorXd x = random_vector(3, 78);
  JetTape tape;
  tape.record(m0, as_span(x), 2);
  const auto& lay = tape.layout();
  // Laplacian-like combination plus a value term.
  Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(1, lay.channels());
  seed(0, 0) = 0.3;
  for (int i = 0; i < 3; ++i) seed(0, lay.second(i, i)) = 1.0;
  seed(0, lay.second(0, 2)) = -2.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m0.param_count());
  tape.pullback(seed, g);

  auto combo = [&](const Mlp& m) {
    JetTape t;
    t.record(m, as_span(x), 2);
    return (seed.array() * t.output().array()).sum();
  };
  Eigen::VectorXd fd(m0.param_count());
  for (Eigen::Index k = 0; k < m0.param_count(); ++k) {
    Mlp a = m0, b = m0;
    a.params()[k] += 1e-6;
    b.params()[k] -= 1e-6;
    fd[k] = (combo(a) - combo(b)) / 2e-6;
  }
  CHECK(rel_err(g, fd) < 1e-6);
}

TEST_CASE("pullback is linear in the seed") {
  const auto m = random_net({2, 5, 5, 2}, 31);
  const Eigen::VectorXd x = random_vector(2, 32);
  JetTape tape;
  tape.record(m, as_span(x), 2);
  const int C = tape.layout().channels();
  const Eigen::MatrixXd s1 = Eigen::MatrixXd::Random(2, C), s2 = Eigen::MatrixXd::Random(2, C);
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(m.param_count()), g2 = g1, g12 = g1;
  tape.pullback(s1, g1);
  tape.pullback(s2, g2);
  tape.pullback(s1 + 2.0 * s2, g12);
  CHECK(rel_err(g12, g1 + 2.0 * g2) < 1e-13);
}

TEST_CASE("Jet2 forward agrees with the tape") {
  const auto m = random_net({4, 6, 6, 1}, 41);
  const Eigen::VectorXd x = random_vector(4, 42);
  std::vector<Jet2> in;
  for (int i = 0; i < 4; ++i) in.push_back(Jet2::variable(x[i], i));
  auto out = m.forward(in);
  auto jet = forward_jet(m, as_span(x), {});
  CHECK(out[0].v == doctest::Approx(jet.value[0]).epsilon(1e-14));
  for (int i = 0; i < 4; ++i) {
    CHECK(out[0].g[i] == doctest::Approx(jet.d_inputs(0, i)).epsilon(1e-12));
    for (int j = 0; j < 4; ++j) CHECK(out[0].hess(i, j) == doctest::Approx(jet.hessian[0](i, j)).epsilon(1e-12));
  }
}

TEST_CASE("hessian block selects inputs") {
  const auto m = random_net({3, 4, 1}, 51);
  const Eigen::VectorXd x = random_vector(3, 52);
  auto jet = forward_jet(m, as_span(x), {});
  const int idx[] = {0, 2};
  auto blk = jet.hessian_block(0, idx);
  CHECK(blk(0, 1) == jet.hessian[0](0, 2));
  CHECK(blk(1, 1) == jet.hessian[0](2, 2));
}

TEST_CASE("bad inputs are rejected") {
  auto m = random_net({2, 4, 1}, 3);
  Eigen::VectorXd x(3);
  x.setZero();
  CHECK_THROWS_AS(forward_jet(m, as_span(x), {}), std::invalid_argument);
  Eigen::VectorXd y(2);
  y << std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS_AS(forward_jet(m, as_span(y), {}), NumericalError);
}

TEST_CASE("checkpoint round trip is exact") {
  const auto m = random_net({3, 9, 4, 2}, 61);
  std::stringstream ss;
  save_mlp(ss, m);
  const Mlp r = load_mlp(ss);
  CHECK(r.layer_dims() == m.layer_dims());
  CHECK(r.params() == m.params());

  std::stringstream bad("xipinn-mlp 1\nactivation tanh\nlayers 3 2 4 1\nparams 5\n1 2 3\n");
  CHECK_THROWS(load_mlp(bad));
  std::stringstream wrong_magic("not-a-model\n");
  CHECK_THROWS(load_mlp(wrong_magic));
}
