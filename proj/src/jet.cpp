#include "xipinn/jet.hpp"

#include <stdexcept>
#include <string>

#include "xipinn/error.hpp"

namespace xipinn::net {

JetLayout::JetLayout(int n_inputs, int order) : n_in_(n_inputs), order_(order) {
  if (order < 0 || order > 2) throw std::invalid_argument("JetLayout: order must be 0, 1 or 2");
  channels_ = 1;
  if (order >= 1) channels_ += n_inputs;
  if (order >= 2) {
    for (int i = 0; i < n_inputs; ++i)
      for (int j = i; j < n_inputs; ++j) pairs_.emplace_back(i, j);
    channels_ += static_cast<int>(pairs_.size());
  }
}

int JetLayout::second(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle offset.
  return 1 + n_in_ + i * n_in_ - i * (i - 1) / 2 + (j - i);
}

void JetTape::record(const Mlp& net, std::span<const double> input, int order) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward_jet: input length " + std::to_string(input.size()) +
                                " does not match network input dim " +
                                std::to_string(net.input_dim()));
  net_ = &net;
  if (layout_.inputs() != net.input_dim() || layout_.order() != order)
    layout_ = JetLayout(net.input_dim(), order);
  const int C = layout_.channels();
  const int L = net.num_affine();
  const bool smooth = net.activation() == Activation::tanh;
  acts_.resize(L);
  pre_.resize(L - 1);
  d1_.resize(L - 1);
  d2_.resize(L - 1);
  d3_.resize(L - 1);

  auto& a0 = acts_[0];
  a0.setZero(net.input_dim(), C);
  for (int i = 0; i < net.input_dim(); ++i) {
    a0(i, 0) = input[i];
    if (order >= 1) a0(i, layout_.first(i)) = 1.0;
  }

  const auto& pairs = layout_.pairs();
  for (int l = 0; l + 1 < L; ++l) {
    auto& s = pre_[l];
    s.noalias() = net.weight(l) * acts_[l];
    s.col(0) += net.bias(l);
    if (!s.allFinite())
      throw NumericalError("forward_jet: non-finite pre-activation at layer " + std::to_string(l));
    const Eigen::Index n = s.rows();
    auto& a = acts_[l + 1];
    a.resize(n, C);
    auto& d1 = d1_[l];
    auto& d2 = d2_[l];
    auto& d3 = d3_[l];
    if (smooth) {
      const Eigen::ArrayXd y = s.col(0).array().tanh();
      d1 = 1.0 - y.square();
      d2 = -2.0 * y * d1;
      d3 = -2.0 * d1.square() + 4.0 * y.square() * d1;
      a.col(0) = y.matrix();
    } else {
      d1.setOnes(n);
      d2.setZero(n);
      d3.setZero(n);
      a.col(0) = s.col(0);
    }
    if (order >= 1)
      for (int i = 0; i < layout_.inputs(); ++i) {
        const int ci = layout_.first(i);
        a.col(ci) = (d1 * s.col(ci).array()).matrix();
      }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int cp = 1 + layout_.inputs() + static_cast<int>(p);
      const auto si = s.col(layout_.first(pairs[p].first)).array();
      const auto sj = s.col(layout_.first(pairs[p].second)).array();
      a.col(cp) = (d2 * si * sj + d1 * s.col(cp).array()).matrix();
    }
  }
  out_.noalias() = net.weight(L - 1) * acts_[L - 1];
  out_.col(0) += net.bias(L - 1);
  if (!out_.allFinite())
    throw NumericalError("forward_jet: non-finite output at layer " + std::to_string(L - 1));
}

void JetTape::pullback(const Eigen::MatrixXd& seed, double* grad) const {
  Eigen::Map<Eigen::VectorXd> g(grad, net_->param_count());
  pullback(seed, Eigen::Ref<Eigen::VectorXd>(g));
}

void JetTape::pullback(const Eigen::MatrixXd& seed, Eigen::Ref<Eigen::VectorXd> grad) const {
  const Mlp& net = *net_;
  const int L = net.num_affine();
  const int C = layout_.channels();
  if (seed.rows() != net.output_dim() || seed.cols() != C)
    throw std::invalid_argument("pullback: seed shape does not match recorded jet");
  const auto& pairs = layout_.pairs();
  const int n_in = layout_.inputs();

  Eigen::MatrixXd upstream = seed;  // adjoint of the affine output of layer l
  Eigen::MatrixXd adj_act;
  for (int l = L - 1; l >= 0; --l) {
    const auto& a_prev = acts_[l];
    Eigen::Map<RowMatrix> gw(grad.data() + net.weight_offset(l), net.layer_dims()[l + 1],
                             net.layer_dims()[l]);
    gw.noalias() += upstream * a_prev.transpose();
    grad.segment(net.bias_offset(l), net.layer_dims()[l + 1]) += upstream.col(0);
    if (l == 0) break;
    adj_act.noalias() = net.weight(l).transpose() * upstream;

    // Back through the activation of hidden layer l-1.
    const auto& s = pre_[l - 1];
    const auto& d1 = d1_[l - 1];
    const auto& d2 = d2_[l - 1];
    const auto& d3 = d3_[l - 1];
    upstream.resize(s.rows(), C);
    upstream.col(0) = (d1 * adj_act.col(0).array()).matrix();
    if (layout_.order() >= 1)
      for (int i = 0; i < n_in; ++i) {
        const int ci = layout_.first(i);
        upstream.col(ci) = (d1 * adj_act.col(ci).array()).matrix();
        upstream.col(0).array() += d2 * s.col(ci).array() * adj_act.col(ci).array();
      }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int cp = 1 + n_in + static_cast<int>(p);
      const int ci = layout_.first(pairs[p].first);
      const int cj = layout_.first(pairs[p].second);
      const auto ap = adj_act.col(cp).array();
      const auto si = s.col(ci).array();
      const auto sj = s.col(cj).array();
      upstream.col(cp) = (d1 * ap).matrix();
      upstream.col(0).array() += (d3 * si * sj + d2 * s.col(cp).array()) * ap;
      upstream.col(ci).array() += d2 * sj * ap;
      upstream.col(cj).array() += d2 * si * ap;
    }
  }
}

Eigen::MatrixXd DerivativeJet::hessian_block(int out, std::span<const int> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) h(a, b) = hessian.at(out)(indices[a], indices[b]);
  return h;
}

DerivativeJet forward_jet(const Mlp& net, std::span<const double> input, const JetRequest& request) {
  const int order = std::max(request.order, request.param_dinputs ? 1 : 0);
  JetTape tape;
  tape.record(net, input, order);
  const auto& lay = tape.layout();
  const int n_out = net.output_dim();
  const int n_in = net.input_dim();

  DerivativeJet jet;
  jet.value = tape.output().col(0);
  if (order >= 1) {
    jet.d_inputs.resize(n_out, n_in);
    for (int i = 0; i < n_in; ++i) jet.d_inputs.col(i) = tape.output().col(lay.first(i));
  }
  if (order >= 2) {
    jet.hessian.assign(n_out, Eigen::MatrixXd(n_in, n_in));
    for (int o = 0; o < n_out; ++o)
      for (int i = 0; i < n_in; ++i)
        for (int j = 0; j < n_in; ++j) jet.hessian[o](i, j) = tape.d2(o, i, j);
  }
  const Eigen::Index P = net.param_count();
  Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(n_out, lay.channels());
  Eigen::VectorXd g(P);
  if (request.param_value) {
    jet.dparam_value.resize(n_out, P);
    for (int o = 0; o < n_out; ++o) {
      seed.setZero();
      seed(o, 0) = 1.0;
      g.setZero();
      tape.pullback(seed, g);
      jet.dparam_value.row(o) = g.transpose();
    }
  }
  if (request.param_dinputs) {
    jet.dparam_dinputs.assign(n_in, Eigen::MatrixXd(n_out, P));
    for (int i = 0; i < n_in; ++i)
      for (int o = 0; o < n_out; ++o) {
        seed.setZero();
        seed(o, lay.first(i)) = 1.0;
        g.setZero();
        tape.pullback(seed, g);
        jet.dparam_dinputs[i].row(o) = g.transpose();
      }
  }
  return jet;
}

}  // namespace xipinn::net
