#pragma once

// Input-derivative jets of an Mlp and their parameter gradients.
//
// A tape records, layer by layer, the value of the network together with all
// first (and optionally second) derivatives with respect to every input.
// Each recorded quantity is a "channel": channel 0 is the value, channel 1+i
// is d/dx_i, and the remaining channels hold d2/dx_i dx_j for i <= j.
//
// pullback() runs reverse mode through the recorded jet: given a seed matrix
// (one weight per output component and channel) it accumulates the parameter
// gradient of sum(seed .* output_jet). Any linear combination of input
// derivatives, such as a PDE residual, therefore costs a single reverse pass.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "xipinn/mlp.hpp"

namespace xipinn::net {

class JetLayout {
 public:
  JetLayout() = default;
  JetLayout(int n_inputs, int order);

  int inputs() const { return n_in_; }
  int order() const { return order_; }
  int channels() const { return channels_; }
  static constexpr int value() { return 0; }
  int first(int i) const { return 1 + i; }
  /// Channel of d2/dx_i dx_j (symmetric in i, j).
  int second(int i, int j) const;
  /// Pairs (i, j), i <= j, in channel order.
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

 private:
  int n_in_ = 0;
  int order_ = 0;
  int channels_ = 1;
  std::vector<std::pair<int, int>> pairs_;
};

class JetTape {
 public:
  /// order: 0 value only, 1 adds gradients, 2 adds all second derivatives.
  /// Throws std::invalid_argument on input length mismatch and
  /// NumericalError naming the layer when a non-finite value appears.
  void record(const Mlp& net, std::span<const double> input, int order);

  const JetLayout& layout() const { return layout_; }
  /// n_out x channels.
  const Eigen::MatrixXd& output() const { return out_; }
  double value(int out) const { return out_(out, 0); }
  double d(int out, int i) const { return out_(out, layout_.first(i)); }
  double d2(int out, int i, int j) const { return out_(out, layout_.second(i, j)); }

  /// grad += d/dtheta sum_{o,c} seed(o, c) * output()(o, c).
  void pullback(const Eigen::MatrixXd& seed, Eigen::Ref<Eigen::VectorXd> grad) const;
  /// Row-major destination convenience (a row of a Jacobian).
  void pullback(const Eigen::MatrixXd& seed, double* grad) const;

 private:
  const Mlp* net_ = nullptr;
  JetLayout layout_;
  // acts_[l]: jet of the input to affine layer l (n_l x C); acts_[0] is the
  // network input.
  std::vector<Eigen::MatrixXd> acts_;
  // Pre-activation jets of hidden layers and activation derivatives at them.
  std::vector<Eigen::MatrixXd> pre_;
  std::vector<Eigen::ArrayXd> d1_, d2_, d3_;
  Eigen::MatrixXd out_;
};

struct JetRequest {
  int order = 2;
  bool param_value = false;
  bool param_dinputs = false;
};

/// Network value and derivatives at one input.
struct DerivativeJet {
  Eigen::VectorXd value;                  // n_out
  Eigen::MatrixXd d_inputs;               // n_out x n_in
  std::vector<Eigen::MatrixXd> hessian;   // per output, n_in x n_in (order 2)
  Eigen::MatrixXd dparam_value;           // n_out x P (if requested)
  std::vector<Eigen::MatrixXd> dparam_dinputs;  // per input, n_out x P

  /// Hessian block restricted to the given input indices.
  Eigen::MatrixXd hessian_block(int out, std::span<const int> indices) const;
};

DerivativeJet forward_jet(const Mlp& net, std::span<const double> input,
                          const JetRequest& request);

}  // namespace xipinn::net
