#pragma once

// Fully connected feedforward networks: tanh hidden layers, affine output.
// Parameters are one flat vector; layer l stores its weight matrix
// (n_{l+1} x n_l, row-major) followed by its bias.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xipinn/jet2.hpp"

namespace xipinn::net {

enum class Activation { tanh, identity };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network. Throws std::invalid_argument on bad dims.
  explicit Mlp(std::vector<int> layer_dims, Activation act = Activation::tanh);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  /// Number of affine maps (hidden layers + output layer).
  int num_affine() const { return static_cast<int>(dims_.size()) - 1; }
  Eigen::Index param_count() const { return params_.size(); }
  Activation activation() const { return act_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Index weight_offset(int layer) const { return offsets_[layer]; }
  Eigen::Index bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(dims_[layer + 1]) * dims_[layer];
  }
  Eigen::Map<const RowMatrix> weight(int layer) const {
    return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
  }
  Eigen::Map<RowMatrix> weight(int layer) {
    return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
  }
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const {
    return {params_.data() + bias_offset(layer), dims_[layer + 1]};
  }
  Eigen::Map<Eigen::VectorXd> bias(int layer) {
    return {params_.data() + bias_offset(layer), dims_[layer + 1]};
  }

  bool all_finite() const { return params_.allFinite(); }

  /// Plain forward pass.
  Eigen::VectorXd operator()(std::span<const double> input) const;

  /// Forward pass over Jet2 inputs (used to compose flow maps with closed-form
  /// fields). Output length is output_dim().
  std::vector<Jet2> forward(std::span<const Jet2> input) const;

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> offsets_;
  Activation act_ = Activation::tanh;
  Eigen::VectorXd params_;
};

/// Weights ~ N(0, 1/fan_in), biases zero; deterministic in (dims, seed).
Mlp init_network(const std::vector<int>& layer_dims, std::uint64_t seed,
                 Activation act = Activation::tanh);

/// Parameter checkpoint, text format "xipinn-mlp 1". Values use 17
/// significant digits so a save/load cycle is exact.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

}  // namespace xipinn::net
