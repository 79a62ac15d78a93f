#include "xipinn/mlp.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "xipinn/rng.hpp"

namespace xipinn::net {

Mlp::Mlp(std::vector<int> layer_dims, Activation act) : dims_(std::move(layer_dims)), act_(act) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("Mlp: layer dims must be >= 1");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(total);
}

Eigen::VectorXd Mlp::operator()(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw std::invalid_argument("Mlp: input length mismatch");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input_dim());
  for (int l = 0; l < num_affine(); ++l) {
    Eigen::VectorXd s = weight(l) * a + bias(l);
    if (l + 1 < num_affine() && act_ == Activation::tanh) s = s.array().tanh();
    a = std::move(s);
  }
  return a;
}

std::vector<Jet2> Mlp::forward(std::span<const Jet2> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw std::invalid_argument("Mlp: input length mismatch");
  std::vector<Jet2> a(input.begin(), input.end());
  for (int l = 0; l < num_affine(); ++l) {
    const auto w = weight(l);
    const auto b = bias(l);
    std::vector<Jet2> s(dims_[l + 1]);
    for (int r = 0; r < dims_[l + 1]; ++r) {
      Jet2 acc(b[r]);
      for (int c = 0; c < dims_[l]; ++c) acc.axpy(w(r, c), a[c]);
      if (l + 1 < num_affine() && act_ == Activation::tanh) {
        const double y = std::tanh(acc.v);
        const double d1 = 1.0 - y * y;
        acc = chain(acc, y, d1, -2.0 * y * d1);
      }
      s[r] = acc;
    }
    a = std::move(s);
  }
  return a;
}

Mlp init_network(const std::vector<int>& layer_dims, std::uint64_t seed, Activation act) {
  if (layer_dims.size() < 3)
    throw std::invalid_argument("init_network: need at least one hidden layer");
  Mlp net(layer_dims, act);
  Philox rng(seed, 0x6d6c70ULL);
  for (int l = 0; l < net.num_affine(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
    auto w = net.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
  }
  return net;
}

void save_mlp(std::ostream& os, const Mlp& net) {
  os << "xipinn-mlp 1\n";
  os << "activation " << (net.activation() == Activation::tanh ? "tanh" : "identity") << '\n';
  os << "layers " << net.layer_dims().size();
  for (int d : net.layer_dims()) os << ' ' << d;
  os << "\nparams " << net.param_count() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < net.param_count(); ++i) os << net.params()[i] << '\n';
}

Mlp load_mlp(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string tok;
    if (!(is >> tok) || tok != word)
      throw std::runtime_error("mlp checkpoint: expected '" + word + "', got '" + tok + "'");
  };
  expect("xipinn-mlp");
  int version = 0;
  is >> version;
  if (version != 1) throw std::runtime_error("mlp checkpoint: unsupported version");
  expect("activation");
  std::string act;
  is >> act;
  if (act != "tanh" && act != "identity")
    throw std::runtime_error("mlp checkpoint: unknown activation " + act);
  expect("layers");
  std::size_t n = 0;
  is >> n;
  if (!is || n < 2 || n > 64) throw std::runtime_error("mlp checkpoint: bad layer count");
  std::vector<int> dims(n);
  for (auto& d : dims) is >> d;
  if (!is) throw std::runtime_error("mlp checkpoint: truncated layer dims");
  Mlp net(dims, act == "tanh" ? Activation::tanh : Activation::identity);
  expect("params");
  Eigen::Index count = 0;
  is >> count;
  if (count != net.param_count())
    throw std::runtime_error("mlp checkpoint: parameter count does not match layer dims");
  for (Eigen::Index i = 0; i < count; ++i) is >> net.params()[i];
  if (!is) throw std::runtime_error("mlp checkpoint: truncated parameters");
  if (!net.all_finite()) throw std::runtime_error("mlp checkpoint: non-finite parameter");
  return net;
}

}  // namespace xipinn::net
