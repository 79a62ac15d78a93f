#include "xipinn/levelset.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace xipinn {

Vec3 FlowMapNet::apply(const Vec3& x, double t) const {
  const int d = dim();
  double in[4] = {0, 0, 0, 0};
  for (int k = 0; k < d; ++k) in[k] = x[k];
  in[d] = t;
  const Eigen::VectorXd f = net(std::span<const double>(in, d + 1));
  Vec3 y{};
  for (int k = 0; k < d; ++k) y[k] = f[k] + x[k];
  return y;
}

std::vector<Jet2> FlowMapNet::apply(std::span<const Jet2> x, const Jet2& t) const {
  const int d = dim();
  std::vector<Jet2> in(x.begin(), x.begin() + d);
  in.push_back(t);
  auto y = net.forward(in);
  for (int k = 0; k < d; ++k) y[k] += x[k];
  return y;
}

FlowMapNet make_flow_map(int dim, const std::vector<int>& hidden, std::uint64_t seed,
                         double t_start, double t_end) {
  std::vector<int> dims{dim + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(dim);
  FlowMapNet m{net::init_network(dims, seed), t_start, t_end};
  return m;
}

LevelSetField LevelSetField::analytic(Field phi, int dim, double t_end) {
  LevelSetField ls;
  ls.phi_ = std::move(phi);
  ls.dim_ = dim;
  ls.t_end_ = t_end;
  return ls;
}

LevelSetField LevelSetField::neural(Field phi0, int dim, std::vector<FlowMapNet> maps) {
  if (maps.empty()) throw std::invalid_argument("neural level set needs at least one flow map");
  if (maps.front().t_start != 0.0) throw std::invalid_argument("first flow map must start at t = 0");
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (!(maps[k].t_end > maps[k].t_start))
      throw std::invalid_argument("flow map intervals must be strictly increasing");
    if (k > 0 && maps[k].t_start != maps[k - 1].t_end)
      throw std::invalid_argument("flow map intervals must be contiguous");
    if (maps[k].dim() != dim || maps[k].net.input_dim() != dim + 1)
      throw std::invalid_argument("flow map network has the wrong shape");
  }
  LevelSetField ls;
  ls.phi_ = std::move(phi0);
  ls.dim_ = dim;
  ls.t_end_ = maps.back().t_end;
  ls.maps_ = std::move(maps);
  return ls;
}

std::vector<double> LevelSetField::breakpoints() const {
  if (maps_.empty()) return {0.0, t_end_};
  std::vector<double> b{0.0};
  for (const auto& m : maps_) b.push_back(m.t_end);
  return b;
}

void LevelSetField::check_time(double t) const {
  if (!(t >= -1e-12 && t <= t_end_ + 1e-12))
    throw std::invalid_argument("level set evaluated at t = " + std::to_string(t) +
                                " outside [0, " + std::to_string(t_end_) + "]");
}

std::vector<Jet2> LevelSetField::compose(std::span<const Jet2> xt, double t) const {
  std::vector<Jet2> y(xt.begin(), xt.end());
  if (maps_.empty()) return phi_(y);
  if (t > 0.0) {
    // k: first interval with t <= T_k
    std::size_t k = 0;
    while (k + 1 < maps_.size() && t > maps_[k].t_end) ++k;
    auto x = maps_[k].apply(std::span<const Jet2>(y.data(), dim_), y[dim_]);
    for (std::size_t m = k; m-- > 0;) x = maps_[m].apply(x, Jet2(maps_[m].t_end));
    for (int i = 0; i < dim_; ++i) y[i] = x[i];
  }
  y[dim_] = Jet2(0.0);
  return phi_(y);
}

double LevelSetField::value(const SpaceTime& p) const {
  check_time(p.t);
  std::vector<Jet2> xt(dim_ + 1);
  for (int k = 0; k < dim_; ++k) xt[k] = Jet2(p.x[k]);
  xt[dim_] = Jet2(p.t);
  return compose(xt, p.t)[0].v;
}

FieldSample LevelSetField::eval(const SpaceTime& p) const {
  check_time(p.t);
  std::vector<Jet2> xt(dim_ + 1);
  for (int k = 0; k < dim_; ++k) xt[k] = Jet2::variable(p.x[k], k);
  xt[dim_] = Jet2::variable(p.t, dim_);
  const Jet2 phi = compose(xt, p.t)[0];
  FieldSample s;
  s.value = phi.v;
  for (int k = 0; k < dim_; ++k) {
    s.grad[k] = phi.g[k];
    s.lap += phi.hess(k, k);
  }
  s.dt = phi.g[dim_];
  return s;
}

Vec3 LevelSetField::pull_back(const Vec3& x, double t) const {
  check_time(t);
  if (maps_.empty() || t <= 0.0) return x;
  std::size_t k = 0;
  while (k + 1 < maps_.size() && t > maps_[k].t_end) ++k;
  Vec3 y = maps_[k].apply(x, t);
  for (std::size_t m = k; m-- > 0;) y = maps_[m].apply(y, maps_[m].t_end);
  return y;
}

LevelSetField analytic_level_set(const Benchmark& bench) {
  const auto& s = bench.spec;
  if (bench.level_set.analytic) return LevelSetField::analytic(*bench.level_set.analytic, s.spatial_dim, s.t_end);
  return LevelSetField::analytic(bench.level_set.phi0, s.spatial_dim, 0.0);
}

void save_level_set(std::ostream& os, const LevelSetField& ls) {
  os << "xipinn-levelset 1\n";
  os << "dim " << ls.dim() << "\n";
  os << "maps " << ls.maps().size() << "\n";
  os.precision(17);
  for (const auto& m : ls.maps()) {
    os << "interval " << m.t_start << ' ' << m.t_end << "\n";
    net::save_mlp(os, m.net);
  }
}

LevelSetField load_level_set(std::istream& is, Field phi0, int dim) {
  auto expect = [&](const std::string& key) {
    std::string tok;
    if (!(is >> tok) || tok != key) throw std::runtime_error("level-set checkpoint: expected '" + key + "'");
  };
  expect("xipinn-levelset");
  int version = 0;
  if (!(is >> version) || version != 1) throw std::runtime_error("level-set checkpoint: unsupported version");
  expect("dim");
  int file_dim = 0;
  is >> file_dim;
  if (file_dim != dim) throw std::runtime_error("level-set checkpoint: dimension mismatch");
  expect("maps");
  std::size_t n = 0;
  if (!(is >> n) || n == 0) throw std::runtime_error("level-set checkpoint: bad map count");
  std::vector<FlowMapNet> maps(n);
  for (auto& m : maps) {
    expect("interval");
    if (!(is >> m.t_start >> m.t_end)) throw std::runtime_error("level-set checkpoint: bad interval");
    m.net = net::load_mlp(is);
  }
  try {
    return LevelSetField::neural(std::move(phi0), dim, std::move(maps));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("level-set checkpoint: ") + e.what());
  }
}

}  // namespace xipinn
