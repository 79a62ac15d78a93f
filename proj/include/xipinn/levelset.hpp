#pragma once

// Level-set fields: a closed form phi(x, t), or the composition of learned
// inverse flow maps with the initial level set,
//   phi(x, t) = phi0(X_1(... X_{k-1}(X_k(x, t), T_{k-1}) ..., T_1))
// for t in (T_{k-1}, T_k].

#include <iosfwd>
#include <vector>

#include "xipinn/mlp.hpp"
#include "xipinn/problem.hpp"

namespace xipinn {

/// One sub-map X(x, t) = F(x, t) + x valid on [t_start, t_end]; F is a
/// network with inputs (x, t) and one output per spatial coordinate.
struct FlowMapNet {
  net::Mlp net;
  double t_start = 0.0;
  double t_end = 0.0;

  int dim() const { return net.output_dim(); }
  Vec3 apply(const Vec3& x, double t) const;
  std::vector<Jet2> apply(std::span<const Jet2> x, const Jet2& t) const;
};

/// Network sized for a flow map in `dim` dimensions: hidden widths as given.
FlowMapNet make_flow_map(int dim, const std::vector<int>& hidden, std::uint64_t seed,
                         double t_start, double t_end);

class LevelSetField {
 public:
  LevelSetField() = default;
  static LevelSetField analytic(Field phi, int dim, double t_end);
  /// Maps must tile [0, t_end]: first starts at 0, each starts where the
  /// previous ends, strictly increasing. Throws std::invalid_argument.
  static LevelSetField neural(Field phi0, int dim, std::vector<FlowMapNet> maps);

  bool is_analytic() const { return maps_.empty(); }
  int dim() const { return dim_; }
  double t_end() const { return t_end_; }
  const std::vector<FlowMapNet>& maps() const { return maps_; }
  /// Interval endpoints T_0 .. T_K (neural) or {0, t_end} (analytic).
  std::vector<double> breakpoints() const;

  double value(const SpaceTime& p) const;
  /// phi with spatial gradient, time derivative and Laplacian.
  FieldSample eval(const SpaceTime& p) const;
  /// Composite inverse flow map X(x, t; 0). Identity for analytic fields.
  Vec3 pull_back(const Vec3& x, double t) const;

 private:
  std::vector<Jet2> compose(std::span<const Jet2> xt, double t) const;
  void check_time(double t) const;

  Field phi_;  // closed form (analytic) or phi0 (neural)
  int dim_ = 2;
  double t_end_ = 1.0;
  std::vector<FlowMapNet> maps_;
};

/// Level set of a benchmark: the closed form when available, else phi0 only
/// (valid at t = 0; a neural composite has to be fitted for later times).
LevelSetField analytic_level_set(const Benchmark& bench);

/// Checkpoint "xipinn-levelset 1": interval endpoints and one network per
/// interval. phi0 is not stored; the caller supplies it from the benchmark.
void save_level_set(std::ostream& os, const LevelSetField& ls);
LevelSetField load_level_set(std::istream& is, Field phi0, int dim);

}  // namespace xipinn
