#pragma once

// Discrete loss system. Every residual row is a linear combination of
// derivative quantities (value, u_t, grad, lap) of the model at one or two
// probes, minus a data value, times a per-block scale:
//   r = scale * (sum_terms coef * Q(probe, comp) - data)
// The same rows evaluate a network (with parameter Jacobian) or the exact
// solution, which is how manufactured data are checked to close the system.

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xipinn/extension.hpp"
#include "xipinn/lm.hpp"
#include "xipinn/sampling.hpp"

namespace xipinn {

enum class Block { l1_pde, l1_divergence, l2_boundary, l3_initial, l4_flux_jump, l5_value_jump };
const char* block_name(Block b);

/// Network evaluation point: input (x, t, z) when extended, else (x, t).
/// `region` selects the exact-solution branch when the exact model is used.
struct Probe {
  SpaceTime p;
  Region region = Region::plus;
  ZInfo z;
  bool extended = true;
};

struct Term {
  int probe = 0;  // index into the group's probes
  int comp = 0;
  Quantity q = Quantity::value;
  double coef = 1.0;
};

struct Row {
  std::vector<Term> terms;
  double data = 0.0;
};

/// Rows sharing probes (one sample point).
struct Group {
  Block block = Block::l1_pde;
  std::vector<Probe> probes;
  std::vector<Row> rows;
};

struct BlockInfo {
  Block block;
  Eigen::Index first_row = 0;
  Eigen::Index rows = 0;
  int points = 0;
  double scale = 1.0;
};

struct BlockWeights {
  double pde = 1.0, divergence = 1.0, boundary = 1.0, initial = 1.0, flux = 1.0, value = 1.0;
  /// Divide each block by its point count (mean square); false gives the
  /// plain sum of squares.
  bool mean_square = true;
  double weight(Block b) const;
};

/// Derivative quantities of some model at a probe.
class Model {
 public:
  virtual ~Model() = default;
  virtual PdeDerivatives derivatives(const Probe& probe, int dim, int order) const = 0;
};

class NetModel : public Model {
 public:
  explicit NetModel(const net::Mlp& net) : net_(net) {}
  PdeDerivatives derivatives(const Probe& probe, int dim, int order) const override;

 private:
  const net::Mlp& net_;
};

class ExactModel : public Model {
 public:
  explicit ExactModel(const ExactSolution& exact) : exact_(exact) {}
  PdeDerivatives derivatives(const Probe& probe, int dim, int order) const override;

 private:
  const ExactSolution& exact_;
};

/// Probe at p with region and z from the level set; nullopt when |phi| <= tol.
std::optional<Probe> make_probe(const LevelSetField& ls, ExtensionKind kind, const SpaceTime& p, bool extended,
                                double tol = 1e-10);

/// Network input vector for a probe.
std::vector<double> probe_input(const Probe& probe, int dim);

class ResidualSystem {
 public:
  int dim = 2;
  int outputs = 1;  // network output arity
  bool extended = true;
  std::vector<Group> groups;  // block order, then sample order
  std::vector<BlockInfo> blocks;
  int excluded_interior = 0;  // interior points dropped for lying on the interface

  Eigen::Index rows() const { return total_rows_; }
  /// Assigns row offsets and per-block scales. Call after filling groups.
  void finalize(const BlockWeights& w);

  void evaluate(const Model& model, Eigen::VectorXd& r) const;
  /// Residuals of a network and optionally the Jacobian wrt its parameters.
  void evaluate(const net::Mlp& net, Eigen::VectorXd& r, lm::RowMatrix* J) const;
  /// LM assembler writing trial parameters into `work`.
  lm::Assembler assembler(net::Mlp& work) const;

  const BlockInfo* find(Block b) const;
  /// Sum of squares of the scaled residuals.
  static double loss(const Eigen::VectorXd& r) { return r.squaredNorm(); }

  /// CSV block,index,value.
  void dump_csv(std::ostream& os, const Eigen::VectorXd& r) const;

 private:
  std::vector<Eigen::Index> offsets_;
  std::vector<double> group_scale_;
  Eigen::Index total_rows_ = 0;
};

struct ResidualOptions {
  BlockWeights weights;
  double interface_tol = 1e-10;
};

/// Extended-variable system for a benchmark. Empty sample sets give no
/// block. The value-jump block is omitted for abs_level_set.
ResidualSystem build_xi_system(const Benchmark& bench, const LevelSetField& ls, ExtensionKind kind,
                               const SampleSets& sets, const ResidualOptions& opt = {});

/// Plain network in (x, t); the flux jump is the one-sided difference
/// beta+ grad u(x).n - beta- grad u(x + eps n).n - h_N. Parabolic only.
ResidualSystem build_vanilla_system(const Benchmark& bench, const LevelSetField& ls, const SampleSets& sets,
                                    double eps = 1e-6, const ResidualOptions& opt = {});

}  // namespace xipinn
