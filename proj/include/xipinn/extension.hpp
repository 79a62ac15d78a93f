#pragma once

// Extended-variable technique. The network sees (x, t, z) with z built from
// the level set: z = sign(phi) when the solution jumps, z = |phi| when it is
// continuous. PDE derivatives of u(x, t) = U(x, t, z(x, t)) follow from the
// network jet by the chain rule
//   u_t      = U_t + U_z z_t
//   grad u   = grad_x U + U_z grad z
//   lap u    = lap_x U + 2 grad z . grad_x U_z + |grad z|^2 U_zz + U_z lap z
//
// Every such quantity is linear in the jet, so it is expressed as a seed over
// jet channels; its value is seed . jet and its parameter gradient one
// pullback of the seed.

#include <Eigen/Dense>
#include <optional>

#include "xipinn/jet.hpp"
#include "xipinn/levelset.hpp"
#include "xipinn/problem.hpp"

namespace xipinn {

enum class ExtensionKind { indicator, abs_level_set };

/// indicator for nonzero value jumps, abs_level_set for continuous solutions.
ExtensionKind extension_kind_for(JumpKind jump);
const char* to_string(ExtensionKind kind);

/// z and its derivatives at a point.
struct ZInfo {
  double z = 0.0;
  Vec3 grad{};
  double dt = 0.0;
  double lap = 0.0;
};

struct ExtendedVariableRule {
  ExtensionKind kind = ExtensionKind::abs_level_set;
  const LevelSetField* level_set = nullptr;
};

/// z from a level-set sample. Throws InterfacePointError for
/// |phi| <= tol (sign and |.| are not differentiable there).
ZInfo extended_variable(ExtensionKind kind, const FieldSample& phi, int dim, double tol = 1e-10);
ZInfo extended_variable(const ExtendedVariableRule& rule, const SpaceTime& p, double tol = 1e-10);

/// One-sided limits of z on the interface: indicator z = +-1 with zero
/// derivatives; abs_level_set z = 0 with grad z = +-grad phi.
ZInfo interface_limit(ExtensionKind kind, Region side, const Vec3& grad_phi);

/// Input layout of networks: x_0 .. x_{d-1}, t, then z when extended.
inline int time_input(int dim) { return dim; }
inline int z_input(int dim) { return dim + 1; }
inline int network_inputs(int dim, bool extended) { return extended ? dim + 2 : dim + 1; }

enum class Quantity { value, dt, lap, grad0, grad1, grad2 };
Quantity grad_quantity(int k);

/// Adds coef * (quantity of output `comp`) to the seed matrix
/// (n_out x channels of the layout). With extended = false the network has
/// no z input and z is ignored.
void add_seed(Eigen::Ref<Eigen::MatrixXd> seed, const net::JetLayout& layout, int dim,
              bool extended, const ZInfo& z, int comp, Quantity q, double coef);

/// Jet order needed to evaluate a quantity.
int quantity_order(Quantity q);

/// u, u_t, grad u, lap u per output component.
struct PdeDerivatives {
  std::vector<double> u, u_t, lap;
  std::vector<Vec3> grad;
  // Parameter gradients (n_out x P), filled from a DerivativeJet when it
  // carries them; lap has none (it needs the second-order channels).
  std::optional<Eigen::MatrixXd> dparam_u, dparam_u_t;
  std::vector<Eigen::MatrixXd> dparam_grad;

  double quantity(int comp, Quantity q) const;
};

/// From a recorded tape (order 2 when lap is wanted).
PdeDerivatives assemble_pde_derivatives(const net::JetTape& tape, const ZInfo& z, int dim,
                                        bool extended = true);
/// From a forward_jet bundle at input (x, t, z). Throws std::invalid_argument
/// naming any missing block.
PdeDerivatives assemble_pde_derivatives(const net::DerivativeJet& jet, const ZInfo& z, int dim);

/// [U] = U(x, t, z+) - U(x, t, z-) per output; exactly zero for abs_level_set.
/// Throws std::invalid_argument when the analytic level set is off the
/// interface by more than tol.
Eigen::VectorXd jump_value(const net::Mlp& net, const ExtendedVariableRule& rule, const SpaceTime& p,
                           double tol = 1e-10);
/// beta+ grad u+ . n - beta- grad u- . n per output, from one-sided limits.
Eigen::VectorXd jump_flux(const net::Mlp& net, const ExtendedVariableRule& rule, const SpaceTime& p,
                          const Vec3& normal, double beta_plus, double beta_minus, double tol = 1e-10);

}  // namespace xipinn
