#include "xipinn/extension.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "xipinn/error.hpp"

namespace xipinn {

ExtensionKind extension_kind_for(JumpKind jump) {
  return jump == JumpKind::nonzero ? ExtensionKind::indicator : ExtensionKind::abs_level_set;
}

const char* to_string(ExtensionKind kind) {
  return kind == ExtensionKind::indicator ? "indicator" : "abs_level_set";
}

ZInfo extended_variable(ExtensionKind kind, const FieldSample& phi, int dim, double tol) {
  const Region r = classify_region(phi.value, tol);
  ZInfo z;
  if (kind == ExtensionKind::indicator) {
    z.z = r == Region::plus ? 1.0 : -1.0;
    return z;
  }
  const double s = r == Region::plus ? 1.0 : -1.0;
  z.z = std::abs(phi.value);
  for (int k = 0; k < dim; ++k) z.grad[k] = s * phi.grad[k];
  z.dt = s * phi.dt;
  z.lap = s * phi.lap;
  return z;
}

ZInfo extended_variable(const ExtendedVariableRule& rule, const SpaceTime& p, double tol) {
  if (!rule.level_set) throw std::invalid_argument("extended_variable: rule has no level set");
  return extended_variable(rule.kind, rule.level_set->eval(p), rule.level_set->dim(), tol);
}

ZInfo interface_limit(ExtensionKind kind, Region side, const Vec3& grad_phi) {
  ZInfo z;
  const double s = side == Region::plus ? 1.0 : -1.0;
  if (kind == ExtensionKind::indicator) {
    z.z = s;
    return z;
  }
  for (int k = 0; k < 3; ++k) z.grad[k] = s * grad_phi[k];
  return z;
}

Quantity grad_quantity(int k) {
  static constexpr Quantity q[3] = {Quantity::grad0, Quantity::grad1, Quantity::grad2};
  return q[k];
}

int quantity_order(Quantity q) {
  switch (q) {
    case Quantity::value: return 0;
    case Quantity::lap: return 2;
    default: return 1;
  }
}

void add_seed(Eigen::Ref<Eigen::MatrixXd> seed, const net::JetLayout& lay, int dim, bool extended,
              const ZInfo& z, int c, Quantity q, double coef) {
  if (lay.order() < quantity_order(q)) throw std::logic_error("add_seed: jet order too low");
  const int iz = z_input(dim);
  switch (q) {
    case Quantity::value:
      seed(c, 0) += coef;
      break;
    case Quantity::dt:
      seed(c, lay.first(time_input(dim))) += coef;
      if (extended) seed(c, lay.first(iz)) += coef * z.dt;
      break;
    case Quantity::lap: {
      double gz2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        seed(c, lay.second(k, k)) += coef;
        if (extended) seed(c, lay.second(k, iz)) += 2.0 * coef * z.grad[k];
        gz2 += z.grad[k] * z.grad[k];
      }
      if (extended) {
        seed(c, lay.second(iz, iz)) += coef * gz2;
        seed(c, lay.first(iz)) += coef * z.lap;
      }
      break;
    }
    default: {
      const int k = static_cast<int>(q) - static_cast<int>(Quantity::grad0);
      seed(c, lay.first(k)) += coef;
      if (extended) seed(c, lay.first(iz)) += coef * z.grad[k];
    }
  }
}

double PdeDerivatives::quantity(int comp, Quantity q) const {
  switch (q) {
    case Quantity::value: return u[comp];
    case Quantity::dt: return u_t[comp];
    case Quantity::lap: return lap[comp];
    default: return grad[comp][static_cast<int>(q) - static_cast<int>(Quantity::grad0)];
  }
}

PdeDerivatives assemble_pde_derivatives(const net::JetTape& tape, const ZInfo& z, int dim, bool extended) {
  const int n_out = static_cast<int>(tape.output().rows());
  const int order = tape.layout().order();
  const int it = time_input(dim), iz = z_input(dim);
  PdeDerivatives d;
  d.u.resize(n_out);
  d.u_t.assign(n_out, 0.0);
  d.lap.assign(n_out, 0.0);
  d.grad.assign(n_out, Vec3{});
  for (int c = 0; c < n_out; ++c) {
    d.u[c] = tape.value(c);
    if (order < 1) continue;
    const double uz = extended ? tape.d(c, iz) : 0.0;
    d.u_t[c] = tape.d(c, it) + uz * z.dt;
    for (int k = 0; k < dim; ++k) d.grad[c][k] = tape.d(c, k) + uz * z.grad[k];
    if (order < 2) continue;
    double lap = 0.0, gz2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      lap += tape.d2(c, k, k);
      if (extended) lap += 2.0 * z.grad[k] * tape.d2(c, k, iz);
      gz2 += z.grad[k] * z.grad[k];
    }
    if (extended) lap += gz2 * tape.d2(c, iz, iz) + uz * z.lap;
    d.lap[c] = lap;
  }
  return d;
}

PdeDerivatives assemble_pde_derivatives(const net::DerivativeJet& jet, const ZInfo& z, int dim) {
  const auto n_out = jet.value.size();
  const int n_in = dim + 2;
  if (n_out == 0) throw std::invalid_argument("assemble_pde_derivatives: missing block 'value'");
  if (jet.d_inputs.rows() != n_out || jet.d_inputs.cols() != n_in)
    throw std::invalid_argument("assemble_pde_derivatives: missing block 'd_inputs'");
  if (static_cast<Eigen::Index>(jet.hessian.size()) != n_out)
    throw std::invalid_argument("assemble_pde_derivatives: missing block 'hessian'");
  const int it = time_input(dim), iz = z_input(dim);
  PdeDerivatives d;
  d.u.resize(n_out);
  d.u_t.resize(n_out);
  d.lap.resize(n_out);
  d.grad.assign(n_out, Vec3{});
  double gz2 = 0.0;
  for (int k = 0; k < dim; ++k) gz2 += z.grad[k] * z.grad[k];
  for (Eigen::Index c = 0; c < n_out; ++c) {
    const auto& H = jet.hessian[c];
    const double uz = jet.d_inputs(c, iz);
    d.u[c] = jet.value[c];
    d.u_t[c] = jet.d_inputs(c, it) + uz * z.dt;
    double lap = gz2 * H(iz, iz) + uz * z.lap;
    for (int k = 0; k < dim; ++k) {
      d.grad[c][k] = jet.d_inputs(c, k) + uz * z.grad[k];
      lap += H(k, k) + 2.0 * z.grad[k] * H(k, iz);
    }
    d.lap[c] = lap;
  }
  if (jet.dparam_value.size() > 0) d.dparam_u = jet.dparam_value;
  if (!jet.dparam_dinputs.empty()) {
    if (static_cast<int>(jet.dparam_dinputs.size()) != n_in)
      throw std::invalid_argument("assemble_pde_derivatives: incomplete block 'dparam_dinputs'");
    const auto& dz = jet.dparam_dinputs[iz];
    d.dparam_u_t = jet.dparam_dinputs[it] + z.dt * dz;
    for (int k = 0; k < dim; ++k) d.dparam_grad.push_back(jet.dparam_dinputs[k] + z.grad[k] * dz);
  }
  return d;
}

namespace {

void check_on_interface(const ExtendedVariableRule& rule, const SpaceTime& p, double tol) {
  if (!rule.level_set || !rule.level_set->is_analytic()) return;
  const double phi = rule.level_set->value(p);
  if (std::abs(phi) > tol)
    throw std::invalid_argument("interface point is off the interface (|phi| = " + std::to_string(std::abs(phi)) + ")");
}

std::vector<double> net_input(const SpaceTime& p, int dim, double z) {
  std::vector<double> in(dim + 2);
  for (int k = 0; k < dim; ++k) in[k] = p.x[k];
  in[dim] = p.t;
  in[dim + 1] = z;
  return in;
}

int rule_dim(const net::Mlp& net) { return net.input_dim() - 2; }

}  // namespace

Eigen::VectorXd jump_value(const net::Mlp& net, const ExtendedVariableRule& rule, const SpaceTime& p, double tol) {
  check_on_interface(rule, p, tol);
  if (rule.kind == ExtensionKind::abs_level_set) return Eigen::VectorXd::Zero(net.output_dim());
  const int dim = rule_dim(net);
  const auto a = net_input(p, dim, 1.0), b = net_input(p, dim, -1.0);
  return net(a) - net(b);
}

Eigen::VectorXd jump_flux(const net::Mlp& net, const ExtendedVariableRule& rule, const SpaceTime& p,
                          const Vec3& n, double beta_plus, double beta_minus, double tol) {
  check_on_interface(rule, p, tol);
  const int dim = rule_dim(net);
  double nn = 0.0;
  for (int k = 0; k < dim; ++k) nn += n[k] * n[k];
  if (std::abs(std::sqrt(nn) - 1.0) > 1e-12) throw std::invalid_argument("jump_flux: normal is not a unit vector");
  Vec3 grad_phi{};
  if (rule.kind == ExtensionKind::abs_level_set) {
    if (!rule.level_set) throw std::invalid_argument("jump_flux: abs_level_set rule needs a level set");
    grad_phi = rule.level_set->eval(p).grad;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.output_dim());
  for (Region side : {Region::plus, Region::minus}) {
    const ZInfo z = interface_limit(rule.kind, side, grad_phi);
    net::JetTape tape;
    tape.record(net, net_input(p, dim, z.z), 1);
    const auto d = assemble_pde_derivatives(tape, z, dim);
    const double beta = side == Region::plus ? beta_plus : -beta_minus;
    for (int c = 0; c < net.output_dim(); ++c) {
      double dn = 0.0;
      for (int k = 0; k < dim; ++k) dn += d.grad[c][k] * n[k];
      out[c] += beta * dn;
    }
  }
  return out;
}

}  // namespace xipinn
