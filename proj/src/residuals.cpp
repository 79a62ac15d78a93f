#include "xipinn/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "xipinn/error.hpp"
#include "xipinn/parallel.hpp"

namespace xipinn {

const char* block_name(Block b) {
  switch (b) {
    case Block::l1_pde: return "l1_pde";
    case Block::l1_divergence: return "l1_divergence";
    case Block::l2_boundary: return "l2_boundary";
    case Block::l3_initial: return "l3_initial";
    case Block::l4_flux_jump: return "l4_flux_jump";
    case Block::l5_value_jump: return "l5_value_jump";
  }
  return "?";
}

double BlockWeights::weight(Block b) const {
  switch (b) {
    case Block::l1_pde: return pde;
    case Block::l1_divergence: return divergence;
    case Block::l2_boundary: return boundary;
    case Block::l3_initial: return initial;
    case Block::l4_flux_jump: return flux;
    case Block::l5_value_jump: return value;
  }
  return 1.0;
}

std::vector<double> probe_input(const Probe& probe, int dim) {
  std::vector<double> in(network_inputs(dim, probe.extended));
  for (int k = 0; k < dim; ++k) in[k] = probe.p.x[k];
  in[time_input(dim)] = probe.p.t;
  if (probe.extended) in[z_input(dim)] = probe.z.z;
  return in;
}

PdeDerivatives NetModel::derivatives(const Probe& probe, int dim, int order) const {
  net::JetTape tape;
  tape.record(net_, probe_input(probe, dim), order);
  return assemble_pde_derivatives(tape, probe.z, dim, probe.extended);
}

PdeDerivatives ExactModel::derivatives(const Probe& probe, int dim, int) const {
  const auto s = exact_.derivatives(probe.region, dim, probe.p);
  PdeDerivatives d;
  for (const auto& c : s) {
    d.u.push_back(c.value);
    d.u_t.push_back(c.dt);
    d.lap.push_back(c.lap);
    d.grad.push_back(c.grad);
  }
  return d;
}

std::optional<Probe> make_probe(const LevelSetField& ls, ExtensionKind kind, const SpaceTime& p, bool extended,
                                double tol) {
  const auto phi = ls.eval(p);
  if (!(std::abs(phi.value) > tol)) return std::nullopt;
  Probe out;
  out.p = p;
  out.region = phi.value > 0 ? Region::plus : Region::minus;
  out.extended = extended;
  if (extended) out.z = extended_variable(kind, phi, ls.dim());
  return out;
}

void ResidualSystem::finalize(const BlockWeights& w) {
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return static_cast<int>(a.block) < static_cast<int>(b.block); });
  blocks.clear();
  offsets_.resize(groups.size());
  group_scale_.resize(groups.size());
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (blocks.empty() || blocks.back().block != groups[g].block)
      blocks.push_back({groups[g].block, row, 0, 0, 1.0});
    auto& b = blocks.back();
    ++b.points;
    offsets_[g] = row;
    row += static_cast<Eigen::Index>(groups[g].rows.size());
    b.rows = row - b.first_row;
  }
  total_rows_ = row;
  for (auto& b : blocks) b.scale = std::sqrt(w.weight(b.block) / (w.mean_square ? b.points : 1));
  std::size_t bi = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    while (blocks[bi].block != groups[g].block) ++bi;
    group_scale_[g] = blocks[bi].scale;
  }
}

const BlockInfo* ResidualSystem::find(Block b) const {
  for (const auto& info : blocks)
    if (info.block == b) return &info;
  return nullptr;
}

namespace {

int probe_order(const Group& g, int probe) {
  int order = 0;
  for (const auto& row : g.rows)
    for (const auto& t : row.terms)
      if (t.probe == probe) order = std::max(order, quantity_order(t.q));
  return order;
}

}  // namespace

void ResidualSystem::evaluate(const Model& model, Eigen::VectorXd& r) const {
  r.resize(total_rows_);
  parallel_for(groups.size(), [&](std::size_t b, std::size_t e) {
    std::vector<PdeDerivatives> d;
    for (std::size_t g = b; g < e; ++g) {
      const auto& grp = groups[g];
      d.clear();
      for (std::size_t p = 0; p < grp.probes.size(); ++p)
        d.push_back(model.derivatives(grp.probes[p], dim, probe_order(grp, static_cast<int>(p))));
      for (std::size_t k = 0; k < grp.rows.size(); ++k) {
        double v = -grp.rows[k].data;
        for (const auto& t : grp.rows[k].terms) v += t.coef * d[t.probe].quantity(t.comp, t.q);
        r[offsets_[g] + static_cast<Eigen::Index>(k)] = group_scale_[g] * v;
      }
    }
  });
}

void ResidualSystem::evaluate(const net::Mlp& net, Eigen::VectorXd& r, lm::RowMatrix* J) const {
  if (net.output_dim() != outputs) throw std::invalid_argument("residual system: network output arity mismatch");
  if (net.input_dim() != network_inputs(dim, extended))
    throw std::invalid_argument("residual system: network input arity mismatch");
  if (!J) {
    evaluate(NetModel(net), r);
    return;
  }
  r.resize(total_rows_);
  J->setZero(total_rows_, net.param_count());
  parallel_for(groups.size(), [&](std::size_t b, std::size_t e) {
    net::JetTape tape;
    Eigen::MatrixXd seed;
    for (std::size_t g = b; g < e; ++g) {
      const auto& grp = groups[g];
      const double scale = group_scale_[g];
      for (std::size_t k = 0; k < grp.rows.size(); ++k) r[offsets_[g] + static_cast<Eigen::Index>(k)] = -scale * grp.rows[k].data;
      for (std::size_t p = 0; p < grp.probes.size(); ++p) {
        const int pi = static_cast<int>(p);
        const auto& probe = grp.probes[p];
        tape.record(net, probe_input(probe, dim), probe_order(grp, pi));
        const auto& lay = tape.layout();
        for (std::size_t k = 0; k < grp.rows.size(); ++k) {
          seed.setZero(outputs, lay.channels());
          bool any = false;
          for (const auto& t : grp.rows[k].terms)
            if (t.probe == pi) {
              add_seed(seed, lay, dim, probe.extended, probe.z, t.comp, t.q, scale * t.coef);
              any = true;
            }
          if (!any) continue;
          const Eigen::Index row = offsets_[g] + static_cast<Eigen::Index>(k);
          r[row] += (seed.array() * tape.output().array()).sum();
          tape.pullback(seed, J->row(row).data());
        }
      }
    }
  });
}

lm::Assembler ResidualSystem::assembler(net::Mlp& work) const {
  lm::Assembler a;
  a.residual_count = [this] { return total_rows_; };
  a.eval = [this, &work](const Eigen::VectorXd& theta, Eigen::VectorXd& r, lm::RowMatrix* J) {
    work.params() = theta;
    evaluate(work, r, J);
  };
  return a;
}

void ResidualSystem::dump_csv(std::ostream& os, const Eigen::VectorXd& r) const {
  os.precision(17);
  os << "block,index,value\n";
  for (const auto& b : blocks)
    for (Eigen::Index i = 0; i < b.rows; ++i) os << block_name(b.block) << ',' << i << ',' << r[b.first_row + i] << '\n';
}

namespace {

struct Builder {
  const Benchmark& bench;
  const LevelSetField& ls;
  ExtensionKind kind;
  bool extended;
  double tol;
  ResidualSystem sys;

  int dim() const { return bench.spec.spatial_dim; }
  bool oseen() const { return bench.spec.kind == PdeKind::oseen; }

  // Probe at a point off the interface; false when it lies on it.
  bool probe_at(const SpaceTime& p, Probe& out) {
    auto pr = make_probe(ls, kind, p, extended, tol);
    if (!pr) return false;
    out = *pr;
    return true;
  }

  void pde(const InteriorSet& set) {
    const auto& s = bench.spec;
    for (const auto& p : set.points) {
      Group g;
      g.block = Block::l1_pde;
      g.probes.resize(1);
      if (!probe_at(p, g.probes[0])) {
        ++sys.excluded_interior;
        continue;
      }
      const Region reg = g.probes[0].region;
      const double beta = s.beta(reg);
      const auto f = manufacture_source(s, bench.exact, p, reg);
      if (!oseen()) {
        g.rows.push_back({{{0, 0, Quantity::dt, 1.0}, {0, 0, Quantity::lap, -beta}}, f[0]});
        sys.groups.push_back(std::move(g));
        continue;
      }
      const int d = dim();
      const auto vel = field_values(s.velocity, d, p);
      for (int c = 0; c < d; ++c) {
        Row row{{{0, c, Quantity::dt, 1.0}, {0, c, Quantity::lap, -beta}, {0, d, grad_quantity(c), 1.0}}, f[c]};
        for (int k = 0; k < d; ++k) row.terms.push_back({0, c, grad_quantity(k), vel[k]});
        g.rows.push_back(std::move(row));
      }
      Group div;
      div.block = Block::l1_divergence;
      div.probes = g.probes;
      Row drow;
      for (int k = 0; k < d; ++k) drow.terms.push_back({0, k, grad_quantity(k), 1.0});
      div.rows.push_back(std::move(drow));
      sys.groups.push_back(std::move(g));
      sys.groups.push_back(std::move(div));
    }
  }

  void boundary(const BoundarySet& set) {
    for (const auto& p : set.points) {
      Group g;
      g.block = Block::l2_boundary;
      g.probes.resize(1);
      if (!probe_at(p, g.probes[0])) throw InterfacePointError("boundary sample lies on the interface");
      const auto gdata = boundary_data(bench.spec, bench.exact, p);
      for (int c = 0; c < bench.spec.solution_arity(); ++c) g.rows.push_back({{{0, c, Quantity::value, 1.0}}, gdata[c]});
      sys.groups.push_back(std::move(g));
    }
  }

  void initial(const InitialSet& set) {
    for (const auto& p : set.points) {
      Group g;
      g.block = Block::l3_initial;
      g.probes.resize(1);
      if (!probe_at(p, g.probes[0])) continue;
      const auto u0 = initial_data(bench.spec, bench.exact, p.x, g.probes[0].region);
      for (int c = 0; c < bench.spec.equation_arity(); ++c) g.rows.push_back({{{0, c, Quantity::value, 1.0}}, u0[c]});
      sys.groups.push_back(std::move(g));
    }
  }

  // Flux rows beta+ d_n u(probe 0) - beta- d_n u(probe 1) [- p n for Oseen].
  void flux_rows(Group& g, const Vec3& n, const std::vector<double>& hn) {
    const auto& s = bench.spec;
    const int d = dim();
    for (int c = 0; c < s.equation_arity(); ++c) {
      Row row;
      row.data = hn[c];
      for (int k = 0; k < d; ++k) {
        row.terms.push_back({0, c, grad_quantity(k), s.beta_plus * n[k]});
        row.terms.push_back({1, c, grad_quantity(k), -s.beta_minus * n[k]});
      }
      if (oseen()) {
        row.terms.push_back({0, d, Quantity::value, -n[c]});
        row.terms.push_back({1, d, Quantity::value, n[c]});
      }
      g.rows.push_back(std::move(row));
    }
  }

  void interface_xi(const InterfaceSet& set) {
    if (set.normals.size() != set.points.size()) throw std::invalid_argument("interface samples are missing normals");
    const auto& s = bench.spec;
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      const auto& p = set.points[i];
      const Vec3& n = set.normals[i];
      const Vec3 grad_phi = kind == ExtensionKind::abs_level_set ? ls.eval(p).grad : Vec3{};
      std::vector<Probe> probes(2);
      for (int side = 0; side < 2; ++side) {
        const Region r = side == 0 ? Region::plus : Region::minus;
        probes[side] = {p, r, interface_limit(kind, r, grad_phi), true};
      }
      Group g;
      g.block = Block::l4_flux_jump;
      g.probes = probes;
      flux_rows(g, n, jump_flux_data(s, bench.exact, p, n));
      sys.groups.push_back(std::move(g));
      if (kind == ExtensionKind::indicator) {
        Group v;
        v.block = Block::l5_value_jump;
        v.probes = probes;
        const auto hd = jump_value_data(s, bench.exact, p);
        for (int c = 0; c < s.equation_arity(); ++c)
          v.rows.push_back({{{0, c, Quantity::value, 1.0}, {1, c, Quantity::value, -1.0}}, hd[c]});
        sys.groups.push_back(std::move(v));
      }
    }
  }

  void interface_vanilla(const InterfaceSet& set, double eps) {
    if (set.normals.size() != set.points.size()) throw std::invalid_argument("interface samples are missing normals");
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      const auto& p = set.points[i];
      const Vec3& n = set.normals[i];
      SpaceTime q = p;
      for (int k = 0; k < dim(); ++k) q.x[k] += eps * n[k];
      Group g;
      g.block = Block::l4_flux_jump;
      g.probes = {Probe{p, Region::plus, {}, false}, Probe{q, Region::minus, {}, false}};
      flux_rows(g, n, jump_flux_data(bench.spec, bench.exact, p, n));
      sys.groups.push_back(std::move(g));
    }
  }
};

}  // namespace

ResidualSystem build_xi_system(const Benchmark& bench, const LevelSetField& ls, ExtensionKind kind,
                               const SampleSets& sets, const ResidualOptions& opt) {
  Builder b{bench, ls, kind, true, opt.interface_tol, {}};
  b.sys.dim = bench.spec.spatial_dim;
  b.sys.outputs = bench.spec.solution_arity();
  b.sys.extended = true;
  b.pde(sets.interior);
  b.boundary(sets.boundary);
  b.initial(sets.initial);
  b.interface_xi(sets.interface);
  b.sys.finalize(opt.weights);
  return std::move(b.sys);
}

ResidualSystem build_vanilla_system(const Benchmark& bench, const LevelSetField& ls, const SampleSets& sets,
                                    double eps, const ResidualOptions& opt) {
  if (bench.spec.kind != PdeKind::parabolic) throw std::invalid_argument("vanilla baseline supports parabolic problems only");
  if (!(eps > 0)) throw std::invalid_argument("vanilla baseline: eps must be positive");
  Builder b{bench, ls, ExtensionKind::abs_level_set, false, opt.interface_tol, {}};
  b.sys.dim = bench.spec.spatial_dim;
  b.sys.outputs = 1;
  b.sys.extended = false;
  b.pde(sets.interior);
  b.boundary(sets.boundary);
  b.initial(sets.initial);
  b.interface_vanilla(sets.interface, eps);
  b.sys.finalize(opt.weights);
  return std::move(b.sys);
}

}  // namespace xipinn
