#include "xipinn/ntk.hpp"

#include <ostream>
#include <stdexcept>

#include "xipinn/levelset.hpp"

namespace xipinn {

Eigen::MatrixXd ntk_matrix(const Eigen::Ref<const lm::RowMatrix>& G) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(G.rows(), G.rows());
  K.selfadjointView<Eigen::Lower>().rankUpdate(G);
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return K;
}

Eigen::VectorXd ntk_spectrum(const Eigen::MatrixXd& K) {
  if (K.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("ntk: eigensolver did not converge");
  return es.eigenvalues().reverse();
}

ConvergenceMetrics convergence_metrics(const std::vector<Eigen::MatrixXd>& kernels, const std::vector<int>& counts) {
  if (kernels.size() != counts.size() || kernels.empty())
    throw std::invalid_argument("convergence_metrics: one count per kernel required");
  ConvergenceMetrics m;
  double trace = 0.0;
  long total = 0;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (counts[i] <= 0) throw std::invalid_argument("convergence_metrics: counts must be positive");
    const double tr = kernels[i].trace();
    trace += tr;
    total += counts[i];
    m.c_partial += tr / counts[i];
  }
  m.c_total = trace / static_cast<double>(total);
  return m;
}

NtkReport ntk_report(const ResidualSystem& sys, const net::Mlp& net, std::string model, bool full_spectrum) {
  Eigen::VectorXd r;
  lm::RowMatrix J;
  sys.evaluate(net, r, &J);
  for (const auto& b : sys.blocks) J.middleRows(b.first_row, b.rows) /= b.scale;

  NtkReport rep;
  rep.model = std::move(model);
  rep.layer_dims = net.layer_dims();
  rep.param_count = net.param_count();
  std::vector<Eigen::MatrixXd> kernels;
  std::vector<int> counts;
  for (const auto& b : sys.blocks) {
    NtkOperator op;
    op.name = block_name(b.block);
    op.count = b.points;
    op.kernel = ntk_matrix(J.middleRows(b.first_row, b.rows));
    op.eigenvalues = ntk_spectrum(op.kernel);
    kernels.push_back(op.kernel);
    counts.push_back(b.points);
    rep.operators.push_back(std::move(op));
  }
  rep.metrics = convergence_metrics(kernels, counts);
  rep.full_trace = J.squaredNorm();
  if (full_spectrum) rep.full_eigenvalues = ntk_spectrum(ntk_matrix(J));
  return rep;
}

NtkComparison ntk_compare(const Benchmark& bench, int width, const NtkCounts& counts, std::uint64_t seed, double eps,
                          bool full_spectrum) {
  if (width < 1) throw std::invalid_argument("ntk_compare: width must be positive");
  const auto ls = analytic_level_set(bench);
  SamplePlan plan;
  plan.n_interior = counts.interior;
  plan.n_boundary = counts.boundary;
  plan.n_initial = counts.initial;
  plan.n_interface = counts.interface;
  plan.seed = seed;
  const auto sets = sample_all(bench, ls, plan);

  ResidualOptions opt;
  opt.weights.mean_square = false;
  const int d = bench.spec.spatial_dim;
  const int out = bench.spec.solution_arity();
  const auto kind = extension_kind_for(bench.spec.jump_kind);
  const auto xi_sys = build_xi_system(bench, ls, kind, sets, opt);
  const auto xi_net = net::init_network({network_inputs(d, true), width, out}, seed);
  NtkComparison c;
  c.xi = ntk_report(xi_sys, xi_net, "xi_pinn", full_spectrum);
  const auto va_sys = build_vanilla_system(bench, ls, sets, eps, opt);
  const auto va_net = net::init_network({network_inputs(d, false), width, out}, seed);
  c.vanilla = ntk_report(va_sys, va_net, "vanilla", full_spectrum);
  return c;
}

void write_spectrum_csv(std::ostream& os, const std::vector<const NtkReport*>& reports) {
  os.precision(17);
  os << "model,operator,rank,eigenvalue\n";
  for (const auto* rep : reports) {
    for (const auto& op : rep->operators)
      for (Eigen::Index k = 0; k < op.eigenvalues.size(); ++k)
        os << rep->model << ',' << op.name << ',' << k + 1 << ',' << op.eigenvalues[k] << '\n';
    for (Eigen::Index k = 0; k < rep->full_eigenvalues.size(); ++k)
      os << rep->model << ",full," << k + 1 << ',' << rep->full_eigenvalues[k] << '\n';
  }
}

void write_ntk_metrics(std::ostream& os, const std::vector<const NtkReport*>& reports) {
  os.precision(17);
  for (const auto* rep : reports) {
    const auto& m = rep->model;
    os << m << ".layers =";
    for (int n : rep->layer_dims) os << ' ' << n;
    os << '\n' << m << ".params = " << rep->param_count << '\n';
    for (const auto& op : rep->operators) os << m << ".count." << op.name << " = " << op.count << '\n';
    os << m << ".c_total = " << rep->metrics.c_total << '\n';
    os << m << ".c_partial = " << rep->metrics.c_partial << '\n';
  }
}

}  // namespace xipinn
