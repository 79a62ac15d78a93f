#pragma once

// Empirical neural tangent kernels of the residual operators at a fixed
// parameter vector, their spectra, and the trace-based convergence metrics.

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "xipinn/residuals.hpp"

namespace xipinn {

/// K = G G^T for per-point parameter gradients G (one row per point).
Eigen::MatrixXd ntk_matrix(const Eigen::Ref<const lm::RowMatrix>& G);

/// Eigenvalues of a symmetric matrix, largest first.
Eigen::VectorXd ntk_spectrum(const Eigen::MatrixXd& K);

struct ConvergenceMetrics {
  double c_total = 0.0;
  double c_partial = 0.0;
};

/// c_total = tr(K)/N with K the Gram matrix of all stacked operator rows and
/// N = sum of counts; c_partial = sum_i tr(K_i)/N_i.
ConvergenceMetrics convergence_metrics(const std::vector<Eigen::MatrixXd>& kernels, const std::vector<int>& counts);

struct NtkOperator {
  std::string name;
  int count = 0;
  Eigen::MatrixXd kernel;
  Eigen::VectorXd eigenvalues;
};

struct NtkReport {
  std::string model;
  std::vector<int> layer_dims;
  Eigen::Index param_count = 0;
  std::vector<NtkOperator> operators;
  Eigen::VectorXd full_eigenvalues;  // empty unless requested
  double full_trace = 0.0;
  ConvergenceMetrics metrics;
};

/// Kernels of every block of `sys` for `net`, built from the unscaled rows.
NtkReport ntk_report(const ResidualSystem& sys, const net::Mlp& net, std::string model, bool full_spectrum);

struct NtkCounts {
  int interior = 1000, boundary = 400, initial = 200, interface = 400;
};

struct NtkComparison {
  NtkReport xi;
  NtkReport vanilla;
};

/// XI-PINN vs vanilla PINN at initialization, one hidden layer of `width`.
/// Both networks are drawn from the same seed.
NtkComparison ntk_compare(const Benchmark& bench, int width, const NtkCounts& counts, std::uint64_t seed,
                          double eps = 1e-6, bool full_spectrum = true);

/// CSV model,operator,rank,eigenvalue. The stacked kernel is named "full".
void write_spectrum_csv(std::ostream& os, const std::vector<const NtkReport*>& reports);
/// key = value lines.
void write_ntk_metrics(std::ostream& os, const std::vector<const NtkReport*>& reports);

}  // namespace xipinn
