#pragma once

// Levenberg-Marquardt for sum-of-squares objectives loss = |r(theta)|^2.
//
// Each step solves (J^T J + lambda diag(J^T J) + floor I) delta = -J^T r.
// When there are fewer residuals than parameters the equivalent row-space
// form delta = -D^-1 J^T (J D^-1 J^T + I)^-1 r with D = lambda diag(J^T J)
// is used instead. A step is accepted when the loss decreases (lambda is
// then multiplied by lambda_down), otherwise rejected (lambda * lambda_up)
// and the Jacobian is reused.

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace xipinn::lm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LmConfig {
  int max_iters = 5000;
  double loss_stop = 1e-13;
  double lambda_init = 1e-3;
  double lambda_up = 2.0;
  double lambda_down = 1.0 / 3.0;
  double floor = 1e-12;
  /// lambda above this ends training (no further progress possible).
  double lambda_max = 1e16;
  /// Retries with escalated lambda when the factorization fails.
  int max_factor_retries = 40;
  /// Keep lambda fixed (lambda_up = lambda_down = 1); used for Gauss-Newton tests.
  bool pin_lambda = false;
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// r(theta) and optionally J(theta) (rows = residuals). J may be null when
/// only residuals are needed.
struct Assembler {
  std::function<Eigen::Index()> residual_count;
  std::function<void(const Eigen::VectorXd& theta, Eigen::VectorXd& r, RowMatrix* J)> eval;
};

struct StepRecord {
  int iter = 0;
  double loss = 0.0;     // loss after the step (the current loss when rejected)
  double lambda = 0.0;   // damping used for this step
  double step_norm = 0.0;
  bool accepted = false;
};

enum class StopReason { loss_stop, max_iters, lambda_overflow, non_finite };
const char* to_string(StopReason r);

struct LmTrace {
  double initial_loss = 0.0;
  std::vector<StepRecord> steps;
  Eigen::VectorXd params;
  double final_loss = 0.0;
  StopReason reason = StopReason::max_iters;
};

/// Loss-carrying state for stepping by hand.
class LmState {
 public:
  LmState(const Assembler& a, Eigen::VectorXd theta, const LmConfig& cfg);

  double loss() const { return loss_; }
  double lambda() const { return lambda_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const Eigen::VectorXd& residuals() const { return r_; }
  /// Damped step for the current Jacobian at the given lambda (no update).
  Eigen::VectorXd solve(double lambda);
  /// One LM iteration; returns its record.
  StepRecord step(int iter);

 private:
  void relinearize();

  const Assembler& asm_;
  LmConfig cfg_;
  Eigen::VectorXd theta_, r_, jtr_, diag_;
  RowMatrix J_;
  Eigen::MatrixXd normal_;  // J^T J, or J J^T in row-space mode
  bool row_space_ = false;
  double loss_ = 0.0;
  double lambda_ = 0.0;
};

/// Runs LM until max_iters steps or a stop condition. Throws NumericalError
/// when repeated factorization failures exhaust max_factor_retries.
LmTrace train(const Assembler& a, Eigen::VectorXd theta, const LmConfig& cfg);

/// CSV with header iter,loss,lambda,step_norm,accepted.
void write_trace_csv(std::ostream& os, const LmTrace& trace);

}  // namespace xipinn::lm
