#include "xipinn/lm.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "xipinn/error.hpp"

namespace xipinn::lm {

void LmConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("lm.max_iters must be >= 1");
  if (!(loss_stop >= 0)) throw std::invalid_argument("lm.loss_stop must be >= 0");
  if (!(lambda_init > 0) && !pin_lambda) throw std::invalid_argument("lm.lambda_init must be > 0");
  if (!(lambda_up > 1.0)) throw std::invalid_argument("lm.lambda_up must be > 1");
  if (!(lambda_down > 0.0 && lambda_down < 1.0)) throw std::invalid_argument("lm.lambda_down must be in (0, 1)");
  if (!(floor >= 0)) throw std::invalid_argument("lm.floor must be >= 0");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::loss_stop: return "loss_stop";
    case StopReason::max_iters: return "max_iters";
    case StopReason::lambda_overflow: return "lambda_overflow";
    case StopReason::non_finite: return "non_finite";
  }
  return "unknown";
}

LmState::LmState(const Assembler& a, Eigen::VectorXd theta, const LmConfig& cfg)
    : asm_(a), cfg_(cfg), theta_(std::move(theta)), lambda_(cfg.lambda_init) {
  cfg_.validate();
  relinearize();
}

void LmState::relinearize() {
  const Eigen::Index m = asm_.residual_count();
  const Eigen::Index n = theta_.size();
  r_.resize(m);
  J_.resize(m, n);
  asm_.eval(theta_, r_, &J_);
  loss_ = r_.squaredNorm();
  if (!std::isfinite(loss_)) return;
  jtr_.noalias() = J_.transpose() * r_;
  diag_ = J_.colwise().squaredNorm().transpose();
  row_space_ = m < n;
  if (!row_space_) {
    normal_.setZero(n, n);
    normal_.selfadjointView<Eigen::Lower>().rankUpdate(J_.transpose());
  } else {
    // J S^{-1/2}; columns with zero norm carry no information and stay zero
    RowMatrix js = J_;
    for (Eigen::Index j = 0; j < n; ++j) js.col(j) *= diag_[j] > 0 ? 1.0 / std::sqrt(diag_[j]) : 0.0;
    normal_.setZero(m, m);
    normal_.selfadjointView<Eigen::Lower>().rankUpdate(js);
  }
}

Eigen::VectorXd LmState::solve(double lambda) {
  const Eigen::Index n = theta_.size();
  if (!row_space_) {
    Eigen::MatrixXd A = normal_;
    for (Eigen::Index i = 0; i < n; ++i) A(i, i) += lambda * diag_[i] + cfg_.floor;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(A);
    if (llt.info() != Eigen::Success) return {};
    Eigen::VectorXd d = -llt.solve(jtr_);
    if (!d.allFinite()) return {};
    return d;
  }
  const double lam = std::max(lambda, cfg_.floor);
  Eigen::MatrixXd A = normal_ / lam;
  A.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(A);
  if (llt.info() != Eigen::Success) return {};
  const Eigen::VectorXd y = llt.solve(r_);
  Eigen::VectorXd d = -(J_.transpose() * y);
  for (Eigen::Index j = 0; j < n; ++j) d[j] = diag_[j] > 0 ? d[j] / (lam * diag_[j]) : 0.0;
  if (!d.allFinite()) return {};
  return d;
}

StepRecord LmState::step(int iter) {
  StepRecord rec;
  rec.iter = iter;
  Eigen::VectorXd delta;
  for (int attempt = 0;; ++attempt) {
    delta = solve(lambda_);
    if (delta.size() > 0) break;
    if (attempt >= cfg_.max_factor_retries)
      throw NumericalError("LM: factorization failed " + std::to_string(attempt + 1) +
                           " times (lambda = " + std::to_string(lambda_) + ")");
    lambda_ = lambda_ > 0 ? lambda_ * cfg_.lambda_up : 1e-12;
  }
  rec.lambda = lambda_;
  rec.step_norm = delta.norm();

  Eigen::VectorXd cand = theta_ + delta;
  Eigen::VectorXd rc(r_.size());
  double cand_loss = std::numeric_limits<double>::infinity();
  try {
    asm_.eval(cand, rc, nullptr);
    cand_loss = rc.squaredNorm();
  } catch (const NumericalError&) {
  }

  if (std::isfinite(cand_loss) && cand_loss < loss_) {
    theta_ = std::move(cand);
    relinearize();
    rec.accepted = true;
    if (!cfg_.pin_lambda) lambda_ = std::max(lambda_ * cfg_.lambda_down, 1e-20);
  } else if (!cfg_.pin_lambda) {
    lambda_ *= cfg_.lambda_up;
  }
  rec.loss = loss_;
  return rec;
}

LmTrace train(const Assembler& a, Eigen::VectorXd theta, const LmConfig& cfg) {
  LmState st(a, std::move(theta), cfg);
  LmTrace tr;
  tr.initial_loss = st.loss();
  auto finish = [&](StopReason why) {
    tr.reason = why;
    tr.params = st.params();
    tr.final_loss = st.loss();
    return tr;
  };
  if (!std::isfinite(st.loss())) return finish(StopReason::non_finite);
  if (st.loss() <= cfg.loss_stop) return finish(StopReason::loss_stop);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    tr.steps.push_back(st.step(it));
    if (!std::isfinite(st.loss())) return finish(StopReason::non_finite);
    if (st.loss() <= cfg.loss_stop) return finish(StopReason::loss_stop);
    if (st.lambda() > cfg.lambda_max) return finish(StopReason::lambda_overflow);
  }
  return finish(StopReason::max_iters);
}

void write_trace_csv(std::ostream& os, const LmTrace& trace) {
  os.precision(17);
  os << "iter,loss,lambda,step_norm,accepted\n";
  os << 0 << ',' << trace.initial_loss << ",,,\n";
  for (const auto& s : trace.steps)
    os << s.iter << ',' << s.loss << ',' << s.lambda << ',' << s.step_norm << ',' << (s.accepted ? 1 : 0) << '\n';
}

}  // namespace xipinn::lm
