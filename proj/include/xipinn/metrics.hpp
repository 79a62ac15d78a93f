#pragma once

// Space-time error norms against the exact solution and CSV exports of
// predictions and error tables.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xipinn/residuals.hpp"

namespace xipinn {

struct ErrorReport {
  std::string benchmark;
  std::uint64_t seed = 0;
  double e0 = 0.0;
  double e1 = 0.0;
  long points = 0;
  long excluded = 0;  // test points with |phi| < tol
  std::vector<double> times;  // distinct times in first-seen order
  std::vector<double> e0_t, e1_t;
  std::vector<long> points_t;
  double runtime = 0.0;  // seconds, filled by callers
};

/// e0 = sqrt(mean |u_model - u|^2), e1 adds the squared spatial-gradient error.
/// Only equation components enter (velocity for the Oseen system).
ErrorReport error_norms(const Model& model, const Benchmark& bench, const LevelSetField& ls, ExtensionKind kind,
                        bool extended, std::span<const SpaceTime> points, double tol = 1e-12);

/// Columns x.., t, u_pred.., u_exact.., abs_err.. in the order of `points`.
/// Points with |phi| < tol are skipped.
void export_grid(std::ostream& os, const Model& model, const Benchmark& bench, const LevelSetField& ls,
                 ExtensionKind kind, bool extended, std::span<const SpaceTime> points, double tol = 1e-12);

/// One row for the space-time norms (time "all") and one per time slice.
void write_report_csv(std::ostream& os, const ErrorReport& r);

}  // namespace xipinn
