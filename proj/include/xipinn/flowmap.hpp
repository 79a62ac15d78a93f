#pragma once

// Interface transport and the learned inverse flow map: RK4 trajectories of
// interface points, per-interval fitting of X(x, t) = F(x, t) + x, the
// Jacobian-determinant monitor and adaptive interval splitting.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xipinn/error.hpp"
#include "xipinn/levelset.hpp"
#include "xipinn/lm.hpp"

namespace xipinn {

/// Classical RK4 with `steps` uniform steps. Throws NumericalError naming the
/// step when the state becomes non-finite.
Vec3 rk4_advect(const Field& velocity, int dim, const Vec3& x0, double t0, double t1, int steps);

/// Positions X_RK(x_i, t_j; 0) of interface points; positions[j][i].
struct TrajectoryTable {
  int dim = 2;
  std::vector<Vec3> initial;
  std::vector<double> times;  // increasing, times[0] = 0
  std::vector<std::vector<Vec3>> positions;

  const Vec3& at(std::size_t j, std::size_t i) const { return positions[j][i]; }
};

/// Integrates between consecutive table times with
/// max(1, ceil(steps_per_unit * dt)) RK4 steps each.
TrajectoryTable build_trajectories(const Field& velocity, int dim, std::vector<Vec3> initial,
                                   std::vector<double> times, int steps_per_unit = 100);

/// Loss of one sub-map on table times j_start..j_end:
///   mean_i |F(a_i, T)|^2 + mean_{i,j} |X(X_RK(x_i, t_j), t_j) - X_RK(x_i, T)|^2
/// with T = times[j_start].
double flow_fit_loss(const FlowMapNet& map, const TrajectoryTable& traj, std::size_t j_start,
                     std::size_t j_end, std::span<const Vec3> anchors);

struct FlowFitResult {
  FlowMapNet map;
  double loss = 0.0;
  bool reached_target = false;  // loss <= lm.loss_stop
  lm::LmTrace trace;
};

/// Fits `init` (warm start) by LM; map.t_start/t_end are set to the
/// interval. Not reaching the target is reported, not thrown.
FlowFitResult fit_flow_map(const TrajectoryTable& traj, std::size_t j_start, std::size_t j_end,
                           std::span<const Vec3> anchors, FlowMapNet init, const lm::LmConfig& cfg);

/// Jacobian of a spatial map at (x, t); dim x dim.
using JacobianFn = std::function<Eigen::MatrixXd(const Vec3& x, double t)>;
JacobianFn flow_map_jacobian(const FlowMapNet& map);

/// Nodes of the grid with spacing h over the domain's bounding box, endpoints
/// included, keeping nodes inside the domain.
std::vector<Vec3> grid_nodes(const DomainShape& domain, double h);

double min_jacobian_det(const JacobianFn& jac, double t, std::span<const Vec3> nodes, int dim);
double min_jacobian_det(const FlowMapNet& map, double t, const DomainShape& domain, double h = 1.0 / 64);

/// The pieces of adaptive flow-map stepping that depend on what is being fitted. Indices
/// refer to the global time grid.
class SubMapTrainer {
 public:
  virtual ~SubMapTrainer() = default;
  /// Start a new sub-map anchored at time index s.
  virtual void begin(std::size_t s) = 0;
  /// Train the current sub-map on indices s..i; returns the fit loss.
  virtual double fit(std::size_t s, std::size_t i) = 0;
  /// Minimum Jacobian determinant of the current sub-map over times s..i.
  virtual double min_det(std::size_t s, std::size_t i) = 0;
  /// Remember the current sub-map as the last one satisfying the threshold.
  virtual void keep() = 0;
  /// Commit the remembered sub-map for the interval [s, e].
  virtual void freeze(std::size_t s, std::size_t e) = 0;
};

struct IntervalRecord {
  double t_start = 0.0, t_end = 0.0;
  double loss = 0.0;
  double min_det = 0.0;
  int refits = 0;
};

struct AdaptiveResult {
  std::vector<IntervalRecord> intervals;
  std::vector<std::string> events;
};

/// A one-step interval already violates the threshold.
class AdaptiveSteppingError : public NumericalError {
 public:
  AdaptiveSteppingError(double t, double det);
  double time() const { return t_; }

 private:
  double t_;
};

/// Extends the current interval one grid time at a time, refitting each
/// time; when the monitored determinant drops to delta or below, the last
/// sub-map that satisfied the threshold is frozen at the previous grid time
/// and a new sub-map starts there.
AdaptiveResult adaptive_time_stepping(SubMapTrainer& trainer, std::span<const double> times, double delta);

/// Flow-map trainer over a trajectory table.
class FlowMapTrainer : public SubMapTrainer {
 public:
  struct Options {
    std::vector<int> hidden{64, 64, 64, 64};
    std::uint64_t seed = 0;
    double grid_spacing = 1.0 / 64;
    lm::LmConfig lm;
  };
  FlowMapTrainer(const TrajectoryTable& traj, std::vector<Vec3> anchors, DomainShape domain, Options opt);

  void begin(std::size_t s) override;
  double fit(std::size_t s, std::size_t i) override;
  double min_det(std::size_t s, std::size_t i) override;
  void keep() override;
  void freeze(std::size_t s, std::size_t e) override;

  const std::vector<FlowMapNet>& frozen() const { return frozen_; }
  const std::vector<double>& frozen_losses() const { return frozen_losses_; }

 private:
  const TrajectoryTable& traj_;
  std::vector<Vec3> anchors_;
  DomainShape domain_;
  std::vector<Vec3> nodes_;
  Options opt_;
  FlowMapNet current_, kept_;
  double current_loss_ = 0.0, kept_loss_ = 0.0;
  int begun_ = 0;
  std::vector<FlowMapNet> frozen_;
  std::vector<double> frozen_losses_;
};

struct LevelSetLearnConfig {
  int n_interface = 100;
  int n_anchor = 200;
  int n_times = 20;  // grid t_j = j T / n_times, j = 0..n_times
  std::vector<int> hidden{64, 64, 64, 64};
  bool adaptive = true;
  double delta = 0.2;
  double grid_spacing = 1.0 / 64;
  int rk_steps_per_unit = 100;
  std::uint64_t seed = 0;
  lm::LmConfig lm;
};

struct LevelSetLearnResult {
  LevelSetField field;
  AdaptiveResult steps;
  TrajectoryTable trajectories;
  double flow_error = 0.0;
};

/// Learns a neural composite level set for a benchmark from its velocity and
/// initial interface.
LevelSetLearnResult learn_level_set(const Benchmark& bench, const LevelSetLearnConfig& cfg);

/// Mean over table entries of |X(X_RK(x_i, t_j), t_j; 0) - x_i|^2 for the
/// composite inverse map.
double flowmap_error(const LevelSetField& ls, const TrajectoryTable& traj);

/// Symmetric Hausdorff distance, Euclidean in the first dim coordinates.
/// Throws std::invalid_argument on an empty set.
double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b, int dim);

/// Points of the zero set of f on the domain's bounding box: sign changes on
/// grid edges (resolution cells per axis), refined along each edge.
std::vector<Vec3> zero_set_2d(const std::function<double(const Vec3&)>& f, const DomainShape& domain,
                              int resolution);

}  // namespace xipinn
