#pragma once

// Moving-interface problem instances: coefficients, interface motion, exact
// solutions and the data (source, boundary, initial, jump) manufactured from
// them, plus the four built-in benchmarks ex1..ex4.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xipinn/jet2.hpp"

namespace xipinn {

/// Spatial point with up to three coordinates plus time. The active number of
/// coordinates is the problem's spatial dimension; unused entries stay zero.
struct SpaceTime {
  std::array<double, 3> x{};
  double t = 0.0;
};

using Vec3 = std::array<double, 3>;

/// Closed-form space-time field. The argument holds dim + 1 jets
/// (x_0 .. x_{dim-1}, t); the result has the field's arity.
using Field = std::function<std::vector<Jet2>(std::span<const Jet2> xt)>;

/// Value, spatial gradient, time derivative and Laplacian of one component.
struct FieldSample {
  double value = 0.0;
  Vec3 grad{};
  double dt = 0.0;
  double lap = 0.0;
};

/// Evaluate all components of a field with derivatives at p.
std::vector<FieldSample> sample_field(const Field& f, int dim, const SpaceTime& p);
/// Values only (no derivative seeding).
std::vector<double> field_values(const Field& f, int dim, const SpaceTime& p);

enum class Region { minus = -1, plus = 1 };

/// Region from a level-set value. Throws InterfacePointError when |phi| <= tol.
Region classify_region(double phi, double tol = 1e-10);

enum class PdeKind { parabolic, oseen };
enum class JumpKind { zero, nonzero };

struct DomainShape {
  enum class Kind { box, disk };
  Kind kind = Kind::box;
  int dim = 2;
  Vec3 lo{}, hi{};      // box bounds (also the bounding box of a disk)
  Vec3 center{};        // disk only
  double radius = 0.0;  // disk only

  static DomainShape box(int dim, Vec3 lo, Vec3 hi);
  static DomainShape disk(Vec3 center, double radius);
  bool contains(const Vec3& x) const;
  /// Euclidean distance from x to the boundary (x inside).
  double boundary_distance(const Vec3& x) const;
};

struct ProblemSpec {
  std::string name;
  PdeKind kind = PdeKind::parabolic;
  int spatial_dim = 2;
  DomainShape domain;
  double t_end = 1.0;
  // Diffusion coefficients; for the Oseen system these are the viscosities.
  double beta_plus = 1.0;
  double beta_minus = 1.0;
  JumpKind jump_kind = JumpKind::zero;
  /// Interface velocity; also the advection velocity of the Oseen system.
  Field velocity;

  double beta(Region r) const { return r == Region::plus ? beta_plus : beta_minus; }
  /// Output arity of the unknown: 1, or dim + 1 (velocity then pressure).
  int solution_arity() const { return kind == PdeKind::oseen ? spatial_dim + 1 : 1; }
  /// Number of components carrying PDE/jump equations (velocity only for Oseen).
  int equation_arity() const { return kind == PdeKind::oseen ? spatial_dim : 1; }
  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

struct ExactSolution {
  Field u_plus;
  Field u_minus;
  int arity = 1;

  const Field& branch(Region r) const { return r == Region::plus ? u_plus : u_minus; }
  std::vector<FieldSample> derivatives(Region r, int dim, const SpaceTime& p) const {
    return sample_field(branch(r), dim, p);
  }
};

/// Maps interface parameters (dim - 1 angles) and a time to a point on the
/// interface at that time.
using InterfaceParametrization = std::function<Vec3(std::span<const double> params, double t)>;

struct LevelSetDescriptor {
  Field phi0;                        // initial level set; the time argument is ignored
  std::optional<Field> analytic;     // phi(x, t) when a closed form exists
  InterfaceParametrization interface;  // valid for all t when `analytic` is set, else t = 0 only
  /// Parameter ranges (dim - 1 entries) for `interface`.
  std::vector<std::pair<double, double>> param_ranges;
};

struct Benchmark {
  ProblemSpec spec;
  ExactSolution exact;
  LevelSetDescriptor level_set;
};

/// Builds ex1, ex2, ex3 or ex4. Throws std::invalid_argument for other names.
Benchmark benchmark_registry(std::string_view name);
const std::vector<std::string>& benchmark_names();

// Manufactured data. All are evaluated from the exact-solution derivatives.

/// f = u_t - beta lap u (parabolic) or u_t + (V.grad)u - nu lap u + grad p
/// (Oseen, one entry per velocity component).
std::vector<double> manufacture_source(const ProblemSpec& spec, const ExactSolution& exact,
                                       const SpaceTime& p, Region region);
/// Same, classifying the region with the benchmark's closed-form level set.
/// Throws InterfacePointError when the point lies on the interface.
std::vector<double> manufacture_source(const Benchmark& bench, const SpaceTime& p);

/// Dirichlet data from the plus-region solution (all solution components).
std::vector<double> boundary_data(const ProblemSpec& spec, const ExactSolution& exact,
                                  const SpaceTime& p);
/// u0 at t = 0 for the given region (equation components only).
std::vector<double> initial_data(const ProblemSpec& spec, const ExactSolution& exact,
                                 const Vec3& x, Region region);
/// h_D = u+ - u- on the interface (equation components).
std::vector<double> jump_value_data(const ProblemSpec& spec, const ExactSolution& exact,
                                    const SpaceTime& p);
/// h_N = [beta grad u . n] (parabolic) or [nu d_n u - p n] (Oseen).
std::vector<double> jump_flux_data(const ProblemSpec& spec, const ExactSolution& exact,
                                   const SpaceTime& p, const Vec3& normal);

/// Closed-form level-set value of a benchmark (requires level_set.analytic).
double analytic_phi(const Benchmark& bench, const SpaceTime& p);

}  // namespace xipinn
