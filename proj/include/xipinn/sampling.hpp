#pragma once

// Training and test point sets. Every generator is a pure function of its
// arguments and seed: each set kind draws from its own Philox stream.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xipinn/levelset.hpp"
#include "xipinn/problem.hpp"

namespace xipinn {

struct SamplePlan {
  int n_interior = 2000;
  int n_boundary = 400;
  int n_initial = 300;
  int n_interface = 100;
  int n_interface_times = 10;
  std::uint64_t seed = 0;
  void validate() const;
};

struct InteriorSet {
  std::vector<SpaceTime> points;
};
struct BoundarySet {
  std::vector<SpaceTime> points;
};
struct InitialSet {
  std::vector<SpaceTime> points;  // t = 0
};
struct InterfaceSet {
  std::vector<SpaceTime> points;
  std::vector<Vec3> normals;  // unit, from minus to plus side
};

struct SampleSets {
  InteriorSet interior;
  BoundarySet boundary;
  InitialSet initial;
  InterfaceSet interface;
};

/// Stream ids (second Philox key word) per set kind.
enum class SampleStream : std::uint64_t { interior = 1, boundary = 2, initial = 3, interface = 4, anchor = 5 };

/// Uniform points of the domain (rejection from the bounding box for disks).
std::vector<Vec3> sample_domain(const DomainShape& domain, int n, std::uint64_t seed, SampleStream stream);
InteriorSet sample_interior(const DomainShape& domain, double t_end, int n, std::uint64_t seed);
/// Box faces chosen with probability proportional to their measure.
BoundarySet sample_boundary(const DomainShape& domain, double t_end, int n, std::uint64_t seed);
InitialSet sample_initial(const DomainShape& domain, int n, std::uint64_t seed);

/// Uniform parameter samples of the initial interface.
std::vector<Vec3> sample_initial_interface(const Benchmark& bench, int n, std::uint64_t seed);

/// n_per_time interface points at each time. With a closed-form level set the
/// benchmark's parametrization is used directly; otherwise uniform samples of
/// the initial interface are advected by RK4. Normals come from the gradient
/// of `ls`; samples with a degenerate gradient are redrawn.
InterfaceSet sample_interface(const Benchmark& bench, const LevelSetField& ls, int n_per_time,
                              std::span<const double> times, std::uint64_t seed, int rk_steps_per_unit = 100);

/// n equispaced times 0 .. t_end (both ends included).
std::vector<double> equispaced_times(double t_end, int n);

SampleSets sample_all(const Benchmark& bench, const LevelSetField& ls, const SamplePlan& plan);

/// Tensor grid with `resolution` nodes per spatial axis and `n_times` time
/// slices, endpoints included; for disks only nodes inside are kept. Order is
/// time slowest, then x_0, x_1, x_2.
std::vector<SpaceTime> test_grid(const DomainShape& domain, double t_end, int resolution, int n_times);

/// CSV: x0,..,t,set
void write_points_csv(std::ostream& os, int dim, const SampleSets& sets);

}  // namespace xipinn
