#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ddhreach/dataset.hpp"
#include "ddhreach/expansion.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"
#include "ddhreach/rng.hpp"
#include "ddhreach/systems.hpp"
#include "ddhreach/tiltrotor.hpp"

namespace ddhreach {

/// Uniform samples over the grid domain and control box with exact
/// velocities.
Dataset collect_uniform(const Dynamics& dynamics, const Grid& domain, std::size_t count, Rng& rng);

/// Dissipation valid for every dataset whose velocities lie in `velocity`:
/// max |velocity_j| plus the largest radius component over the domain.
std::vector<double> apriori_dissipation(const LipschitzSpec& lip, const Box& velocity, const Grid& grid);

/// Elementwise maximum.
std::vector<double> max_alpha(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Random polynomial system on [-1, 1]^2: unsafe outside |x_j| <= safe_half,
// target ball of radius target_radius around the origin.

struct PolynomialSetup {
  std::uint64_t seed = 7;
  std::size_t grid_points = 61;
  double safe_half = 0.8;
  double target_radius = 0.2;
  std::vector<std::size_t> control_counts{41, 41};
};

struct PolynomialBenchmark {
  PolynomialSetup setup;
  std::shared_ptr<const PolynomialSystem> system;
  Grid grid;
  ScalarField g;
  ScalarField l;
  LipschitzSpec certified;
  Box velocity_bound;

  double g_exact(std::span<const double> x) const;
  double l_exact(std::span<const double> x) const;
  /// Greedy Lyapunov recovery: the control-grid minimizer of x^T f(x, u).
  Policy backup() const;
};

PolynomialBenchmark make_polynomial_benchmark(const PolynomialSetup& setup = {});

/// Expansion problem on the polynomial benchmark with certified constants
/// and a dissipation fixed a priori so every iteration marches identically.
ExpansionProblem polynomial_expansion_problem(const PolynomialBenchmark& bench, double cfl = 0.5);

// ---------------------------------------------------------------------------
// Surrogate tiltrotor.

struct TiltrotorSetup {
  TiltrotorParams params;
  std::vector<double> mins{10.0, -20.0 * 0.017453292519943295, 0.0};
  std::vector<double> maxs{70.0, 20.0 * 0.017453292519943295, 90.0 * 0.017453292519943295};
  std::vector<std::size_t> counts{61, 31, 31};
  TiltrotorTargetBox target;
  std::uint64_t seed = 11;
  std::size_t lipschitz_samples = 20000;
  double lipschitz_inflation = 1.2;
  double bound_inflation = 0.1;
  std::size_t tilt_control_points = 3;
};

struct TiltrotorBenchmark {
  TiltrotorSetup setup;
  std::shared_ptr<const TiltrotorModel> model;
  Grid grid;
  ScalarField g;
  ScalarField l;
  LipschitzSpec lip;
  Box velocity_bound;
  TiltrotorBackup recovery;

  double g_exact(std::span<const double> x) const { return tiltrotor_safety(x); }
  double l_exact(std::span<const double> x) const;
  Policy backup() const;
  /// Known tilt kinematics plus a G-bounded DDH over (v, gamma).
  HamiltonianSpec modular(std::shared_ptr<const Dataset> data) const;
  /// G-bounded DDH over the whole state.
  HamiltonianSpec full(std::shared_ptr<const Dataset> data) const;
  /// Dissipation valid for both Hamiltonians above.
  std::vector<double> dissipation() const;
};

TiltrotorBenchmark make_tiltrotor_benchmark(const TiltrotorSetup& setup = {});

ExpansionProblem tiltrotor_expansion_problem(const TiltrotorBenchmark& bench, bool modular,
                                             double cfl = 0.5);

}  // namespace ddhreach
