#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"

namespace ddhreach {

struct AvoidSets {
  ScalarField g;  // unsafe where g <= 0
};

struct ReachAvoidSets {
  ScalarField l;  // target where l >= 0
  ScalarField g;
};

struct ProblemSpec {
  std::variant<AvoidSets, ReachAvoidSets> kind;
  double horizon = 1.0;
  HamiltonianSpec hamiltonian;

  const Grid& grid() const;
  bool reach_avoid() const { return std::holds_alternative<ReachAvoidSets>(kind); }
  const ScalarField& g() const;
  /// min(l, g) for reach-avoid, g for avoid.
  ScalarField terminal() const;
  void validate() const;
};

struct SolveConfig {
  double cfl_factor = 0.5;
  /// Per-axis Lax-Friedrichs coefficients; empty means auto_dissipation.
  std::vector<double> dissipation;
  /// Fixed step length; 0 derives it from the CFL factor and dissipation.
  double dt = 0.0;
  bool store_history = false;
  /// Minimum time between stored history fields; 0 stores every step.
  double history_interval = 0.0;
  double convergence_tol = 0.0;
  /// Two-stage TVD Runge-Kutta instead of forward Euler.
  bool rk2 = false;
  std::size_t workers = 1;
  CandidateOptions candidates;
};

struct TimedField {
  double time;
  ScalarField field;
};

struct SolveResult {
  ScalarField final_value;
  std::vector<TimedField> history;
  IndexSet used_indices;
  std::size_t steps_taken = 0;
  bool converged_early = false;
  double final_time = 0.0;
  double horizon = 0.0;
  double dt = 0.0;
  double cfl_factor = 0.0;
  std::vector<double> dissipation;
  CandidateStats candidate_stats;
};

/// Per-axis bound on |dH/dp_j| over the grid domain.
std::vector<double> auto_dissipation(const HamiltonianSpec& spec, const Grid& grid);

/// Step length cfl / sum_j(alpha_j / dx_j), which keeps the scheme monotone.
double cfl_time_step(const Grid& grid, const std::vector<double>& alpha, double cfl_factor);

/// H(x, (p- + p+)/2) + 1/2 sum_j alpha_j (p+_j - p-_j). The dissipation enters
/// with a plus sign because values march as V + dt * H.
double lf_numerical_hamiltonian(const HamiltonianSpec& spec, std::span<const double> x,
                                std::span<const double> p_minus, std::span<const double> p_plus,
                                std::span<const double> alpha);

/// V' = min(g, V + dt * H_num); returns the argmax indices used by the step.
std::pair<ScalarField, IndexSet> step_avoid(const ScalarField& v, const ScalarField& g,
                                            const HamiltonianSpec& spec,
                                            const std::vector<double>& alpha, double dt);

/// V' = min(g, max(l, V + dt * H_num)).
std::pair<ScalarField, IndexSet> step_reach_avoid(const ScalarField& v, const ScalarField& l,
                                                  const ScalarField& g,
                                                  const HamiltonianSpec& spec,
                                                  const std::vector<double>& alpha, double dt);

SolveResult solve(const ProblemSpec& problem, const SolveConfig& config = {});

/// The stored field at the smallest stored time >= tau (the final field when
/// tau exceeds every stored time).
const ScalarField& field_at_time(const SolveResult& result, double tau);

}  // namespace ddhreach
