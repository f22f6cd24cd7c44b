#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddhreach/dataset.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"
#include "ddhreach/policy.hpp"
#include "ddhreach/rng.hpp"
#include "ddhreach/solver.hpp"
#include "ddhreach/systems.hpp"

namespace ddhreach {

struct ExpansionConfig {
  std::size_t n_iter = 5;
  std::size_t n_traj_first = 10;  // rollouts at k = 0
  std::size_t n_traj = 10;        // rollouts at k >= 1
  double rollout_duration = 1.0;
  double rollout_dt = 0.01;
  double horizon = 1.0;  // reach-avoid horizon of every solve
  double epsilon = 0.05;
  double boundary_band = 0.1;
  bool density_weighting = false;
  bool prune = false;
  std::uint64_t seed = 0;
  double explore_std_fraction = 0.25;
  /// Pre-flight: rollouts from at most this many target grid points.
  std::size_t preflight_rollouts = 64;
  double preflight_margin = 1e-6;
  std::size_t workers = 1;

  void validate() const;
  bool operator==(const ExpansionConfig&) const = default;
};

/// Geometry, known structure and solver settings of an expansion run.
struct ExpansionProblem {
  ScalarField l;  // target: l >= 0
  ScalarField g;  // unsafe: g <= 0
  /// Exact level functions evaluated along rollouts.
  std::function<double(std::span<const double>)> l_exact;
  std::function<double(std::span<const double>)> g_exact;
  /// Hamiltonian whose DDH nodes are re-pointed at the growing dataset.
  HamiltonianSpec hamiltonian;
  SolveConfig solve;
};

struct BranchCounts {
  std::size_t backup = 0, safe = 0, explore = 0, fallback = 0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t dataset_before = 0;
  std::size_t dataset_after = 0;
  std::size_t pruned_size = 0;  // equals dataset_after when pruning is off
  std::size_t used_indices = 0;
  double safe_volume = 0.0;     // fraction of grid points with V >= 0
  double min_g = 0.0;           // over every recorded rollout sample
  BranchCounts branches;
  std::size_t solve_steps = 0;
  double wall_seconds = 0.0;
};

/// Samples n initial states among grid points of the band
/// {0 <= V < band, l < 0}, falling back to {V >= 0}. Without replacement when
/// the pool is large enough. With `weighted`, a point's probability is
/// proportional to its distance to the nearest dataset state.
std::vector<std::vector<double>> get_init(const ScalarField& value, const ScalarField& l,
                                          const Dataset& data, std::size_t n, double band,
                                          bool weighted, Rng& rng);

/// Per-point selection weights used by get_init (exposed for inspection).
std::vector<double> init_weights(const Grid& grid, const std::vector<std::size_t>& pool,
                                 const Dataset& data);

/// Gaussian exploration around a mean drawn uniformly in the control box,
/// per-axis std = std_fraction * half-width, clamped to the box.
Policy make_gaussian_explore(const Box& controls, std::uint64_t seed, std::size_t iteration,
                             std::size_t rollout, double std_fraction);

using ExploreFactory = std::function<Policy(std::size_t iteration, std::size_t rollout)>;

struct ExpansionState {
  std::size_t iteration = 0;
  std::shared_ptr<const Dataset> data;
  std::optional<SolveResult> value;  // absent at k = 0 (the target stands in)
};

struct IterationOutput {
  const IterationRecord& record;
  const SolveResult& value;
  const Dataset& data;  // dataset after pruning
  const std::vector<Trajectory>& trajectories;
  const std::vector<std::vector<double>>& values_along;  // switching value per sample
  const std::map<std::size_t, std::size_t>* prune_map;  // null without pruning
};

using IterationSink = std::function<void(const IterationOutput&)>;

/// Checks X_T and X_U are disjoint on the grid and that rollouts from target
/// points under the backup stay in {l >= -margin} and {g > 0}. Throws
/// SafetyViolation on failure.
void preflight(const ExpansionProblem& problem, const Dynamics& dynamics, const Policy& backup,
               const ExpansionConfig& config);

/// One pass of the experiment loop: rollouts under the switching policy,
/// dataset growth, a reach-avoid solve and optional pruning.
ExpansionState run_iteration(const ExpansionState& state, const ExpansionProblem& problem,
                             const Dynamics& dynamics, const Policy& backup,
                             const ExploreFactory& explore, const ExpansionConfig& config,
                             IterationRecord& record, const IterationSink& sink = {});

struct ExpansionResult {
  ExpansionState state;
  ScalarField safe_value;  // last value field, or l when no iteration ran
  std::vector<IterationRecord> records;
};

ExpansionResult expand(const ExpansionConfig& config, const ExpansionProblem& problem,
                       const Dynamics& dynamics, const Policy& backup,
                       const ExploreFactory& explore, const IterationSink& sink = {});

}  // namespace ddhreach
