#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddhreach/benchmarks.hpp"
#include "ddhreach/dataset.hpp"
#include "ddhreach/expansion.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"
#include "ddhreach/solver.hpp"
#include "ddhreach/systems.hpp"
#include "ddhreach/tiltrotor.hpp"

namespace ddhreach {

// A run configuration is one JSON document. Every field has a default, and
// unknown keys are rejected so a typo cannot silently change a run.

struct SystemConfig {
  /// "polynomial", "tiltrotor" or "dataset" (no dynamics: data only).
  std::string type = "polynomial";
  std::uint64_t polynomial_seed = 7;
  TiltrotorParams tiltrotor;
  // Sampling behind the tiltrotor Lipschitz constants and velocity bound.
  std::uint64_t sampling_seed = 11;
  std::size_t sampling_count = 20000;
  double lipschitz_inflation = 1.2;
  double bound_inflation = 0.1;
  /// Control grid of the polynomial backup and brute-force references.
  std::vector<std::size_t> control_counts{41, 41};
  bool operator==(const SystemConfig&) const = default;
};

struct GridConfig {
  std::vector<double> mins{-1.0, -1.0};
  std::vector<double> maxs{1.0, 1.0};
  std::vector<std::size_t> counts{61, 61};
  bool operator==(const GridConfig&) const = default;
};

/// A level-set definition.
///   "box":       margin to the intersection of `bounds` (positive inside)
///   "ball":      radius - |x - center|
///   "tiltrotor": the surrogate flight envelope margin
struct SetConfig {
  std::string type = "box";
  std::vector<AxisBound> bounds;
  std::vector<double> center;
  double radius = 0.0;
  bool operator==(const SetConfig&) const = default;
};

struct ProblemConfig {
  std::string type = "reach_avoid";  // or "avoid"
  double horizon = 1.0;
  SetConfig safe;                    // g: unsafe where g <= 0
  std::optional<SetConfig> target;   // l: reach-avoid only
  bool operator==(const ProblemConfig&) const = default;
};

/// Where Lipschitz constants come from.
///   "explicit":  `spec` as written
///   "certified": polynomial coefficient bound
///   "sampled":   tiltrotor finite-difference sampling
///   "estimate":  pairwise estimate from the dataset (never a certificate)
struct LipschitzConfig {
  std::string source = "certified";
  std::optional<LipschitzSpec> spec;
  LipschitzKind estimate_kind = LipschitzKind::kSensitivityMatrix;
  double scale = 1.0;
  bool operator==(const LipschitzConfig&) const = default;
};

struct ModularPartConfig;

struct HamiltonianConfig {
  /// "ddh", "brute_force", "g_bounded" or "modular".
  std::string type = "ddh";
  LipschitzConfig lipschitz;                   // ddh
  std::vector<std::size_t> control_counts;     // brute_force
  std::string dynamics = "system";             // brute_force: "system" or "tilt_kinematics"
  std::vector<HamiltonianConfig> inner;        // g_bounded: exactly one
  std::optional<Box> bound;                    // g_bounded: absent = derived from the system
  std::vector<ModularPartConfig> parts;        // modular
  bool operator==(const HamiltonianConfig&) const;
};

struct ModularPartConfig {
  std::vector<std::size_t> costate;
  std::vector<std::size_t> controls;
  HamiltonianConfig hamiltonian;
  bool operator==(const ModularPartConfig&) const = default;
};

struct DatasetConfig {
  std::optional<std::string> path;  // CSV file
  std::size_t collect = 0;          // uniform samples when no path is given
  bool operator==(const DatasetConfig&) const = default;
};

struct SolverConfig {
  double cfl_factor = 0.5;
  /// "auto", "apriori" (valid for any data within the system velocity
  /// bound) or "explicit" with `values`.
  std::string dissipation = "apriori";
  std::vector<double> values;
  double dt = 0.0;
  bool store_history = false;
  double history_interval = 0.0;
  double convergence_tol = 0.0;
  bool rk2 = false;
  bool candidates = true;
  std::size_t candidate_block = 1;
  bool operator==(const SolverConfig&) const = default;
};

struct EvalConfig {
  std::string policy = "safe";  // or "switching"
  std::vector<std::vector<double>> initial_states;
  /// Extra starts drawn from grid points one cell inside the safe set.
  std::size_t sample_inside = 0;
  double duration = 1.0;
  double dt = 0.01;
  bool time_varying = true;
  bool operator==(const EvalConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "run";
  SystemConfig system;
  GridConfig grid;
  ProblemConfig problem;
  HamiltonianConfig hamiltonian;
  DatasetConfig dataset;
  SolverConfig solver;
  ExpansionConfig expansion;
  EvalConfig eval;
  bool operator==(const RunConfig&) const;
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong types or failed
/// cross-reference checks.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every field written out; parse_config inverts it.
std::string serialize_config(const RunConfig& config);

/// Cross-reference checks: DDH needs a data source, brute force needs
/// dynamics, dimensions agree. Throws ConfigError.
void validate_config(const RunConfig& config);

/// The polynomial benchmark layout (clear box, central ball target).
RunConfig default_polynomial_config(std::uint64_t seed);
/// The surrogate tiltrotor layout with the modular Hamiltonian.
RunConfig default_tiltrotor_config();

/// Objects a command needs, built once from a validated configuration.
class RunSetup {
 public:
  explicit RunSetup(RunConfig config);

  const RunConfig& config() const { return config_; }
  /// Null for "dataset" systems.
  std::shared_ptr<const Dynamics> dynamics() const { return dynamics_; }
  const Grid& grid() const { return grid_; }
  const ScalarField& g() const { return g_; }
  /// Target level function; constant -1 for avoid problems.
  const ScalarField& l() const { return l_; }
  double g_exact(std::span<const double> x) const;
  double l_exact(std::span<const double> x) const;

  /// Dataset from the configured file or a fresh uniform collection.
  std::shared_ptr<const Dataset> load_or_collect() const;
  Dataset collect(std::size_t count) const;

  HamiltonianSpec hamiltonian(std::shared_ptr<const Dataset> data) const;
  ProblemSpec problem(std::shared_ptr<const Dataset> data) const;
  /// Solver settings. "auto" dissipation is left empty so every solve derives
  /// it from its own data.
  SolveConfig solve_config(const HamiltonianSpec& spec, std::size_t workers) const;

  Policy backup() const;
  ExploreFactory explore() const;
  ExpansionProblem expansion_problem() const;

 private:
  RunConfig config_;
  std::shared_ptr<const Dynamics> dynamics_;
  std::shared_ptr<const PolynomialSystem> polynomial_;
  std::shared_ptr<const TiltrotorModel> tiltrotor_;
  Grid grid_;
  ScalarField g_, l_;
  std::optional<LipschitzSpec> system_lipschitz_;
  std::optional<Box> velocity_bound_;

  LipschitzSpec resolve_lipschitz(const LipschitzConfig& c, const Dataset* data) const;
  HamiltonianSpec build(const HamiltonianConfig& c, const std::shared_ptr<const Dataset>& data) const;
};

}  // namespace ddhreach
