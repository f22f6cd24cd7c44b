#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ddhreach/dataset.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/systems.hpp"

namespace ddhreach {

/// Largest state dimension the evaluation kernels support.
inline constexpr std::size_t kMaxStateDims = 8;

struct BallRadius {
  double r = 0.0;
};
struct RectRadii {
  std::vector<double> r;
};
using UncertaintyRadius = std::variant<BallRadius, RectRadii>;

/// Size of the set guaranteed to contain f(x, u) - f(x_i, u).
UncertaintyRadius uncertainty_radius(const LipschitzSpec& lip, std::span<const double> x,
                                     std::span<const double> x_i);

/// min of p^T w over the ball v_i + B(r): p^T v_i - r |p|, and 0 when p = 0.
double ddh_inner_ball(std::span<const double> p, std::span<const double> v_i, double r);

/// min of p^T w over the box v_i + [-r, r]: sum_j p_j v_ij - |p_j| r_j.
double ddh_inner_rect(std::span<const double> p, std::span<const double> v_i,
                      std::span<const double> r);

/// Hyperrectangular bound G(x) on the achievable velocities. Constant unless
/// `map` is set.
struct VelocityBound {
  Box box;
  std::function<Box(std::span<const double>)> map;

  Box at(std::span<const double> x) const { return map ? map(x) : box; }
  bool state_dependent() const { return static_cast<bool>(map); }
};

/// min of p^T v over G(x).
double g_bounded_min(std::span<const double> p, const VelocityBound& bound,
                     std::span<const double> x);

struct HamiltonianSpec;

struct DdhSpec {
  std::shared_ptr<const Dataset> data;
  LipschitzSpec lip;
};

struct BruteForceSpec {
  std::shared_ptr<const Dynamics> dynamics;
  std::shared_ptr<const ControlGrid> controls;
};

struct GBoundedSpec {
  std::shared_ptr<const HamiltonianSpec> inner;
  VelocityBound bound;
};

/// One additive piece of a modular Hamiltonian. The part sees the full state
/// and the costate with every entry outside `costate` zeroed. `controls`
/// names the control components this part decides when extracting a policy.
struct ModularPart {
  std::vector<std::size_t> costate;
  std::vector<std::size_t> controls;
  std::shared_ptr<const HamiltonianSpec> spec;
};

struct ModularSpec {
  std::vector<ModularPart> parts;
};

struct HamiltonianSpec {
  std::variant<DdhSpec, BruteForceSpec, GBoundedSpec, ModularSpec> form;

  static HamiltonianSpec ddh(std::shared_ptr<const Dataset> data, LipschitzSpec lip);
  static HamiltonianSpec brute_force(std::shared_ptr<const Dynamics> dynamics,
                                     std::vector<std::size_t> control_counts);
  static HamiltonianSpec g_bounded(HamiltonianSpec inner, VelocityBound bound);
  static HamiltonianSpec modular(std::vector<ModularPart> parts);

  /// Throws ConfigError if this Hamiltonian is inconsistent with state dimension n_x.
  void validate(std::size_t n_x) const;
};

/// The dataset shared by every DDH node, or null when there is none. Throws
/// ConfigError if DDH nodes reference different datasets.
const Dataset* spec_dataset(const HamiltonianSpec& spec);

/// Copy of `spec` with every DDH node pointed at `data`.
HamiltonianSpec with_dataset(const HamiltonianSpec& spec, std::shared_ptr<const Dataset> data);

/// Copy of `spec` with every Lipschitz constant multiplied by c.
HamiltonianSpec with_scaled_lipschitz(const HamiltonianSpec& spec, double c);

struct HamiltonianResult {
  double value = 0.0;
  /// Winning data index when a DDH was the active branch.
  std::optional<std::size_t> argmax_index;
  /// Modular only: per-part winning index (or none) and brute-force control.
  std::vector<std::optional<std::size_t>> part_indices;
  /// BruteForce only: index into the control grid of the maximizer.
  std::optional<std::size_t> control_index;
};

/// max_i of the inner minimum; ties go to the smallest index. p = 0 gives
/// value 0 at index 0.
HamiltonianResult ddh(std::span<const double> x, std::span<const double> p,
                      const Dataset& data, const LipschitzSpec& lip);

/// max over the control grid of p^T f(x, u).
HamiltonianResult brute_force_hamiltonian(const Dynamics& dynamics, const ControlGrid& controls,
                                          std::span<const double> x,
                                          std::span<const double> p);

/// Reference evaluation by full linear scans.
HamiltonianResult evaluate(const HamiltonianSpec& spec, std::span<const double> x,
                           std::span<const double> p);

struct CandidateOptions {
  bool enabled = true;
  /// Grid points per block edge sharing one candidate list.
  std::size_t block = 1;
  std::size_t workers = 1;
};

struct CandidateStats {
  std::size_t lists = 0;
  std::size_t total_candidates = 0;
  std::size_t max_candidates = 0;
  std::size_t dataset_size = 0;
};

/// A spec bound to one grid for repeated evaluation at grid points. For every
/// block of grid points and costate sign pattern it keeps only the samples
/// that are not strictly beaten by another sample (or by the velocity bound)
/// everywhere in the block. The discarded samples can never be the argmax,
/// so values and indices are bit-identical to `evaluate`.
class CompiledHamiltonian {
 public:
  CompiledHamiltonian(const HamiltonianSpec& spec, const Grid& grid, CandidateOptions options = {});
  ~CompiledHamiltonian();
  CompiledHamiltonian(CompiledHamiltonian&&) noexcept;
  CompiledHamiltonian& operator=(CompiledHamiltonian&&) noexcept;

  /// Value at grid point `flat` with coordinates x. When a DDH branch is
  /// active its argmax index i sets used[i] = 1 (used may be null).
  double evaluate(std::size_t flat, const double* x, const double* p, std::uint8_t* used) const;

  /// Size of the dataset that `used` indexes (0 without DDH nodes).
  std::size_t dataset_size() const;
  CandidateStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ddhreach
