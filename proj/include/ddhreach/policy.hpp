#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"
#include "ddhreach/solver.hpp"
#include "ddhreach/systems.hpp"

namespace ddhreach {

/// A value field together with its per-axis central-difference gradients.
class ValueGradient {
 public:
  explicit ValueGradient(ScalarField value);

  const ScalarField& value() const { return value_; }
  Interpolation value_at(std::span<const double> x) const { return interpolate(value_, x); }
  /// Interpolated gradient; `clamped` is set when x lay off the grid.
  std::vector<double> gradient_at(std::span<const double> x, bool* clamped = nullptr) const;

 private:
  ScalarField value_;
  std::vector<ScalarField> grads_;
};

/// Everything the data-driven policies need from a solve.
class PolicyContext {
 public:
  /// With `time_varying`, queries at time-to-go tau use the stored history
  /// field at the smallest stored time >= tau; otherwise the final field.
  PolicyContext(const SolveResult& result, HamiltonianSpec spec, double epsilon, double horizon,
                bool time_varying = false);
  /// Context around a bare field (e.g. the target level function).
  PolicyContext(ScalarField value, HamiltonianSpec spec, double epsilon, double horizon);

  const HamiltonianSpec& spec() const { return spec_; }
  double epsilon() const { return epsilon_; }
  double horizon() const { return horizon_; }
  std::size_t control_dim() const { return n_u_; }
  const Grid& grid() const { return fields_.back().value().grid(); }
  /// Field used at time-to-go tau.
  const ValueGradient& at(double tau) const;
  const ValueGradient& final_field() const { return fields_.back(); }

 private:
  HamiltonianSpec spec_;
  double epsilon_;
  double horizon_;
  std::size_t n_u_ = 0;
  std::vector<double> times_;
  std::vector<ValueGradient> fields_;
};

struct SafeAction {
  std::vector<double> control;
  /// DDH argmax (the first DDH part for modular specs).
  std::optional<std::size_t> index;
  /// A G-bound branch was active: no data control exists, use the backup.
  bool fallback = false;
};

/// Control of the maximizing sample at the interpolated value gradient.
/// Throws when x is off the grid unless `allow_clamp`.
SafeAction safe_action(const PolicyContext& ctx, std::span<const double> x, double tau,
                       bool allow_clamp = false);
inline SafeAction safe_action(const PolicyContext& ctx, std::span<const double> x) {
  return safe_action(ctx, x, ctx.horizon());
}

/// Control extraction for an arbitrary spec at a given costate.
SafeAction extract_control(const HamiltonianSpec& spec, std::span<const double> x,
                           std::span<const double> p, std::size_t control_dim);

/// Three-way switch: backup inside the target, the data-driven safe action
/// where the value is below epsilon (or the query is off the grid), and the
/// exploration policy elsewhere. `t` is elapsed rollout time.
PolicyDecision switching_policy(const PolicyContext& ctx, const ScalarField& l,
                                const Policy& backup, const Policy& explore,
                                std::span<const double> x, double t);

/// The safe policy alone, as a rollout policy.
Policy make_safe_policy(const PolicyContext& ctx, Policy backup);

}  // namespace ddhreach
