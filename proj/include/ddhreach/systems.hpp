#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ddhreach/dataset.hpp"

namespace ddhreach {

/// Axis-aligned box, used for control sets and velocity bounds.
struct Box {
  std::vector<double> lower, upper;

  std::size_t dims() const { return lower.size(); }
  void validate() const;
  std::vector<double> center() const;
  std::vector<double> half_width() const;
  void clamp(std::span<double> u) const;
  bool contains(std::span<const double> u, double tol = 0.0) const;
  bool operator==(const Box&) const = default;
};

/// Cartesian product of per-axis linspaces over a box (endpoints included).
class ControlGrid {
 public:
  ControlGrid(const Box& box, std::vector<std::size_t> counts);

  std::size_t dims() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::vector<double>& axis(std::size_t j) const { return axes_[j]; }
  std::span<const double> control(std::size_t k) const {
    return {points_.data() + k * dims(), dims()};
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::vector<double>> axes_;
  std::vector<double> points_;  // row-major, last axis fastest
  std::size_t size_ = 0;
};

struct ControlMax {
  double value = 0.0;
  std::size_t index = 0;  // smallest grid index attaining the maximum
};

/// Deterministic vector field x' = f(x, u) over a box of controls.
class Dynamics {
 public:
  virtual ~Dynamics() = default;

  virtual std::size_t state_dim() const = 0;
  virtual const Box& control_box() const = 0;
  std::size_t control_dim() const { return control_box().dims(); }

  virtual void velocity(std::span<const double> x, std::span<const double> u,
                        std::span<double> v) const = 0;
  std::vector<double> velocity(std::span<const double> x,
                               std::span<const double> u) const;

  /// max over the control grid of p^T f(x, u). The default scans every grid
  /// control; systems with exploitable structure override it.
  virtual ControlMax max_over_controls(std::span<const double> x,
                                       std::span<const double> p,
                                       const ControlGrid& grid) const;

  ControlMax scan_controls(std::span<const double> x, std::span<const double> p,
                           const ControlGrid& grid) const;
};

/// Dynamics from a callable; used for small analytic test systems.
class FunctionDynamics final : public Dynamics {
 public:
  using Field = std::function<void(std::span<const double>, std::span<const double>,
                                   std::span<double>)>;
  FunctionDynamics(std::size_t state_dim, Box controls, Field f);

  std::size_t state_dim() const override { return n_x_; }
  const Box& control_box() const override { return box_; }
  using Dynamics::velocity;
  void velocity(std::span<const double> x, std::span<const double> u,
                std::span<double> v) const override;

 private:
  std::size_t n_x_;
  Box box_;
  Field f_;
};

// ---------------------------------------------------------------------------
// Random polynomial benchmark:
//   f_i(x, u) = p_i(u) + q_i(u) x_1 + r_i(u) x_2,  i = 1, 2,
// with p_i, q_i, r_i quadratic in u = (u_1, u_2) over the monomials
// {1, u1, u2, u1^2, u1 u2, u2^2}, coefficients uniform in [-2, 2] and the
// constant term of p_i forced to zero so f(0, 0) = 0.
//
// Coefficients are drawn from Rng(seed) in the order output, multiplier
// (p, q, r), monomial; the p constant draws are consumed then zeroed.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kPolyMonomials = 6;

class PolynomialSystem final : public Dynamics {
 public:
  /// coeffs[output][multiplier][monomial]; multiplier 0 = p, 1 = q, 2 = r.
  using Coefficients = std::array<std::array<std::array<double, kPolyMonomials>, 3>, 2>;

  PolynomialSystem(std::uint64_t seed, Coefficients coeffs);

  std::uint64_t seed() const { return seed_; }
  const Coefficients& coefficients() const { return coeffs_; }

  std::size_t state_dim() const override { return 2; }
  const Box& control_box() const override { return box_; }
  using Dynamics::velocity;
  void velocity(std::span<const double> x, std::span<const double> u,
                std::span<double> v) const override;
  /// Exact grid maximum: p^T f is quadratic in u2 for each u1 row, so only
  /// the row endpoints and the grid points around the vertex are candidates.
  ControlMax max_over_controls(std::span<const double> x, std::span<const double> p,
                               const ControlGrid& grid) const override;

  static std::array<double, kPolyMonomials> monomials(double u1, double u2);

 private:
  std::uint64_t seed_;
  Coefficients coeffs_;
  Box box_;
};

PolynomialSystem make_polynomial_system(std::uint64_t seed);

struct PolynomialLipschitz {
  LipschitzSpec grid_estimate;  // max over the control grid of |q_i|, |r_i|
  LipschitzSpec certified;      // sum of absolute coefficients (valid on [-1,1]^2)
};

PolynomialLipschitz polynomial_true_lipschitz(const PolynomialSystem& sys,
                                              std::vector<std::size_t> control_counts);

/// Per-output bound on |f_i| over the state box and U from the coefficients.
Box polynomial_velocity_bound(const PolynomialSystem& sys, const Box& state_box);

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

enum class Branch : std::uint8_t { kNone, kBackup, kSafe, kExplore };
const char* branch_name(Branch b);

struct PolicyDecision {
  std::vector<double> control;
  Branch branch = Branch::kNone;
  bool fallback = false;  // safe branch had no data control; backup applied
};

/// Closed-loop policy: (state, elapsed time) -> control.
using Policy = std::function<PolicyDecision(std::span<const double> x, double t)>;

struct Trajectory {
  std::vector<double> times;
  Dataset samples;
  std::vector<Branch> branches;
  std::vector<std::uint8_t> fallbacks;
  bool diverged = false;
  std::string divergence_reason;

  explicit Trajectory(const Dynamics& dyn) : samples(dyn.state_dim(), dyn.control_dim()) {}
};

/// Classical RK4 under zero-order hold: the policy is queried once per sample
/// time and each step records (x, u, f(x, u)) before integrating. Produces
/// floor(T / dt) + 1 samples unless the state stops being finite.
Trajectory rk4_rollout(const Dynamics& dyn, const Policy& policy,
                       std::span<const double> x0, double duration, double dt);

/// One RK4 step of length dt with the control held constant.
std::vector<double> rk4_step(const Dynamics& dyn, std::span<const double> x,
                             std::span<const double> u, double dt);

}  // namespace ddhreach
