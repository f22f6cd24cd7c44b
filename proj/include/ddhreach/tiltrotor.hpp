#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ddhreach/dataset.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/systems.hpp"

namespace ddhreach {

/// Longitudinal tiltrotor model with a parametric lift/drag surrogate.
/// State (v [m/s], gamma [rad], beta [rad]); control (T [N], alpha [rad],
/// delta [rad/s]). beta = 0 is cruise, beta = 90 deg is hover.
///
/// The aerodynamic coefficients interpolate linearly in beta between a
/// wing-borne cruise end and a rotor-borne hover end:
///   C_L = C_L0 + C_La * alpha,   C_D = C_D0 + k * C_L^2.
/// These defaults are illustrative, not a fit to any real aircraft.
struct TiltrotorParams {
  double mass = 6000.0;
  double gravity = 9.81;
  double area = 16.8;
  double density = 1.225;
  double thrust_max_factor = 1.4;  // T_max = factor * m * g
  double alpha_min = -10.0 * 0.017453292519943295;
  double alpha_max = 20.0 * 0.017453292519943295;
  double delta_max = 7.5 * 0.017453292519943295;
  double v_floor = 1.0;

  // cruise end (beta = 0), hover end (beta = 90 deg)
  double cl0_cruise = 0.4, cl0_hover = 0.1;
  double cla_cruise = 5.7, cla_hover = 2.0;
  double cd0_cruise = 0.025, cd0_hover = 0.15;
  double k_cruise = 0.05, k_hover = 0.1;

  double thrust_max() const { return thrust_max_factor * mass * gravity; }
  Box control_box() const;
  void validate() const;
  bool operator==(const TiltrotorParams&) const = default;
};

struct AeroCoefficients {
  double cl0, cla, cd0, k;
};

/// Coefficients at tilt beta (clamped to [0, 90 deg]).
AeroCoefficients aero_coefficients(const TiltrotorParams& p, double beta);

struct LiftDrag {
  double lift, drag;
};
LiftDrag lift_drag(const TiltrotorParams& p, double v, double alpha, double beta);

class TiltrotorModel final : public Dynamics {
 public:
  explicit TiltrotorModel(TiltrotorParams params = {});
  const TiltrotorParams& params() const { return p_; }

  std::size_t state_dim() const override { return 3; }
  const Box& control_box() const override { return box_; }
  /// Throws NumericalError when v <= v_floor.
  using Dynamics::velocity;
  void velocity(std::span<const double> x, std::span<const double> u,
                std::span<double> v) const override;

 private:
  TiltrotorParams p_;
  Box box_;
};

/// The known part beta' = delta, with delta the only control.
class TiltKinematics final : public Dynamics {
 public:
  explicit TiltKinematics(double delta_max);
  std::size_t state_dim() const override { return 3; }
  const Box& control_box() const override { return box_; }
  using Dynamics::velocity;
  void velocity(std::span<const double> x, std::span<const double> u,
                std::span<double> v) const override;
  /// Linear in delta: only the grid endpoints matter.
  ControlMax max_over_controls(std::span<const double> x, std::span<const double> p,
                               const ControlGrid& grid) const override;

 private:
  Box box_;
};

struct ThrustAlpha {
  double thrust = 0.0;
  double alpha = 0.0;
  double residual = 0.0;  // max |residual| at the returned point
  bool converged = false;
};

/// Newton search for (T, alpha) with delta = 0 such that
/// (v', gamma') = (vdot, gammadot) at state x. The iterate is kept inside the
/// control box, so an infeasible request returns the best clamped point.
ThrustAlpha solve_thrust_alpha(const TiltrotorParams& p, std::span<const double> x, double vdot,
                               double gammadot, double tol = 1e-10, int max_iter = 60);

/// Level flight equilibrium (gamma = 0, v' = gamma' = 0) at (v, beta).
ThrustAlpha find_trim(const TiltrotorParams& p, double v, double beta);

/// Recovery controller toward the trim corridor: holds beta (delta = 0) and
/// asks for v' = -gain_v (v - v_ref) and gamma' = -gain_gamma * gamma.
struct TiltrotorBackup {
  TiltrotorParams params;
  double v_ref = 20.0;
  double gain_v = 0.1;
  double gain_gamma = 1.0;

  std::vector<double> operator()(std::span<const double> x) const;
};

/// Airspeed floor of the safe envelope: 5 m/s near hover to 50 m/s cruise.
double tiltrotor_min_airspeed(double beta);

/// Safety margin: min(15 deg - |gamma|, v - v_min(beta)) in mixed units.
double tiltrotor_safety(std::span<const double> x);

struct TiltrotorTargetBox {
  double v_lo = 15.0, v_hi = 25.0;
  double gamma_lo = -5.0 * 0.017453292519943295, gamma_hi = 5.0 * 0.017453292519943295;
  double beta_lo = 75.0 * 0.017453292519943295, beta_hi = 87.0 * 0.017453292519943295;

  std::vector<AxisBound> bounds() const;
};

/// Sensitivity-matrix Lipschitz constants from finite-difference Jacobians
/// sampled over the grid domain and control box, times `inflation`. Empirical.
SensitivityMatrixLipschitz tiltrotor_sampled_lipschitz(const TiltrotorModel& model, const Grid& grid,
                                                       std::uint64_t seed, std::size_t samples,
                                                       double inflation);

/// Velocity box from sampling over the domain and controls, widened by
/// `inflation` times the sampled range on each side. Empirical.
Box tiltrotor_sampled_velocity_bound(const TiltrotorModel& model, const Grid& grid,
                                     std::uint64_t seed, std::size_t samples, double inflation);

}  // namespace ddhreach
