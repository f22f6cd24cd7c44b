#include "ddhreach/tiltrotor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddhreach/errors.hpp"
#include "ddhreach/rng.hpp"

namespace ddhreach {

namespace {

constexpr double kDeg = 0.017453292519943295;
constexpr double kHalfPi = 90.0 * kDeg;

}  // namespace

Box TiltrotorParams::control_box() const {
  return Box{{0.0, alpha_min, -delta_max}, {thrust_max(), alpha_max, delta_max}};
}

void TiltrotorParams::validate() const {
  if (!(mass > 0.0 && gravity > 0.0 && area > 0.0 && density > 0.0)) {
    throw ConfigError("tiltrotor mass, gravity, area and density must be positive");
  }
  if (!(thrust_max_factor > 0.0 && alpha_max > alpha_min && delta_max > 0.0 && v_floor > 0.0)) {
    throw ConfigError("tiltrotor control bounds are empty");
  }
}

AeroCoefficients aero_coefficients(const TiltrotorParams& p, double beta) {
  const double w = std::clamp(beta, 0.0, kHalfPi) / kHalfPi;
  auto lerp = [w](double cruise, double hover) { return cruise + w * (hover - cruise); };
  return {lerp(p.cl0_cruise, p.cl0_hover), lerp(p.cla_cruise, p.cla_hover),
          lerp(p.cd0_cruise, p.cd0_hover), lerp(p.k_cruise, p.k_hover)};
}

LiftDrag lift_drag(const TiltrotorParams& p, double v, double alpha, double beta) {
  const AeroCoefficients c = aero_coefficients(p, beta);
  const double q = 0.5 * p.density * v * v * p.area;
  const double cl = c.cl0 + c.cla * alpha;
  return {q * cl, q * (c.cd0 + c.k * cl * cl)};
}

TiltrotorModel::TiltrotorModel(TiltrotorParams params) : p_(params), box_(params.control_box()) {
  p_.validate();
}

void TiltrotorModel::velocity(std::span<const double> x, std::span<const double> u,
                              std::span<double> out) const {
  const double v = x[0], gamma = x[1], beta = x[2];
  if (!(v > p_.v_floor)) {
    throw NumericalError("airspeed " + std::to_string(v) + " at or below the floor");
  }
  const double thrust = u[0], alpha = u[1], delta = u[2];
  const LiftDrag ld = lift_drag(p_, v, alpha, beta);
  const double g = p_.gravity, m = p_.mass;
  out[0] = -g * std::sin(gamma) + (thrust * std::cos(alpha + beta) - ld.drag) / m;
  out[1] = -g * std::cos(gamma) / v + (thrust * std::sin(alpha + beta) + ld.lift) / (m * v);
  out[2] = delta;
}

TiltKinematics::TiltKinematics(double delta_max) : box_{{-delta_max}, {delta_max}} {
  box_.validate();
}

void TiltKinematics::velocity(std::span<const double>, std::span<const double> u,
                              std::span<double> v) const {
  v[0] = 0.0;
  v[1] = 0.0;
  v[2] = u[0];
}

ControlMax TiltKinematics::max_over_controls(std::span<const double> x, std::span<const double> p,
                                             const ControlGrid& grid) const {
  if (grid.dims() != 1) return scan_controls(x, p, grid);
  const std::size_t last = grid.size() - 1;
  auto value = [&](std::size_t k) {
    const double d = grid.control(k)[0];
    return p[0] * 0.0 + p[1] * 0.0 + p[2] * d;
  };
  const double lo = value(0), hi = value(last);
  return hi > lo ? ControlMax{hi, last} : ControlMax{lo, 0};
}

ThrustAlpha solve_thrust_alpha(const TiltrotorParams& p, std::span<const double> x, double vdot,
                               double gammadot, double tol, int max_iter) {
  const double v = x[0], gamma = x[1], beta = x[2];
  if (!(v > p.v_floor)) throw NumericalError("airspeed at or below the floor");
  const double m = p.mass, g = p.gravity, tmax = p.thrust_max();
  const double q = 0.5 * p.density * v * v * p.area;
  const AeroCoefficients c = aero_coefficients(p, beta);

  struct Eval {
    double r1, r2, merit;
  };
  auto eval = [&](double t, double a) {
    const double cl = c.cl0 + c.cla * a;
    const double lift = q * cl, drag = q * (c.cd0 + c.k * cl * cl);
    const double r1 = -g * std::sin(gamma) + (t * std::cos(a + beta) - drag) / m - vdot;
    const double r2 = -g * std::cos(gamma) / v + (t * std::sin(a + beta) + lift) / (m * v) - gammadot;
    // gamma' residual scaled by v so both rows are accelerations
    return Eval{r1, r2, r1 * r1 + (v * r2) * (v * r2)};
  };

  double t = std::clamp(m * g, 0.0, tmax), a = std::clamp(0.0, p.alpha_min, p.alpha_max);
  Eval e = eval(t, a);
  ThrustAlpha best{t, a, std::max(std::abs(e.r1), std::abs(e.r2)), false};
  for (int it = 0; it < max_iter; ++it) {
    if (std::max(std::abs(e.r1), std::abs(e.r2)) < tol) {
      best = {t, a, std::max(std::abs(e.r1), std::abs(e.r2)), true};
      return best;
    }
    const double cl = c.cl0 + c.cla * a;
    const double j11 = std::cos(a + beta) / m;
    const double j12 = (-t * std::sin(a + beta) - q * 2.0 * c.k * cl * c.cla) / m;
    const double j21 = std::sin(a + beta) / (m * v);
    const double j22 = (t * std::cos(a + beta) + q * c.cla) / (m * v);
    const double det = j11 * j22 - j12 * j21;
    if (!(std::abs(det) > 1e-300)) break;
    const double dt = (-e.r1 * j22 + e.r2 * j12) / det;
    const double da = (-e.r2 * j11 + e.r1 * j21) / det;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      const double tn = std::clamp(t + step * dt, 0.0, tmax);
      const double an = std::clamp(a + step * da, p.alpha_min, p.alpha_max);
      const Eval en = eval(tn, an);
      if (en.merit < e.merit) {
        t = tn;
        a = an;
        e = en;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    best = {t, a, std::max(std::abs(e.r1), std::abs(e.r2)), false};
  }
  best.converged = best.residual < tol;
  return best;
}

ThrustAlpha find_trim(const TiltrotorParams& p, double v, double beta) {
  const double x[3] = {v, 0.0, beta};
  return solve_thrust_alpha(p, x, 0.0, 0.0, 1e-12, 100);
}

std::vector<double> TiltrotorBackup::operator()(std::span<const double> x) const {
  const ThrustAlpha s = solve_thrust_alpha(params, x, -gain_v * (x[0] - v_ref), -gain_gamma * x[1]);
  return {s.thrust, s.alpha, 0.0};
}

double tiltrotor_min_airspeed(double beta) {
  return 5.0 + 45.0 * (1.0 - std::clamp(beta, 0.0, kHalfPi) / kHalfPi);
}

double tiltrotor_safety(std::span<const double> x) {
  return std::min(15.0 * kDeg - std::abs(x[1]), x[0] - tiltrotor_min_airspeed(x[2]));
}

std::vector<AxisBound> TiltrotorTargetBox::bounds() const {
  return {{0, v_lo, v_hi}, {1, gamma_lo, gamma_hi}, {2, beta_lo, beta_hi}};
}

namespace {

std::vector<double> random_state(const Grid& grid, Rng& rng, double v_floor) {
  std::vector<double> x(3);
  for (std::size_t j = 0; j < 3; ++j) x[j] = rng.uniform(grid.mins()[j], grid.maxs()[j]);
  x[0] = std::max(x[0], v_floor * 1.5);
  return x;
}

std::vector<double> random_control(const Box& box, Rng& rng) {
  std::vector<double> u(box.dims());
  for (std::size_t j = 0; j < box.dims(); ++j) u[j] = rng.uniform(box.lower[j], box.upper[j]);
  return u;
}

}  // namespace

SensitivityMatrixLipschitz tiltrotor_sampled_lipschitz(const TiltrotorModel& model, const Grid& grid,
                                                       std::uint64_t seed, std::size_t samples,
                                                       double inflation) {
  Rng rng = Rng::stream(seed, "tiltrotor-lipschitz");
  SensitivityMatrixLipschitz out{3, std::vector<double>(9, 0.0)};
  std::vector<double> fp(3), fm(3);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> x = random_state(grid, rng, model.params().v_floor);
    const std::vector<double> u = random_control(model.control_box(), rng);
    for (std::size_t j = 0; j < 3; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      model.velocity(xp, u, fp);
      model.velocity(xm, u, fm);
      for (std::size_t i = 0; i < 3; ++i) {
        out.entries[i * 3 + j] = std::max(out.entries[i * 3 + j], std::abs(fp[i] - fm[i]) / (2.0 * h));
      }
    }
  }
  for (double& e : out.entries) e *= inflation;
  return out;
}

Box tiltrotor_sampled_velocity_bound(const TiltrotorModel& model, const Grid& grid,
                                     std::uint64_t seed, std::size_t samples, double inflation) {
  Rng rng = Rng::stream(seed, "tiltrotor-velocity-bound");
  Box b{{INFINITY, INFINITY, INFINITY}, {-INFINITY, -INFINITY, -INFINITY}};
  std::vector<double> v(3);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::vector<double> x = random_state(grid, rng, model.params().v_floor);
    const std::vector<double> u = random_control(model.control_box(), rng);
    model.velocity(x, u, v);
    for (std::size_t i = 0; i < 3; ++i) {
      b.lower[i] = std::min(b.lower[i], v[i]);
      b.upper[i] = std::max(b.upper[i], v[i]);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double w = inflation * (b.upper[i] - b.lower[i]);
    b.lower[i] -= w;
    b.upper[i] += w;
  }
  return b;
}

}  // namespace ddhreach
