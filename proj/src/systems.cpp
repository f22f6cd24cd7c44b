#include "ddhreach/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddhreach/errors.hpp"
#include "ddhreach/rng.hpp"

namespace ddhreach {

void Box::validate() const {
  if (lower.size() != upper.size() || lower.empty()) {
    throw std::invalid_argument("box bounds must have equal nonzero length");
  }
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || lower[j] > upper[j]) {
      throw std::invalid_argument("box axis " + std::to_string(j) + " is empty or non-finite");
    }
  }
}

std::vector<double> Box::center() const {
  std::vector<double> c(dims());
  for (std::size_t j = 0; j < dims(); ++j) c[j] = 0.5 * (lower[j] + upper[j]);
  return c;
}

std::vector<double> Box::half_width() const {
  std::vector<double> h(dims());
  for (std::size_t j = 0; j < dims(); ++j) h[j] = 0.5 * (upper[j] - lower[j]);
  return h;
}

void Box::clamp(std::span<double> u) const {
  for (std::size_t j = 0; j < dims(); ++j) u[j] = std::clamp(u[j], lower[j], upper[j]);
}

bool Box::contains(std::span<const double> u, double tol) const {
  for (std::size_t j = 0; j < dims(); ++j) {
    if (u[j] < lower[j] - tol || u[j] > upper[j] + tol) return false;
  }
  return true;
}

ControlGrid::ControlGrid(const Box& box, std::vector<std::size_t> counts)
    : counts_(std::move(counts)) {
  box.validate();
  if (counts_.size() != box.dims()) {
    throw std::invalid_argument("control grid counts do not match the control box");
  }
  axes_.resize(box.dims());
  size_ = 1;
  for (std::size_t j = 0; j < box.dims(); ++j) {
    const std::size_t n = counts_[j];
    const double lo = box.lower[j], hi = box.upper[j];
    if (n == 0 || (n == 1 && lo != hi)) {
      throw std::invalid_argument("control grid needs at least 2 points on a non-degenerate axis");
    }
    axes_[j].resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      axes_[j][k] = k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    size_ *= n;
  }
  const std::size_t d = box.dims();
  points_.resize(size_ * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t k = 0; k < size_; ++k) {
    for (std::size_t j = 0; j < d; ++j) points_[k * d + j] = axes_[j][idx[j]];
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < counts_[j]) break;
      idx[j] = 0;
    }
  }
}

std::vector<double> Dynamics::velocity(std::span<const double> x,
                                       std::span<const double> u) const {
  std::vector<double> v(state_dim());
  velocity(x, u, v);
  return v;
}

ControlMax Dynamics::scan_controls(std::span<const double> x, std::span<const double> p,
                                   const ControlGrid& grid) const {
  std::vector<double> v(state_dim());
  ControlMax best{-INFINITY, 0};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    velocity(x, grid.control(k), v);
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += p[j] * v[j];
    if (s > best.value) best = {s, k};
  }
  return best;
}

ControlMax Dynamics::max_over_controls(std::span<const double> x, std::span<const double> p,
                                       const ControlGrid& grid) const {
  return scan_controls(x, p, grid);
}

FunctionDynamics::FunctionDynamics(std::size_t state_dim, Box controls, Field f)
    : n_x_(state_dim), box_(std::move(controls)), f_(std::move(f)) {
  box_.validate();
}

void FunctionDynamics::velocity(std::span<const double> x, std::span<const double> u,
                                std::span<double> v) const {
  f_(x, u, v);
}

// ---------------------------------------------------------------------------

PolynomialSystem::PolynomialSystem(std::uint64_t seed, Coefficients coeffs)
    : seed_(seed), coeffs_(coeffs), box_{{-1.0, -1.0}, {1.0, 1.0}} {}

std::array<double, kPolyMonomials> PolynomialSystem::monomials(double u1, double u2) {
  return {1.0, u1, u2, u1 * u1, u1 * u2, u2 * u2};
}

void PolynomialSystem::velocity(std::span<const double> x, std::span<const double> u,
                                std::span<double> v) const {
  const auto phi = monomials(u[0], u[1]);
  for (std::size_t i = 0; i < 2; ++i) {
    double m[3] = {0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t k = 0; k < kPolyMonomials; ++k) m[a] += coeffs_[i][a][k] * phi[k];
    }
    v[i] = m[0] + m[1] * x[0] + m[2] * x[1];
  }
}

ControlMax PolynomialSystem::max_over_controls(std::span<const double> x,
                                               std::span<const double> p,
                                               const ControlGrid& grid) const {
  if (grid.dims() != 2) return scan_controls(x, p, grid);
  // p^T f = sum_k c_k phi_k(u)
  double c[kPolyMonomials];
  for (std::size_t k = 0; k < kPolyMonomials; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      s += p[i] * (coeffs_[i][0][k] + coeffs_[i][1][k] * x[0] + coeffs_[i][2][k] * x[1]);
    }
    c[k] = s;
  }
  const auto& ax1 = grid.axis(0);
  const auto& ax2 = grid.axis(1);
  const std::size_t n2 = ax2.size();
  ControlMax best{-INFINITY, 0};
  auto consider = [&](std::size_t k1, std::size_t k2, double a, double b, double cc) {
    const double u2 = ax2[k2];
    const double s = (a * u2 + b) * u2 + cc;
    const std::size_t flat = k1 * n2 + k2;
    if (s > best.value || (s == best.value && flat < best.index)) best = {s, flat};
  };
  for (std::size_t k1 = 0; k1 < ax1.size(); ++k1) {
    const double u1 = ax1[k1];
    const double a = c[5];
    const double b = c[2] + c[4] * u1;
    const double cc = c[0] + c[1] * u1 + c[3] * u1 * u1;
    consider(k1, 0, a, b, cc);
    consider(k1, n2 - 1, a, b, cc);
    if (a < 0.0) {
      const double vertex = -b / (2.0 * a);
      const auto it = std::lower_bound(ax2.begin(), ax2.end(), vertex);
      const std::size_t hi = static_cast<std::size_t>(it - ax2.begin());
      if (hi < n2) consider(k1, hi, a, b, cc);
      if (hi > 0) consider(k1, hi - 1, a, b, cc);
    }
  }
  return best;
}

PolynomialSystem make_polynomial_system(std::uint64_t seed) {
  Rng rng(seed);
  PolynomialSystem::Coefficients c{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t k = 0; k < kPolyMonomials; ++k) c[i][a][k] = rng.uniform(-2.0, 2.0);
    }
    c[i][0][0] = 0.0;
  }
  return PolynomialSystem(seed, c);
}

PolynomialLipschitz polynomial_true_lipschitz(const PolynomialSystem& sys,
                                              std::vector<std::size_t> control_counts) {
  const ControlGrid grid(sys.control_box(), std::move(control_counts));
  const auto& c = sys.coefficients();
  SensitivityMatrixLipschitz est{2, std::vector<double>(4, 0.0)};
  SensitivityMatrixLipschitz cert{2, std::vector<double>(4, 0.0)};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double tri = 0.0;
      for (std::size_t k = 0; k < kPolyMonomials; ++k) tri += std::abs(c[i][j + 1][k]);
      cert.entries[i * 2 + j] = tri;
      double mx = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto u = grid.control(g);
        const auto phi = PolynomialSystem::monomials(u[0], u[1]);
        double s = 0.0;
        for (std::size_t k = 0; k < kPolyMonomials; ++k) s += c[i][j + 1][k] * phi[k];
        mx = std::max(mx, std::abs(s));
      }
      est.entries[i * 2 + j] = mx;
    }
  }
  return {LipschitzSpec{est}, LipschitzSpec{cert}};
}

Box polynomial_velocity_bound(const PolynomialSystem& sys, const Box& state_box) {
  const auto& c = sys.coefficients();
  double xm[2];
  for (std::size_t j = 0; j < 2; ++j) {
    xm[j] = std::max(std::abs(state_box.lower[j]), std::abs(state_box.upper[j]));
  }
  Box b{{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < kPolyMonomials; ++k) {
      s += std::abs(c[i][0][k]) + std::abs(c[i][1][k]) * xm[0] + std::abs(c[i][2][k]) * xm[1];
    }
    b.lower[i] = -s;
    b.upper[i] = s;
  }
  return b;
}

// ---------------------------------------------------------------------------

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::kBackup: return "backup";
    case Branch::kSafe: return "safe";
    case Branch::kExplore: return "explore";
    case Branch::kNone: break;
  }
  return "none";
}

std::vector<double> rk4_step(const Dynamics& dyn, std::span<const double> x,
                             std::span<const double> u, double dt) {
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);
  dyn.velocity(x, u, k1);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * dt * k1[j];
  dyn.velocity(tmp, u, k2);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * dt * k2[j];
  dyn.velocity(tmp, u, k3);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + dt * k3[j];
  dyn.velocity(tmp, u, k4);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = x[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return out;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

Trajectory rk4_rollout(const Dynamics& dyn, const Policy& policy,
                       std::span<const double> x0, double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("rollout duration and step must be positive");
  }
  // Tolerate T/dt landing just below an integer, e.g. 1.0 / 0.01.
  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  if (steps < 1) throw std::invalid_argument("rollout shorter than one step");

  Trajectory traj(dyn);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> v(dyn.state_dim());
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (!all_finite(x)) {
      traj.diverged = true;
      traj.divergence_reason = "non-finite state at step " + std::to_string(k);
      return traj;
    }
    try {
      const PolicyDecision d = policy(x, t);
      dyn.velocity(x, d.control, v);
      if (!all_finite(v) || !all_finite(d.control)) {
        traj.diverged = true;
        traj.divergence_reason = "non-finite velocity or control at step " + std::to_string(k);
        return traj;
      }
      traj.times.push_back(t);
      traj.samples.append(x, d.control, v);
      traj.branches.push_back(d.branch);
      traj.fallbacks.push_back(d.fallback ? 1 : 0);
      if (k < steps) x = rk4_step(dyn, x, d.control, dt);
    } catch (const NumericalError& e) {
      traj.diverged = true;
      traj.divergence_reason = "step " + std::to_string(k) + ": " + e.what();
      return traj;
    }
  }
  return traj;
}

}  // namespace ddhreach
