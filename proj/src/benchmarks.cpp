#include "ddhreach/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "ddh_kernel.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/solver.hpp"

namespace ddhreach {

Dataset collect_uniform(const Dynamics& dynamics, const Grid& domain, std::size_t count, Rng& rng) {
  const std::size_t n = dynamics.state_dim(), m = dynamics.control_dim();
  if (domain.dims() != n) throw ConfigError("collection domain dimension mismatch");
  const Box& box = dynamics.control_box();
  Dataset out(n, m);
  std::vector<double> x(n), u(m), v(n);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t j = 0; j < n; ++j) x[j] = rng.uniform(domain.mins()[j], domain.maxs()[j]);
    for (std::size_t j = 0; j < m; ++j) u[j] = rng.uniform(box.lower[j], box.upper[j]);
    dynamics.velocity(x, u, v);
    out.append(x, u, v);
  }
  return out;
}

std::vector<double> apriori_dissipation(const LipschitzSpec& lip, const Box& velocity, const Grid& grid) {
  const std::size_t n = grid.dims();
  if (velocity.dims() != n) throw ConfigError("velocity bound dimension mismatch");
  const detail::DdhKernel k(lip, n);
  double r[detail::DdhKernel::kDims];
  k.radius(grid.maxs().data(), grid.mins().data(), r);
  std::vector<double> a(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = std::max(std::abs(velocity.lower[j]), std::abs(velocity.upper[j])) + (k.ball() ? r[0] : r[j]);
  }
  return a;
}

std::vector<double> max_alpha(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = std::max(a[j], b[j]);
  return out;
}

// ---------------------------------------------------------------------------

double PolynomialBenchmark::g_exact(std::span<const double> x) const {
  return std::min({setup.safe_half - x[0], x[0] + setup.safe_half, setup.safe_half - x[1],
                   x[1] + setup.safe_half});
}

double PolynomialBenchmark::l_exact(std::span<const double> x) const {
  return setup.target_radius - std::sqrt(x[0] * x[0] + x[1] * x[1]);
}

Policy PolynomialBenchmark::backup() const {
  auto grid = std::make_shared<const ControlGrid>(system->control_box(), setup.control_counts);
  auto sys = system;
  return [sys, grid](std::span<const double> x, double) {
    // argmin_u x^T f(x, u) = argmax_u (-x)^T f(x, u)
    const double p[2] = {-x[0], -x[1]};
    const ControlMax m = sys->max_over_controls(x, p, *grid);
    PolicyDecision d;
    const auto u = grid->control(m.index);
    d.control.assign(u.begin(), u.end());
    d.branch = Branch::kBackup;
    return d;
  };
}

PolynomialBenchmark make_polynomial_benchmark(const PolynomialSetup& setup) {
  auto sys = std::make_shared<const PolynomialSystem>(make_polynomial_system(setup.seed));
  Grid grid({-1.0, -1.0}, {1.0, 1.0}, {setup.grid_points, setup.grid_points});
  const double h = setup.safe_half;
  ScalarField g = levelset_from_bounds(grid, {{0, -h, h}, {1, -h, h}});
  const double r = setup.target_radius;
  ScalarField l = ScalarField::from_function(
      grid, [r](std::span<const double> x) { return r - std::sqrt(x[0] * x[0] + x[1] * x[1]); });
  const PolynomialLipschitz lips = polynomial_true_lipschitz(*sys, setup.control_counts);
  const Box domain{{-1.0, -1.0}, {1.0, 1.0}};
  return PolynomialBenchmark{setup, sys, grid, std::move(g), std::move(l), lips.certified,
                             polynomial_velocity_bound(*sys, domain)};
}

ExpansionProblem polynomial_expansion_problem(const PolynomialBenchmark& bench, double cfl) {
  const PolynomialBenchmark* b = &bench;
  auto empty = std::make_shared<Dataset>(2, 2);
  ExpansionProblem p{bench.l,
                     bench.g,
                     [b](std::span<const double> x) { return b->l_exact(x); },
                     [b](std::span<const double> x) { return b->g_exact(x); },
                     HamiltonianSpec::ddh(empty, bench.certified),
                     {}};
  p.solve.dissipation = apriori_dissipation(bench.certified, bench.velocity_bound, bench.grid);
  p.solve.cfl_factor = cfl;
  return p;
}

// ---------------------------------------------------------------------------

double TiltrotorBenchmark::l_exact(std::span<const double> x) const {
  return box_margin(setup.target.bounds(), x);
}

Policy TiltrotorBenchmark::backup() const {
  const TiltrotorBackup rec = recovery;
  return [rec](std::span<const double> x, double) {
    PolicyDecision d;
    d.control = rec(x);
    d.branch = Branch::kBackup;
    return d;
  };
}

HamiltonianSpec TiltrotorBenchmark::modular(std::shared_ptr<const Dataset> data) const {
  const double dmax = setup.params.delta_max;
  auto kin = std::make_shared<const TiltKinematics>(dmax);
  ModularPart aero{{0, 1}, {0, 1},
                   std::make_shared<const HamiltonianSpec>(
                       HamiltonianSpec::g_bounded(HamiltonianSpec::ddh(data, lip), {velocity_bound, {}}))};
  ModularPart tilt{{2}, {2},
                   std::make_shared<const HamiltonianSpec>(
                       HamiltonianSpec::brute_force(kin, {setup.tilt_control_points}))};
  return HamiltonianSpec::modular({aero, tilt});
}

HamiltonianSpec TiltrotorBenchmark::full(std::shared_ptr<const Dataset> data) const {
  return HamiltonianSpec::g_bounded(HamiltonianSpec::ddh(std::move(data), lip), {velocity_bound, {}});
}

std::vector<double> TiltrotorBenchmark::dissipation() const {
  std::vector<double> a = apriori_dissipation(lip, velocity_bound, grid);
  a[2] = std::max(a[2], 1.2 * setup.params.delta_max);
  return a;
}

TiltrotorBenchmark make_tiltrotor_benchmark(const TiltrotorSetup& setup) {
  setup.params.validate();
  auto model = std::make_shared<const TiltrotorModel>(setup.params);
  Grid grid(setup.mins, setup.maxs, setup.counts);
  if (grid.dims() != 3) throw ConfigError("tiltrotor grid must be three-dimensional");
  if (!(grid.mins()[0] > setup.params.v_floor)) {
    throw ConfigError("tiltrotor grid must start above the airspeed floor");
  }
  ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return tiltrotor_safety(x); });
  ScalarField l = levelset_from_bounds(grid, setup.target.bounds());
  const SensitivityMatrixLipschitz lip =
      tiltrotor_sampled_lipschitz(*model, grid, setup.seed, setup.lipschitz_samples, setup.lipschitz_inflation);
  Box vb = tiltrotor_sampled_velocity_bound(*model, grid, setup.seed, setup.lipschitz_samples,
                                            setup.bound_inflation);
  // The tilt rate is known exactly.
  vb.lower[2] = -setup.params.delta_max;
  vb.upper[2] = setup.params.delta_max;
  TiltrotorBackup rec{setup.params};
  return TiltrotorBenchmark{setup, model, grid, std::move(g), std::move(l), LipschitzSpec{lip}, vb, rec};
}

ExpansionProblem tiltrotor_expansion_problem(const TiltrotorBenchmark& bench, bool modular, double cfl) {
  const TiltrotorBenchmark* b = &bench;
  auto empty = std::make_shared<Dataset>(3, 3);
  ExpansionProblem p{bench.l,
                     bench.g,
                     [b](std::span<const double> x) { return b->l_exact(x); },
                     [b](std::span<const double> x) { return b->g_exact(x); },
                     modular ? bench.modular(empty) : bench.full(empty),
                     {}};
  p.solve.dissipation = bench.dissipation();
  p.solve.cfl_factor = cfl;
  return p;
}

}  // namespace ddhreach
