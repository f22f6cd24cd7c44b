#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>

#include <doctest.h>

#include "ddhreach/benchmarks.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/solver.hpp"

using namespace ddhreach;

namespace {

// A DDH that reproduces x' = c exactly: one sample and a zero Lipschitz bound.
HamiltonianSpec constant_drift(std::size_t n, std::vector<double> c) {
  auto d = std::make_shared<Dataset>(n, 1);
  const double u[1] = {0.0};
  d->append(std::vector<double>(n, 0.0), u, c);
  return HamiltonianSpec::ddh(d, {UniformLipschitz{0.0}});
}

HamiltonianSpec integrator1d() {
  auto f = std::make_shared<FunctionDynamics>(1, Box{{-1}, {1}}, [](std::span<const double>, std::span<const double> u,
                                                                    std::span<double> v) { v[0] = u[0]; });
  return HamiltonianSpec::brute_force(f, {3});
}

double max_error(const ScalarField& v, const std::function<double(double)>& exact, double lo, double hi) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v.grid().point(i)[0];
    if (x >= lo && x <= hi) e = std::max(e, std::abs(v[i] - exact(x)));
  }
  return e;
}

}  // namespace

TEST_CASE("automatic dissipation") {
  // Sample at a corner of a square of diameter 2.
  const double s = std::sqrt(2.0);
  auto d = std::make_shared<Dataset>(2, 1);
  const double x[2] = {0, 0}, u[1] = {0}, v[2] = {1, -2};
  d->append(x, u, v);
  const auto a = auto_dissipation(HamiltonianSpec::ddh(d, {UniformLipschitz{1.0}}), Grid({0, 0}, {s, s}, {5, 5}));
  CHECK(a[0] == doctest::Approx(3.0));
  CHECK(a[1] == doctest::Approx(4.0));

  const auto b = auto_dissipation(integrator1d(), Grid({-1}, {1}, {11}));
  CHECK(b[0] == doctest::Approx(1.2));
}

TEST_CASE("CFL step") {
  const Grid g({0, 0}, {1, 2}, {11, 11});
  CHECK(cfl_time_step(g, {1.0, 2.0}, 0.5) == doctest::Approx(0.5 / (10.0 + 10.0)));
  CHECK_THROWS_AS(cfl_time_step(g, {1.0, 2.0}, 1.5), ConfigError);
}

TEST_CASE("Lax-Friedrichs numerical Hamiltonian") {
  const HamiltonianSpec h = integrator1d();
  const double x[1] = {0.0};
  const double pm[1] = {-1.0}, pp[1] = {1.0}, a1[1] = {1.0}, a0[1] = {0.0}, same[1] = {0.7};
  CHECK(lf_numerical_hamiltonian(h, x, pm, pp, a1) == doctest::Approx(1.0));
  CHECK(lf_numerical_hamiltonian(h, x, same, same, a1) == evaluate(h, x, same).value);
  CHECK(lf_numerical_hamiltonian(h, x, pm, same, a0) == doctest::Approx(evaluate(h, x, std::vector<double>{-0.15}).value));
}

TEST_CASE("Lax-Friedrichs dissipation is added") {
  // One sample at distance 1 with L = 1 gives H(p) = -|p|.
  auto d = std::make_shared<Dataset>(1, 1);
  const double x0[1] = {0}, u[1] = {0}, v[1] = {0};
  d->append(x0, u, v);
  const HamiltonianSpec h = HamiltonianSpec::ddh(d, {UniformLipschitz{1.0}});
  const double x[1] = {1.0}, pm[1] = {-1.0}, pp[1] = {1.0}, a[1] = {1.0};
  CHECK(lf_numerical_hamiltonian(h, x, pm, pp, a) == doctest::Approx(1.0));
}

TEST_CASE("avoid: a drift lowers the value at unit rate") {
  const Grid grid({0}, {2}, {201});
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return x[0]; });
  const ProblemSpec prob{AvoidSets{g}, 0.5, constant_drift(1, {-1.0})};
  const SolveResult r = solve(prob, {});
  CHECK(r.final_time == doctest::Approx(0.5));
  CHECK(max_error(r.final_value, [](double x) { return x - 0.5; }, 0, 2) < 2 * grid.spacing(0));
}

TEST_CASE("avoid: zero dynamics is stationary") {
  const Grid grid({-1, -1}, {1, 1}, {21, 21});
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return 0.5 - std::hypot(x[0], x[1]); });
  const ProblemSpec prob{AvoidSets{g}, 0.7, constant_drift(2, {0.0, 0.0})};
  SolveConfig sc;
  sc.dissipation = {0.0, 0.0};
  sc.dt = 0.05;
  const SolveResult r = solve(prob, sc);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.final_value[i] == g[i]);
}

TEST_CASE("avoid step freezes where g binds") {
  const Grid grid({0}, {1}, {11});
  const ScalarField v = ScalarField::constant(grid, 0.5);
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return x[0] - 0.5; });
  const auto [next, used] = step_avoid(v, g, constant_drift(1, {1.0}), {1.0}, 0.01);
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (g[i] < 0.5) CHECK(next[i] == g[i]);
  }
  CHECK(used == IndexSet{0});
}

TEST_CASE("reach-avoid degenerate sets") {
  const Grid grid({-1}, {1}, {41});
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return 0.3 - std::abs(x[0]); });
  SUBCASE("l equals g") {
    const ProblemSpec prob{ReachAvoidSets{g, g}, 1.0, integrator1d()};
    const SolveResult r = solve(prob, {});
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.final_value[i] == g[i]);
  }
  SUBCASE("target everywhere, nothing unsafe") {
    const ScalarField l = ScalarField::from_function(grid, [](std::span<const double> x) { return 2.0 + x[0]; });
    const ScalarField big = ScalarField::constant(grid, 100.0);
    const ProblemSpec prob{ReachAvoidSets{l, big}, 0.5, integrator1d()};
    const SolveResult r = solve(prob, {});
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(r.final_value[i] >= l[i]);
  }
}

TEST_CASE("reach-avoid: unit-speed integrator grows the target at rate 1") {
  const Grid grid({-2}, {2}, {161});
  const ScalarField l = ScalarField::from_function(grid, [](std::span<const double> x) { return 0.2 - std::abs(x[0]); });
  const ScalarField g = ScalarField::constant(grid, kVacuousLevel);
  const ProblemSpec prob{ReachAvoidSets{l, g}, 1.0, integrator1d()};
  const SolveResult r = solve(prob, {});
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < r.final_value.size(); ++i) {
    if (r.final_value[i] >= 0.0) {
      lo = std::min(lo, grid.point(i)[0]);
      hi = std::max(hi, grid.point(i)[0]);
    }
  }
  CHECK(std::abs(lo + 1.2) <= grid.spacing(0) + 1e-12);
  CHECK(std::abs(hi - 1.2) <= grid.spacing(0) + 1e-12);
}

TEST_CASE("horizon zero returns the terminal condition") {
  const Grid grid({-1, -1}, {1, 1}, {11, 11});
  const ScalarField l = ScalarField::from_function(grid, [](std::span<const double> x) { return 0.2 - std::hypot(x[0], x[1]); });
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return 0.9 - std::abs(x[0]); });
  const ProblemSpec prob{ReachAvoidSets{l, g}, 0.0, constant_drift(2, {1.0, 0.0})};
  const SolveResult r = solve(prob, {});
  const ScalarField term = prob.terminal();
  for (std::size_t i = 0; i < term.size(); ++i) CHECK(r.final_value[i] == term[i]);
  CHECK(r.used_indices.empty());
  CHECK(r.steps_taken == 0);
}

TEST_CASE("history lookup by time-to-go") {
  const Grid grid({0}, {2}, {11});
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return x[0]; });
  SolveConfig sc;
  sc.store_history = true;
  sc.dt = 0.1;
  const SolveResult r = solve({AvoidSets{g}, 0.35, constant_drift(1, {-1.0})}, sc);
  REQUIRE(r.history.size() == 5);
  CHECK(r.history.front().time == 0.0);
  CHECK(r.history.back().time == doctest::Approx(0.35));
  CHECK(&field_at_time(r, 0.0) == &r.history[0].field);
  CHECK(&field_at_time(r, 0.15) == &r.history[2].field);
  CHECK(&field_at_time(r, 9.0) == &r.final_value);
  // The last step is shortened to land on the horizon.
  CHECK(r.steps_taken == 4);
}

TEST_CASE("a step beyond the CFL limit is rejected") {
  const Grid grid({0}, {1}, {11});
  SolveConfig sc;
  sc.dissipation = {1.0};
  sc.dt = 0.2;
  const ScalarField g = ScalarField::constant(grid, 1.0);
  CHECK_THROWS_AS(solve({AvoidSets{g}, 1.0, constant_drift(1, {1.0})}, sc), ConfigError);
}

TEST_CASE("comparison principle, workers and candidate filter leave the solution unchanged") {
  const PolynomialBenchmark b = make_polynomial_benchmark({7, 31});
  Rng rng(5);
  auto big = std::make_shared<Dataset>(collect_uniform(*b.system, b.grid, 300, rng));
  auto small = std::make_shared<Dataset>(2, 2);
  for (std::size_t i = 0; i < 120; ++i) small->append(big->sample(i));

  SolveConfig sc;
  sc.dissipation = apriori_dissipation(b.certified, b.velocity_bound, b.grid);
  const double horizon = 0.3;
  const auto run = [&](std::shared_ptr<const Dataset> d, SolveConfig c) {
    return solve({ReachAvoidSets{b.l, b.g}, horizon, HamiltonianSpec::ddh(d, b.certified)}, c);
  };
  const SolveResult full = run(big, sc);
  const SolveResult part = run(small, sc);
  for (std::size_t i = 0; i < full.final_value.size(); ++i) {
    CHECK(part.final_value[i] <= full.final_value[i] + 1e-9);
  }

  SolveConfig par = sc;
  par.workers = 3;
  SolveConfig raw = sc;
  raw.candidates.enabled = false;
  for (const SolveConfig& c : {par, raw}) {
    const SolveResult other = run(big, c);
    CHECK(other.used_indices == full.used_indices);
    bool same = true;
    for (std::size_t i = 0; i < full.final_value.size(); ++i) {
      same = same && std::bit_cast<std::uint64_t>(other.final_value[i]) == std::bit_cast<std::uint64_t>(full.final_value[i]);
    }
    CHECK(same);
  }

  // The brute-force value dominates the data-driven one.
  const SolveResult bf =
      solve({ReachAvoidSets{b.l, b.g}, horizon, HamiltonianSpec::brute_force(b.system, {41, 41})}, sc);
  for (std::size_t i = 0; i < bf.final_value.size(); ++i) {
    CHECK(full.final_value[i] <= bf.final_value[i] + 1e-6);
  }
}

TEST_CASE("pruning to the used indices reproduces the solve") {
  const PolynomialBenchmark b = make_polynomial_benchmark({7, 31});
  Rng rng(6);
  auto d = std::make_shared<Dataset>(collect_uniform(*b.system, b.grid, 400, rng));
  SolveConfig sc;
  sc.dissipation = apriori_dissipation(b.certified, b.velocity_bound, b.grid);
  const auto run = [&](std::shared_ptr<const Dataset> data) {
    return solve({AvoidSets{b.g}, 0.5, HamiltonianSpec::ddh(data, b.certified)}, sc);
  };
  const SolveResult a = run(d);
  const PruneResult pr = prune(*d, a.used_indices);
  const SolveResult c = run(std::make_shared<Dataset>(pr.data));
  CHECK(pr.data.size() == a.used_indices.size());
  CHECK(c.used_indices.size() == pr.data.size());
  for (std::size_t i = 0; i < a.final_value.size(); ++i) CHECK(a.final_value[i] == c.final_value[i]);
}

TEST_CASE("problem validation") {
  const Grid a({0}, {1}, {5}), b({0}, {1}, {6});
  const ScalarField ga = ScalarField::constant(a, 1.0), lb = ScalarField::constant(b, 1.0);
  CHECK_THROWS_AS(solve({ReachAvoidSets{lb, ga}, 1.0, constant_drift(1, {1.0})}), ConfigError);
  CHECK_THROWS_AS(solve({AvoidSets{ga}, -1.0, constant_drift(1, {1.0})}), ConfigError);
  CHECK_THROWS_AS(solve({AvoidSets{ga}, 1.0, constant_drift(2, {1.0, 0.0})}), ConfigError);
}
