#include <cmath>
#include <memory>

#include <doctest.h>

#include "ddhreach/errors.hpp"
#include "ddhreach/policy.hpp"
#include "ddhreach/tiltrotor.hpp"

using namespace ddhreach;

namespace {

std::shared_ptr<Dataset> two_samples() {
  auto d = std::make_shared<Dataset>(2, 1);
  d->append(std::vector<double>{0, 0}, std::vector<double>{0.7}, std::vector<double>{1, 0});
  d->append(std::vector<double>{5, 0}, std::vector<double>{-0.4}, std::vector<double>{2, 0});
  return d;
}

Policy tagged(double u) {
  return [u](std::span<const double>, double) {
    PolicyDecision d;
    d.control = {u};
    return d;
  };
}

}  // namespace

TEST_CASE("control extraction") {
  const LipschitzSpec one{UniformLipschitz{1.0}};
  auto single = std::make_shared<Dataset>(2, 1);
  single->append(std::vector<double>{0.2, 0.1}, std::vector<double>{0.7}, std::vector<double>{1, -1});
  const double x[2] = {0.2, 0.1}, p[2] = {1, 2}, px[2] = {1, 0}, zero[2] = {0, 0};

  SafeAction a = extract_control(HamiltonianSpec::ddh(single, one), x, p, 1);
  CHECK(a.control == std::vector<double>{0.7});
  CHECK(*a.index == 0);

  const double origin[2] = {0, 0};
  a = extract_control(HamiltonianSpec::ddh(two_samples(), one), origin, px, 1);
  CHECK(a.control == std::vector<double>{0.7});

  a = extract_control(HamiltonianSpec::ddh(two_samples(), {UniformLipschitz{0.0}}), origin, zero, 1);
  CHECK(*a.index == 0);
  CHECK(a.control == std::vector<double>{0.7});
}

TEST_CASE("G-bounded extraction signals the fallback") {
  auto far = std::make_shared<Dataset>(1, 1);
  far->append(std::vector<double>{98}, std::vector<double>{0.5}, std::vector<double>{-2});
  const HamiltonianSpec gb =
      HamiltonianSpec::g_bounded(HamiltonianSpec::ddh(far, {UniformLipschitz{1.0}}), {Box{{-2}, {2}}, {}});
  const double x[1] = {0}, p[1] = {1};
  const SafeAction a = extract_control(gb, x, p, 1);
  CHECK(a.fallback);
  CHECK(a.control.empty());

  const double xn[1] = {98};
  const SafeAction b = extract_control(gb, xn, p, 1);
  CHECK_FALSE(b.fallback);
  CHECK(b.control == std::vector<double>{0.5});
}

TEST_CASE("modular extraction assembles controls from every part") {
  auto d = std::make_shared<Dataset>(3, 3);
  d->append(std::vector<double>{30, 0, 1}, std::vector<double>{0.4, 0.6, 0.0}, std::vector<double>{1, 0.5, 0});
  auto kin = std::make_shared<const TiltKinematics>(0.1);
  const HamiltonianSpec m = HamiltonianSpec::modular(
      {{{0, 1}, {0, 1}, std::make_shared<const HamiltonianSpec>(HamiltonianSpec::ddh(d, {UniformLipschitz{0.0}}))},
       {{2}, {2}, std::make_shared<const HamiltonianSpec>(HamiltonianSpec::brute_force(kin, {3}))}});
  const double x[3] = {30, 0, 1};
  const double up[3] = {1, 1, 2}, down[3] = {1, 1, -2};
  CHECK(extract_control(m, x, up, 3).control == std::vector<double>{0.4, 0.6, 0.1});
  CHECK(extract_control(m, x, down, 3).control == std::vector<double>{0.4, 0.6, -0.1});
  CHECK(*extract_control(m, x, up, 3).index == 0);
}

TEST_CASE("switching policy branches") {
  const Grid grid({-1}, {1}, {21});
  auto d = std::make_shared<Dataset>(1, 1);
  d->append(std::vector<double>{0}, std::vector<double>{0.25}, std::vector<double>{1});
  const HamiltonianSpec h = HamiltonianSpec::ddh(d, {UniformLipschitz{0.0}});
  const double eps = 0.05;
  const Policy backup = tagged(-1.0), explore = tagged(9.0);
  const double x[1] = {0.5};

  auto run = [&](double l_value, double v_value) {
    const PolicyContext ctx(ScalarField::constant(grid, v_value), h, eps, 1.0);
    return switching_policy(ctx, ScalarField::constant(grid, l_value), backup, explore, x, 0.0);
  };
  PolicyDecision a = run(0.3, -5.0);
  CHECK(a.branch == Branch::kBackup);
  CHECK(a.control == std::vector<double>{-1.0});
  a = run(-0.1, eps / 2);
  CHECK(a.branch == Branch::kSafe);
  CHECK(a.control == std::vector<double>{0.25});
  a = run(-0.1, 2 * eps);
  CHECK(a.branch == Branch::kExplore);
  CHECK(a.control == std::vector<double>{9.0});

  // Off the grid the safe branch applies whatever the value says.
  const PolicyContext ctx(ScalarField::constant(grid, 1.0), h, eps, 1.0);
  const double off[1] = {1.5};
  CHECK(switching_policy(ctx, ScalarField::constant(grid, -1.0), backup, explore, off, 0.0).branch == Branch::kSafe);
  CHECK_THROWS(safe_action(ctx, off));
}

TEST_CASE("time-varying context picks the history field by time-to-go") {
  const Grid grid({0}, {1}, {3});
  SolveResult r{ScalarField::constant(grid, 3.0), {}, {}, 0, false, 1.0, 1.0, 0.5, 0.5, {}, {}};
  r.history = {{0.0, ScalarField::constant(grid, 0.0)},
               {0.5, ScalarField::constant(grid, 1.0)},
               {1.0, ScalarField::constant(grid, 2.0)}};
  auto d = std::make_shared<Dataset>(1, 1);
  d->append(std::vector<double>{0}, std::vector<double>{0}, std::vector<double>{0});
  const HamiltonianSpec h = HamiltonianSpec::ddh(d, {UniformLipschitz{0.0}});
  const PolicyContext tv(r, h, 0.05, 1.0, true);
  const double x[1] = {0.5};
  CHECK(tv.at(0.0).value_at(x).value == 0.0);
  CHECK(tv.at(0.2).value_at(x).value == 1.0);
  CHECK(tv.at(1.0).value_at(x).value == 2.0);
  CHECK(tv.at(7.0).value_at(x).value == 3.0);
  const PolicyContext fixed(r, h, 0.05, 1.0, false);
  CHECK(fixed.at(0.0).value_at(x).value == 3.0);
  CHECK_THROWS_AS(PolicyContext(r, h, 0.0, 1.0), ConfigError);
}

TEST_CASE("value gradient interpolation") {
  const Grid grid({0, 0}, {1, 1}, {11, 11});
  const ValueGradient vg(ScalarField::from_function(grid, [](std::span<const double> x) { return 2 * x[0] - x[1]; }));
  bool clamped = true;
  const double x[2] = {0.33, 0.71};
  const auto g = vg.gradient_at(x, &clamped);
  CHECK_FALSE(clamped);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(-1.0));
  const double off[2] = {1.2, 0.5};
  vg.gradient_at(off, &clamped);
  CHECK(clamped);
}
