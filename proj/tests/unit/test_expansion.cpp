#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include <doctest.h>

#include "ddhreach/benchmarks.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/expansion.hpp"

using namespace ddhreach;

namespace {

ExploreFactory explore_for(const Box& box, std::uint64_t seed) {
  return [box, seed](std::size_t k, std::size_t j) { return make_gaussian_explore(box, seed, k, j, 0.25); };
}

ExpansionConfig small_config() {
  ExpansionConfig c;
  c.n_iter = 3;
  c.n_traj_first = 4;
  c.n_traj = 4;
  c.rollout_duration = 0.5;
  c.seed = 5;
  c.preflight_rollouts = 8;
  return c;
}

}  // namespace

TEST_CASE("initial states on a band") {
  const Grid grid({0}, {1}, {11});
  // V in [0, 0.1) on exactly three points outside the target.
  std::vector<double> v(11, -1.0), lv(11, -1.0);
  v[2] = 0.05;
  v[3] = 0.0;
  v[4] = 0.09;
  v[5] = 0.5;
  v[6] = 0.5;
  lv[6] = 0.1;
  const ScalarField value(grid, v), l(grid, lv);
  Rng rng(1);
  Dataset empty(1, 1);
  const auto s = get_init(value, l, empty, 3, 0.1, false, rng);
  // Compare grid indices rather than coordinates.
  std::set<long> got;
  for (const auto& x : s) got.insert(std::lround(x[0] * 10));
  CHECK(got == std::set<long>{2, 3, 4});

  // With an oversubscribed band the draws repeat but stay in the band.
  const auto many = get_init(value, l, empty, 10, 0.1, false, rng);
  CHECK(many.size() == 10);
  for (const auto& x : many) CHECK(got.count(std::lround(x[0] * 10)) == 1);

  // Empty band: fall back to V >= 0, which includes the target.
  const ScalarField target_only(grid, lv);
  const auto t = get_init(target_only, l, empty, 2, 0.1, false, rng);
  for (const auto& x : t) CHECK(interpolate(l, x).value >= 0.0);

  CHECK_THROWS_AS(get_init(ScalarField::constant(grid, -1.0), l, empty, 1, 0.1, false, rng), NumericalError);
}

TEST_CASE("density weights favour points far from the data") {
  const Grid grid({0}, {1}, {5});
  const std::vector<std::size_t> pool{0, 1, 2, 3, 4};
  Dataset d(1, 1);
  d.append(std::vector<double>{0.5}, std::vector<double>{0}, std::vector<double>{0});
  const auto w = init_weights(grid, pool, d);
  CHECK(w[2] == 0.0);
  CHECK(w[2] < *std::min_element(w.begin() + 3, w.end()));
  CHECK(w[2] < *std::min_element(w.begin(), w.begin() + 2));
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.25));

  // A zero-weight point is never drawn while others remain.
  std::vector<double> v(5, 0.05), lv(5, -1.0);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    for (const auto& x : get_init(ScalarField(grid, v), ScalarField(grid, lv), d, 4, 0.1, true, rng)) {
      CHECK(x[0] != 0.5);
    }
  }
}

TEST_CASE("gaussian exploration is reproducible and inside the box") {
  const Box box{{-1, 0}, {1, 3}};
  const Policy a = make_gaussian_explore(box, 9, 2, 4, 0.25), b = make_gaussian_explore(box, 9, 2, 4, 0.25);
  const Policy c = make_gaussian_explore(box, 9, 2, 5, 0.25);
  const double x[2] = {0, 0};
  bool differs = false;
  for (int k = 0; k < 200; ++k) {
    const auto ua = a(x, 0.0).control, ub = b(x, 0.0).control, uc = c(x, 0.0).control;
    CHECK(ua == ub);
    CHECK(box.contains(ua));
    differs = differs || ua != uc;
  }
  CHECK(differs);
  CHECK(a(x, 0).branch == Branch::kExplore);
}

TEST_CASE("expansion config validation") {
  ExpansionConfig c;
  CHECK_NOTHROW(c.validate());
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.rollout_dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero iterations return the target") {
  const PolynomialBenchmark b = make_polynomial_benchmark({7, 21});
  ExpansionConfig c = small_config();
  c.n_iter = 0;
  const ExpansionResult r =
      expand(c, polynomial_expansion_problem(b), *b.system, b.backup(), explore_for(b.system->control_box(), 5));
  CHECK(r.records.empty());
  for (std::size_t i = 0; i < b.l.size(); ++i) CHECK(r.safe_value[i] == b.l[i]);
}

TEST_CASE("preflight rejects an overlapping target and a non-invariant target") {
  const PolynomialBenchmark b = make_polynomial_benchmark({7, 21});
  ExpansionProblem p = polynomial_expansion_problem(b);
  p.g = ScalarField::constant(b.grid, -1.0);
  CHECK_THROWS_AS(preflight(p, *b.system, b.backup(), small_config()), SafetyViolation);

  const ExpansionProblem q = polynomial_expansion_problem(b);
  const Policy push = [](std::span<const double>, double) { return PolicyDecision{{1.0, 1.0}, Branch::kBackup, false}; };
  ExpansionConfig c = small_config();
  c.rollout_duration = 2.0;
  CHECK_THROWS_AS(preflight(q, *b.system, push, c), SafetyViolation);
  CHECK_NOTHROW(preflight(q, *b.system, b.backup(), c));
}

TEST_CASE("a short expansion grows safely and prunes exactly") {
  const PolynomialBenchmark b = make_polynomial_benchmark({7, 21});
  const ExpansionProblem prob = polynomial_expansion_problem(b);
  const ExploreFactory ex = explore_for(b.system->control_box(), 5);

  ExpansionConfig c = small_config();
  std::vector<double> volumes;
  std::vector<std::shared_ptr<const Dataset>> datasets;
  std::size_t prev_size = 0;
  bool first = true;
  const ExpansionResult r = expand(c, prob, *b.system, b.backup(), ex, [&](const IterationOutput& out) {
    CHECK(out.record.min_g > 0.0);
    CHECK(out.record.dataset_before == prev_size);
    CHECK(out.record.dataset_after == out.data.size());
    prev_size = out.data.size();
    if (first) {
      // The first rollouts start inside the target and follow the backup.
      for (const auto& tr : out.trajectories) CHECK(prob.l_exact(tr.samples.state(0)) >= 0.0);
      first = false;
    }
    // The target stays inside every solved set.
    for (std::size_t i = 0; i < prob.l.size(); ++i) {
      if (prob.l[i] >= 0.0) CHECK(out.value.final_value[i] >= 0.0);
    }
    volumes.push_back(out.record.safe_volume);
  });
  REQUIRE(r.records.size() == 3);
  for (std::size_t k = 1; k < volumes.size(); ++k) CHECK(volumes[k] >= volumes[k - 1] - 1.0 / b.grid.size());
  CHECK(r.records[0].dataset_after == r.records[0].branches.backup + r.records[0].branches.safe +
                                          r.records[0].branches.explore);

  // Same seed, same result.
  const ExpansionResult again = expand(c, prob, *b.system, b.backup(), ex);
  CHECK(*again.state.data == *r.state.data);
  for (std::size_t i = 0; i < r.safe_value.size(); ++i) CHECK(again.safe_value[i] == r.safe_value[i]);

  // With pruning, the kept data reproduces each iteration's field.
  c.prune = true;
  const ExpansionResult pr = expand(c, prob, *b.system, b.backup(), ex, [&](const IterationOutput& out) {
    REQUIRE(out.prune_map != nullptr);
    CHECK(out.data.size() == out.record.pruned_size);
    CHECK(out.record.pruned_size == out.record.used_indices);
    ProblemSpec ps{ReachAvoidSets{prob.l, prob.g}, c.horizon,
                   with_dataset(prob.hamiltonian, std::make_shared<Dataset>(out.data))};
    const SolveResult re = solve(ps, prob.solve);
    for (std::size_t i = 0; i < re.final_value.size(); ++i) CHECK(re.final_value[i] == out.value.final_value[i]);
  });
  CHECK(pr.records.size() == 3);
}
