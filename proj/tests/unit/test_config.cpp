#include <string>

#include <doctest.h>
#include <json.hpp>

#include "ddhreach/config.hpp"
#include "ddhreach/errors.hpp"

using namespace ddhreach;

namespace {

std::string edit(const RunConfig& c, const std::function<void(nlohmann::ordered_json&)>& f) {
  auto j = nlohmann::ordered_json::parse(serialize_config(c));
  f(j);
  return j.dump();
}

}  // namespace

TEST_CASE("parse, serialize, parse is the identity") {
  for (const RunConfig& c : {default_polynomial_config(7), default_polynomial_config(123), default_tiltrotor_config()}) {
    const std::string text = serialize_config(c);
    const RunConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
  }
  RunConfig c = default_polynomial_config(7);
  c.hamiltonian.lipschitz.source = "explicit";
  c.hamiltonian.lipschitz.spec = LipschitzSpec{OutputElementwiseLipschitz{{1.5, 0.25}}};
  c.solver.dissipation = "explicit";
  c.solver.values = {3.0, 4.0};
  c.dataset.path = "data.csv";
  c.eval.initial_states = {{0.1, 0.2}, {-0.3, 0.0}};
  c.problem.safe.bounds[0].lower.reset();
  const RunConfig back = parse_config(serialize_config(c));
  CHECK(back == c);
}

TEST_CASE("an empty document takes every default") {
  const RunConfig c = parse_config("{\"hamiltonian\": {\"type\": \"ddh\"}, \"dataset\": {\"collect\": 10},"
                                   " \"problem\": {\"target\": {\"type\": \"ball\", \"center\": [0, 0], \"radius\": 0.2}}}");
  CHECK(c.grid == GridConfig{});
  CHECK(c.solver == SolverConfig{});
  CHECK(c.system.type == "polynomial");
  CHECK(c.dataset.collect == 10);
}

TEST_CASE("malformed configurations are config errors") {
  const RunConfig base = default_polynomial_config(7);
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["bogus"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["solver"]["cfl"] = 0.5; })), ConfigError);
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["grid"]["counts"] = "many"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["hamiltonian"]["type"] = "magic"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["grid"]["counts"] = {61}; })), ConfigError);
  // A certified constant exists only for the polynomial system.
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["system"]["type"] = "dataset"; })), ConfigError);
  // Reach-avoid without a target.
  CHECK_THROWS_AS(parse_config(edit(base, [](auto& j) { j["problem"]["target"] = nullptr; })), ConfigError);
  // Brute force for a data-only system.
  CHECK_THROWS_AS(parse_config(edit(base,
                                    [](auto& j) {
                                      j["system"]["type"] = "dataset";
                                      j["hamiltonian"]["type"] = "brute_force";
                                      j["dataset"]["path"] = "d.csv";
                                      j["solver"]["dissipation"] = "auto";
                                    })),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("a DDH solve without any data source is a config error") {
  RunConfig c = default_polynomial_config(7);
  c.grid.counts = {11, 11};
  c.dataset.collect = 0;
  const RunSetup s(parse_config(serialize_config(c)));
  const auto data = s.load_or_collect();
  CHECK(data->empty());
  CHECK_THROWS_AS(solve(s.problem(data), s.solve_config(s.hamiltonian(data), 1)), ConfigError);
}

TEST_CASE("the expansion seed follows the global seed") {
  const RunConfig c = parse_config(edit(default_polynomial_config(7), [](auto& j) { j["seed"] = 99; }));
  CHECK(c.expansion.seed == 99);
}

TEST_CASE("run setup builds the polynomial benchmark") {
  RunConfig c = default_polynomial_config(7);
  c.grid.counts = {21, 21};
  c.dataset.collect = 50;
  const RunSetup s(c);
  REQUIRE(s.dynamics());
  CHECK(s.grid().size() == 441);
  const auto data = s.load_or_collect();
  CHECK(data->size() == 50);
  CHECK(*data == *s.load_or_collect());
  const ProblemSpec p = s.problem(data);
  CHECK(p.reach_avoid());
  const double centre[2] = {0, 0}, edge[2] = {0.9, 0};
  CHECK(s.l_exact(centre) == doctest::Approx(0.2));
  CHECK(s.g_exact(edge) < 0.0);
  const SolveConfig sc = s.solve_config(p.hamiltonian, 2);
  CHECK(sc.workers == 2);
  CHECK(sc.dissipation.size() == 2);
  const Policy b = s.backup();
  const double x[2] = {0.1, 0.05};
  CHECK(s.dynamics()->control_box().contains(b(x, 0.0).control));
}
