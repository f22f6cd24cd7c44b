// ddhreach command-line front end.
//
// Exit codes: 0 success, 1 comparison failed or I/O error, 2 configuration
// error, 3 numerical abort, 4 safety violation.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddhreach/config.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/expansion.hpp"
#include "ddhreach/io.hpp"
#include "ddhreach/policy.hpp"
#include "ddhreach/rng.hpp"
#include "ddhreach/solver.hpp"

using namespace ddhreach;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool verbose = false;
};

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << "\n";
}

RunConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.expansion.seed = *g.seed;
  }
  return c;
}

fs::path out_dir(const Globals& g, const RunConfig* c) {
  fs::path d = !g.out.empty() ? fs::path(g.out) : fs::path(c ? c->out : "run");
  fs::create_directories(d);
  return d;
}

int cmd_gen_system(const Globals& g, const std::string& type) {
  const std::uint64_t seed = g.seed.value_or(7);
  RunConfig c;
  if (type == "polynomial") {
    c = default_polynomial_config(seed);
  } else if (type == "tiltrotor") {
    c = default_tiltrotor_config();
    if (g.seed) {
      c.seed = seed;
      c.expansion.seed = seed;
    }
  } else {
    throw ConfigError("unknown system type '" + type + "'");
  }
  const fs::path dir = out_dir(g, &c);
  if (type == "polynomial") write_polynomial_coefficients(make_polynomial_system(seed), dir / "coefficients.csv");
  write_text(dir / "config.json", serialize_config(c));
  log(g, "wrote " + (dir / "config.json").string());
  return 0;
}

int cmd_collect(const Globals& g, std::size_t count) {
  const RunConfig c = load(g);
  const RunSetup setup(c);
  const std::size_t n = count > 0 ? count : c.dataset.collect;
  if (n == 0) throw ConfigError("nothing to collect: set dataset.collect or --count");
  const Dataset d = setup.collect(n);
  const fs::path dir = out_dir(g, &c);
  save_dataset(d, dir / "dataset.csv");
  log(g, "collected " + std::to_string(d.size()) + " samples");
  return 0;
}

int cmd_solve(const Globals& g) {
  const RunConfig c = load(g);
  const RunSetup setup(c);
  auto data = setup.load_or_collect();
  const ProblemSpec problem = setup.problem(data);
  const SolveConfig sc = setup.solve_config(problem.hamiltonian, g.workers);
  const SolveResult res = solve(problem, sc);
  const fs::path dir = out_dir(g, &c);
  write_field_binary(res.final_value, dir / "value.bin");
  write_solve_metadata(res, dir / "solve.json");
  if (!data->empty()) save_dataset(*data, dir / "dataset.csv");
  write_text(dir / "config.json", serialize_config(c));
  log(g, "solved in " + std::to_string(res.steps_taken) + " steps, safe fraction " +
             std::to_string(nonnegative_fraction(res.final_value)));
  return 0;
}

int cmd_expand(const Globals& g) {
  RunConfig c = load(g);
  c.expansion.workers = g.workers;
  const RunSetup setup(c);
  const ExpansionProblem problem = setup.expansion_problem();
  const fs::path dir = out_dir(g, &c);
  write_text(dir / "config.json", serialize_config(c));
  const IterationSink sink = [&](const IterationOutput& out) {
    export_iteration(out, dir);
    log(g, "iteration " + std::to_string(out.record.iteration) + ": safe fraction " +
               std::to_string(out.record.safe_volume) + ", dataset " + std::to_string(out.data.size()));
  };
  try {
    expand(c.expansion, problem, *setup.dynamics(), setup.backup(), setup.explore(), sink);
  } catch (const SafetyViolation& e) {
    write_text(dir / "forensics.txt", std::string(e.what()) + "\n" + e.forensics());
    throw;
  }
  return 0;
}

int cmd_eval_policy(const Globals& g) {
  const RunConfig c = load(g);
  const RunSetup setup(c);
  if (!setup.dynamics()) throw ConfigError("policy evaluation needs known dynamics");
  auto data = setup.load_or_collect();
  const ProblemSpec problem = setup.problem(data);
  SolveConfig sc = setup.solve_config(problem.hamiltonian, g.workers);
  sc.store_history = true;
  const SolveResult res = solve(problem, sc);
  const PolicyContext ctx(res, problem.hamiltonian, c.expansion.epsilon, problem.horizon, c.eval.time_varying);
  const Policy backup = setup.backup();

  std::vector<std::vector<double>> starts = c.eval.initial_states;
  if (c.eval.sample_inside > 0) {
    // Grid points whose full one-cell neighbourhood is safe.
    const Grid& grid = setup.grid();
    std::vector<std::size_t> pool;
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const auto idx = grid.multi_index(f);
      bool inside = true;
      std::vector<std::size_t> nb(idx.size());
      const std::size_t corners = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(idx.size())));
      for (std::size_t k = 0; k < corners && inside; ++k) {
        std::size_t code = k;
        for (std::size_t j = 0; j < idx.size() && inside; ++j) {
          const long off = static_cast<long>(code % 3) - 1;
          code /= 3;
          const long q = static_cast<long>(idx[j]) + off;
          if (q < 0 || q >= static_cast<long>(grid.counts()[j])) inside = false;
          else nb[j] = static_cast<std::size_t>(q);
        }
        inside = inside && res.final_value.at(nb) >= 0.0;
      }
      if (inside) pool.push_back(f);
    }
    Rng rng = Rng::stream(c.seed, "eval-init");
    for (std::size_t k = 0; k < c.eval.sample_inside && !pool.empty(); ++k) {
      const std::size_t j = static_cast<std::size_t>(rng.below(pool.size()));
      starts.push_back(grid.point(pool[j]));
      pool.erase(pool.begin() + static_cast<long>(j));
    }
  }

  const fs::path dir = out_dir(g, &c);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Policy pol;
    if (c.eval.policy == "safe") {
      pol = make_safe_policy(ctx, backup);
    } else {
      const Policy exp = setup.explore()(0, k);
      pol = [&, exp](std::span<const double> x, double t) {
        return switching_policy(ctx, setup.l(), backup, exp, x, t);
      };
    }
    const Trajectory tr = rk4_rollout(*setup.dynamics(), pol, starts[k], c.eval.duration, c.eval.dt);
    std::vector<double> values;
    double min_g = INFINITY;
    bool reached = false;
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      const auto x = tr.samples.state(s);
      const double tau = std::max(0.0, problem.horizon - tr.times[s]);
      values.push_back(ctx.at(tau).value_at(x).value);
      min_g = std::min(min_g, setup.g_exact(x));
      reached = reached || setup.l_exact(x) >= 0.0;
    }
    char name[32];
    std::snprintf(name, sizeof name, "traj_%03zu.csv", k);
    write_trajectory_csv(tr, &values, dir / name);
    summary.push_back({{"start", starts[k]},
                       {"min_g", min_g},
                       {"safe", min_g > 0.0 && !tr.diverged},
                       {"reached_target", reached},
                       {"diverged", tr.diverged}});
  }
  write_text(dir / "eval.json", summary.dump(2) + "\n");
  log(g, "evaluated " + std::to_string(starts.size()) + " rollouts");
  return 0;
}

// Exit 0 when lower <= upper + tol at every grid point.
int cmd_compare(const Globals& g, const std::string& lower, const std::string& upper, double tol) {
  const ScalarField a = read_field_binary(lower), b = read_field_binary(upper);
  if (!(a.grid() == b.grid())) throw ConfigError("compared fields live on different grids");
  std::size_t bad = 0;
  double worst = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, a[i] - b[i]);
    if (a[i] > b[i] + tol) ++bad;
  }
  std::printf("max(lower - upper) = %.6e, %zu of %zu points violate containment\n", worst, bad, a.size());
  log(g, bad == 0 ? "contained" : "not contained");
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven Hamiltonian reachability toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--seed", g.seed, "Global seed (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g.verbose, "Progress on stderr");

  std::string type = "polynomial";
  auto* gen = app.add_subcommand("gen-system", "Write a benchmark config and coefficient dump");
  gen->add_option("--type", type, "polynomial or tiltrotor");
  std::size_t count = 0;
  auto* collect = app.add_subcommand("collect", "Uniformly sample the system into a dataset");
  collect->add_option("--count", count, "Sample count (default: dataset.collect)");
  auto* solve_cmd = app.add_subcommand("solve", "Solve the configured HJ problem");
  auto* expand_cmd = app.add_subcommand("expand", "Run the safe set expansion loop");
  auto* eval = app.add_subcommand("eval-policy", "Roll out the safe or switching policy");
  std::string lower, upper;
  double tol = 1e-6;
  auto* compare = app.add_subcommand("compare", "Check LOWER <= UPPER + tol pointwise");
  compare->add_option("lower", lower, "Field expected to be smaller")->required();
  compare->add_option("upper", upper, "Field expected to be larger")->required();
  compare->add_option("--tol", tol, "Allowed excess");

  // Global options may follow the subcommand too.
  for (auto* sub : {gen, collect, solve_cmd, expand_cmd, eval, compare}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen_system(g, type);
    if (*collect) return cmd_collect(g, count);
    if (*solve_cmd) return cmd_solve(g);
    if (*expand_cmd) return cmd_expand(g);
    if (*eval) return cmd_eval_policy(g);
    if (*compare) return cmd_compare(g, lower, upper, tol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const SafetyViolation& e) {
    std::cerr << "safety violation: " << e.what() << "\n" << e.forensics() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
