#include "ddhreach/expansion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "ddhreach/errors.hpp"

namespace ddhreach {

void ExpansionConfig::validate() const {
  if (n_traj_first == 0 || n_traj == 0) throw ConfigError("rollout counts must be positive");
  if (!(rollout_duration > 0.0) || !(rollout_dt > 0.0)) {
    throw ConfigError("rollout duration and sampling interval must be positive");
  }
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(boundary_band > 0.0)) throw ConfigError("boundary_band must be positive");
  if (!(explore_std_fraction >= 0.0)) throw ConfigError("explore_std_fraction must be >= 0");
}

std::vector<double> init_weights(const Grid& grid, const std::vector<std::size_t>& pool,
                                 const Dataset& data) {
  std::vector<double> w(pool.size(), 1.0);
  if (data.empty()) return w;
  std::vector<double> x(grid.dims());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    grid.point(pool[k], x);
    double best = INFINITY;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto s = data.state(i);
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - s[j]) * (x[j] - s[j]);
      best = std::min(best, d);
    }
    w[k] = std::sqrt(best);
  }
  return w;
}

std::vector<std::vector<double>> get_init(const ScalarField& value, const ScalarField& l,
                                          const Dataset& data, std::size_t n, double band,
                                          bool weighted, Rng& rng) {
  const Grid& grid = value.grid();
  std::vector<std::size_t> pool;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    if (value[f] >= 0.0 && value[f] < band && l[f] < 0.0) pool.push_back(f);
  }
  if (pool.empty()) {
    for (std::size_t f = 0; f < grid.size(); ++f) {
      if (value[f] >= 0.0) pool.push_back(f);
    }
  }
  if (pool.empty()) throw NumericalError("empty safe set: no initial states available");

  std::vector<double> w = weighted ? init_weights(grid, pool, data)
                                   : std::vector<double>(pool.size(), 1.0);
  if (std::all_of(w.begin(), w.end(), [](double a) { return a <= 0.0; })) {
    std::fill(w.begin(), w.end(), 1.0);
  }
  const bool replace = pool.size() < n;
  std::vector<bool> taken(pool.size(), false);
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    std::size_t open = 0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (taken[k]) continue;
      total += w[k];
      ++open;
    }
    std::size_t pick = pool.size();
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        if (taken[k] || w[k] <= 0.0) continue;
        pick = k;
        if (r < w[k]) break;
        r -= w[k];
      }
    } else {
      // Only zero-weight points remain: draw uniformly among them.
      std::size_t r = rng.below(open);
      for (std::size_t k = 0; k < pool.size(); ++k) {
        if (taken[k]) continue;
        if (r-- == 0) {
          pick = k;
          break;
        }
      }
    }
    out.push_back(grid.point(pool[pick]));
    if (!replace) taken[pick] = true;
  }
  return out;
}

Policy make_gaussian_explore(const Box& controls, std::uint64_t seed, std::size_t iteration,
                             std::size_t rollout, double std_fraction) {
  Rng mean_rng = Rng::stream(seed, "explore-mean", iteration, rollout);
  std::vector<double> mean(controls.dims());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    mean[j] = mean_rng.uniform(controls.lower[j], controls.upper[j]);
  }
  std::vector<double> sd = controls.half_width();
  for (double& s : sd) s *= std_fraction;
  auto rng = std::make_shared<Rng>(Rng::stream(seed, "explore", iteration, rollout));
  return [controls, mean, sd, rng](std::span<const double>, double) {
    PolicyDecision d;
    d.control.resize(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) d.control[j] = mean[j] + sd[j] * rng->normal();
    controls.clamp(d.control);
    d.branch = Branch::kExplore;
    return d;
  };
}

namespace {

std::string describe_trajectory(const Trajectory& tr, const std::vector<double>* values,
                                const std::function<double(std::span<const double>)>& g) {
  std::ostringstream os;
  os.precision(17);
  os << "t,x...,u...,branch,g,value\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    for (double a : tr.samples.state(k)) os << "," << a;
    for (double a : tr.samples.control(k)) os << "," << a;
    os << "," << branch_name(tr.branches[k]) << "," << g(tr.samples.state(k));
    os << "," << (values && k < values->size() ? (*values)[k] : NAN) << "\n";
  }
  if (tr.diverged) os << "diverged: " << tr.divergence_reason << "\n";
  return os.str();
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, const Fn& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void preflight(const ExpansionProblem& problem, const Dynamics& dynamics, const Policy& backup,
               const ExpansionConfig& config) {
  const Grid& grid = problem.l.grid();
  std::vector<std::size_t> target;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    if (problem.l[f] >= 0.0) {
      if (problem.g[f] <= 0.0) {
        std::ostringstream os;
        os << "target and unsafe sets intersect at grid point " << f;
        throw SafetyViolation(os.str(), "");
      }
      target.push_back(f);
    }
  }
  if (target.empty()) throw ConfigError("the target set contains no grid point");
  const std::size_t count = std::min(config.preflight_rollouts, target.size());
  std::vector<std::string> failures(count);
  parallel_for(count, config.workers, [&](std::size_t k) {
    const std::size_t f = target[k * target.size() / count];
    const auto x0 = grid.point(f);
    const Trajectory tr = rk4_rollout(dynamics, backup, x0, config.rollout_duration, config.rollout_dt);
    bool bad = tr.diverged;
    for (std::size_t s = 0; s < tr.times.size() && !bad; ++s) {
      const auto x = tr.samples.state(s);
      bad = problem.l_exact(x) < -config.preflight_margin || problem.g_exact(x) <= 0.0;
    }
    if (bad) failures[k] = describe_trajectory(tr, nullptr, problem.g_exact);
  });
  for (const auto& f : failures) {
    if (!f.empty()) throw SafetyViolation("target set is not invariant under the backup policy", f);
  }
}

ExpansionState run_iteration(const ExpansionState& state, const ExpansionProblem& problem,
                             const Dynamics& dynamics, const Policy& backup,
                             const ExploreFactory& explore, const ExpansionConfig& config,
                             IterationRecord& record, const IterationSink& sink) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t k = state.iteration;
  const Grid& grid = problem.l.grid();
  const Dataset& data = *state.data;
  record = IterationRecord{};
  record.iteration = k;
  record.dataset_before = data.size();

  // Switching value: the target level function at k = 0.
  const ScalarField& switch_value = state.value ? state.value->final_value : problem.l;
  std::optional<PolicyContext> ctx;
  if (state.value) {
    ctx.emplace(*state.value, with_dataset(problem.hamiltonian, state.data), config.epsilon,
                config.horizon);
  }

  const std::size_t n_traj = k == 0 ? config.n_traj_first : config.n_traj;
  Rng init_rng = Rng::stream(config.seed, "init", k);
  const auto starts = get_init(switch_value, problem.l, data, n_traj, config.boundary_band,
                               config.density_weighting, init_rng);

  std::vector<Trajectory> trajs(starts.size(), Trajectory(dynamics));
  std::vector<std::vector<double>> values(starts.size());
  parallel_for(starts.size(), config.workers, [&](std::size_t j) {
    const Policy exp = explore(k, j);
    Policy pol;
    if (ctx) {
      pol = [&](std::span<const double> x, double t) {
        return switching_policy(*ctx, problem.l, backup, exp, x, t);
      };
    } else {
      pol = [&](std::span<const double> x, double t) {
        PolicyDecision d = backup(x, t);
        d.branch = interpolate(problem.l, x).value >= 0.0 ? Branch::kBackup : Branch::kSafe;
        return d;
      };
    }
    trajs[j] = rk4_rollout(dynamics, pol, starts[j], config.rollout_duration, config.rollout_dt);
    for (std::size_t s = 0; s < trajs[j].times.size(); ++s) {
      values[j].push_back(interpolate(switch_value, trajs[j].samples.state(s)).value);
    }
  });

  double min_g = INFINITY;
  auto grown = std::make_shared<Dataset>(data);
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const Trajectory& tr = trajs[j];
    if (tr.diverged) {
      throw SafetyViolation("rollout " + std::to_string(j) + " of iteration " + std::to_string(k) +
                                " diverged",
                            describe_trajectory(tr, &values[j], problem.g_exact));
    }
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      const double gv = problem.g_exact(tr.samples.state(s));
      min_g = std::min(min_g, gv);
      if (!(gv > 0.0)) {
        std::ostringstream os;
        os << "rollout " << j << " of iteration " << k << " entered the unsafe set at t = "
           << tr.times[s];
        throw SafetyViolation(os.str(), describe_trajectory(tr, &values[j], problem.g_exact));
      }
      switch (tr.branches[s]) {
        case Branch::kBackup: ++record.branches.backup; break;
        case Branch::kSafe: ++record.branches.safe; break;
        case Branch::kExplore: ++record.branches.explore; break;
        case Branch::kNone: break;
      }
      if (tr.fallbacks[s]) ++record.branches.fallback;
    }
    grown->append(tr.samples);
  }
  record.min_g = min_g;
  record.dataset_after = grown->size();

  ProblemSpec ps{ReachAvoidSets{problem.l, problem.g}, config.horizon,
                 with_dataset(problem.hamiltonian, grown)};
  SolveConfig sc = problem.solve;
  sc.workers = config.workers;
  SolveResult res = solve(ps, sc);
  record.used_indices = res.used_indices.size();
  record.solve_steps = res.steps_taken;
  record.safe_volume = nonnegative_fraction(res.final_value);

  ExpansionState next;
  next.iteration = k + 1;
  std::optional<PruneResult> pr;
  if (config.prune) {
    pr = prune(*grown, res.used_indices);
    IndexSet mapped;
    for (std::size_t i : res.used_indices) mapped.push_back(pr->old_to_new.at(i));
    res.used_indices = std::move(mapped);
    next.data = std::make_shared<Dataset>(pr->data);
  } else {
    next.data = grown;
  }
  record.pruned_size = next.data->size();
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  next.value = std::move(res);

  if (sink) {
    sink(IterationOutput{record, *next.value, *next.data, trajs, values,
                         pr ? &pr->old_to_new : nullptr});
  }
  (void)grid;
  return next;
}

ExpansionResult expand(const ExpansionConfig& config, const ExpansionProblem& problem,
                       const Dynamics& dynamics, const Policy& backup,
                       const ExploreFactory& explore, const IterationSink& sink) {
  config.validate();
  if (!(problem.l.grid() == problem.g.grid())) throw ConfigError("l and g live on different grids");
  ExpansionState state;
  state.data = std::make_shared<Dataset>(dynamics.state_dim(), dynamics.control_dim());
  ExpansionResult out{state, problem.l, {}};
  if (config.n_iter == 0) return out;
  preflight(problem, dynamics, backup, config);
  for (std::size_t k = 0; k < config.n_iter; ++k) {
    IterationRecord rec;
    state = run_iteration(state, problem, dynamics, backup, explore, config, rec, sink);
    out.records.push_back(rec);
  }
  out.safe_value = state.value->final_value;
  out.state = std::move(state);
  return out;
}

}  // namespace ddhreach
