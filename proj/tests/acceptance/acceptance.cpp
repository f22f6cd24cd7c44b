// Acceptance run: one PASS/FAIL line per primary criterion.
//
//   acceptance [--only 1,3,6] [--workers N] [--out DIR]
//
// Criteria 3 and 6 share one solve, as do 7, 8 and 9. Exit status is 0 only
// when every selected criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddhreach/benchmarks.hpp"
#include "ddhreach/dataset.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/expansion.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/hamiltonian.hpp"
#include "ddhreach/io.hpp"
#include "ddhreach/policy.hpp"
#include "ddhreach/rng.hpp"
#include "ddhreach/solver.hpp"
#include "ddhreach/systems.hpp"

using namespace ddhreach;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Options {
  std::size_t workers = 1;
  fs::path out;
};

// ---------------------------------------------------------------------------
// 1. Closed-form inner minima against sampled and enumerated oracles.

// Near-uniform unit vectors: equal angles in 2D, a Fibonacci lattice in 3D.
std::vector<double> sphere_points(std::size_t n, std::size_t count) {
  std::vector<double> pts(n * count);
  const double pi = std::acos(-1.0);
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < count; ++k) {
    if (n == 2) {
      const double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(count);
      pts[2 * k] = std::cos(a);
      pts[2 * k + 1] = std::sin(a);
    } else {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      const double rho = std::sqrt(1.0 - z * z);
      const double a = golden * static_cast<double>(k);
      pts[3 * k] = rho * std::cos(a);
      pts[3 * k + 1] = rho * std::sin(a);
      pts[3 * k + 2] = z;
    }
  }
  return pts;
}

Outcome criterion1(const Options&) {
  constexpr std::size_t kTriples = 1000, kSphere = 1000000;
  const std::vector<double> s2 = sphere_points(2, kSphere), s3 = sphere_points(3, kSphere);
  Rng rng(101);
  double ball_err = 0.0, rect_err = 0.0;
  for (std::size_t t = 0; t < kTriples; ++t) {
    const std::size_t n = 2 + t % 2;
    std::vector<double> p(n), v(n), rr(n);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = rng.uniform(-2.0, 2.0);
      v[j] = rng.uniform(-2.0, 2.0);
      rr[j] = rng.uniform(0.0, 1.5);
    }
    const double r = rng.uniform(0.0, 1.5);

    const std::vector<double>& s = n == 2 ? s2 : s3;
    double best = INFINITY;
    for (std::size_t k = 0; k < kSphere; ++k) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d += p[j] * (v[j] + r * s[k * n + j]);
      best = std::min(best, d);
    }
    ball_err = std::max(ball_err, std::abs(best - ddh_inner_ball(p, v, r)));

    // A linear function attains its minimum over a box at a corner.
    const std::size_t m = n + 1;  // rect triples one dimension up
    std::vector<double> pm(m), vm(m), rm(m);
    for (std::size_t j = 0; j < m; ++j) {
      pm[j] = rng.uniform(-2.0, 2.0);
      vm[j] = rng.uniform(-2.0, 2.0);
      rm[j] = rng.uniform(0.0, 1.5);
    }
    double corner = INFINITY;
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d += pm[j] * (vm[j] + ((mask >> j) & 1 ? rm[j] : -rm[j]));
      corner = std::min(corner, d);
    }
    rect_err = std::max(rect_err, std::abs(corner - ddh_inner_rect(pm, vm, rm)));
  }
  return {ball_err <= 1e-3 && rect_err <= 1e-12,
          fmt("max ball error %.3e (tol 1e-3), max rect error %.3e (tol 1e-12)", ball_err, rect_err)};
}

// ---------------------------------------------------------------------------
// Shared polynomial fixtures.

struct PolyFixture {
  PolynomialBenchmark bench;
  std::shared_ptr<const Dataset> data;  // 500 uniform samples
};

PolyFixture& poly_fixture() {
  static PolyFixture f = [] {
    PolynomialSetup setup;
    setup.grid_points = 101;
    PolynomialBenchmark b = make_polynomial_benchmark(setup);
    Rng rng = Rng::stream(7, "collect");
    auto d = std::make_shared<const Dataset>(collect_uniform(*b.system, b.grid, 500, rng));
    return PolyFixture{std::move(b), std::move(d)};
  }();
  return f;
}

Outcome criterion2(const Options&) {
  const PolyFixture& f = poly_fixture();
  const PolynomialSystem& sys = *f.bench.system;
  const ControlGrid controls(sys.control_box(), {41, 41});
  Rng rng(202);
  double worst = -INFINITY;
  std::size_t violations = 0;
  for (std::size_t t = 0; t < 10000; ++t) {
    const double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double p[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double h_hat = ddh(x, p, *f.data, f.bench.certified).value;
    // Exhaustive scan, independent of the system's structured maximizer.
    const double h = sys.scan_controls(x, p, controls).value;
    worst = std::max(worst, h_hat - h);
    if (h_hat > h + 1e-9) ++violations;
  }
  return {violations == 0, fmt("max(H_hat - H_brute) = %.3e over 10^4 queries, %zu violations", worst, violations)};
}

// ---------------------------------------------------------------------------
// 3 and 6: Avoid tube on the 101^2 grid.

// Uniform samples behind the Avoid tube. Pruning pays off on large sets; at
// 500 samples about 40% of them stay in use.
constexpr std::size_t kAvoidSamples = 5000;

struct AvoidRun {
  std::shared_ptr<const Dataset> data;
  SolveConfig config;
  SolveResult ddh, brute;
};

AvoidRun& avoid_run(const Options& opt) {
  static std::optional<AvoidRun> run;
  if (run) return *run;
  const PolyFixture& f = poly_fixture();
  Rng rng = Rng::stream(7, "collect-avoid");
  auto data = std::make_shared<const Dataset>(collect_uniform(*f.bench.system, f.bench.grid, kAvoidSamples, rng));
  SolveConfig sc;
  sc.workers = opt.workers;
  sc.dissipation = apriori_dissipation(f.bench.certified, f.bench.velocity_bound, f.bench.grid);
  const ProblemSpec dp{AvoidSets{f.bench.g}, 1.0, HamiltonianSpec::ddh(data, f.bench.certified)};
  const ProblemSpec bp{AvoidSets{f.bench.g}, 1.0,
                       HamiltonianSpec::brute_force(f.bench.system, f.bench.setup.control_counts)};
  SolveResult d = solve(dp, sc);
  SolveResult b = solve(bp, sc);
  run = AvoidRun{data, sc, std::move(d), std::move(b)};
  return *run;
}

Outcome criterion3(const Options& opt) {
  const AvoidRun& r = avoid_run(opt);
  const Grid& grid = r.ddh.final_value.grid();
  const double kappa = grid.max_spacing();
  double worst = -INFINITY;
  std::size_t above = 0, outside = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double vh = r.ddh.final_value[i], vb = r.brute.final_value[i];
    worst = std::max(worst, vh - vb);
    if (vh > vb + 1e-6) ++above;
    if (vh >= 0.0 && !(vb >= -kappa)) ++outside;
  }
  return {above == 0 && outside == 0 && r.ddh.dt == r.brute.dt,
          fmt("max(V_hat - V) = %.3e, %zu points above, %zu safe points outside {V >= -kappa}; "
              "%zu steps, dt %.3e, safe fractions %.4f / %.4f",
              worst, above, outside, r.ddh.steps_taken, r.ddh.dt,
              nonnegative_fraction(r.ddh.final_value), nonnegative_fraction(r.brute.final_value))};
}

bool bit_equal(const ScalarField& a, const ScalarField& b) {
  return a.values().size() == b.values().size() &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin(),
                    [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
}

Outcome criterion6(const Options& opt) {
  const AvoidRun& r = avoid_run(opt);
  const PolyFixture& f = poly_fixture();
  const PruneResult pr = prune(*r.data, r.ddh.used_indices);
  if (pr.empty) return {false, "nothing was used"};
  auto pruned = std::make_shared<const Dataset>(pr.data);
  const ProblemSpec pp{AvoidSets{f.bench.g}, 1.0, HamiltonianSpec::ddh(pruned, f.bench.certified)};
  const SolveResult again = solve(pp, r.config);
  const bool same = bit_equal(again.final_value, r.ddh.final_value);
  const double ratio = static_cast<double>(pruned->size()) / static_cast<double>(r.data->size());
  return {same && ratio < 0.25,
          fmt("re-solve bit-exact: %s; pruned %zu -> %zu (%.1f%%, limit 25%%)", same ? "yes" : "no",
              r.data->size(), pruned->size(), 100.0 * ratio)};
}

// ---------------------------------------------------------------------------

Outcome criterion4(const Options& opt) {
  const Grid grid({0.0}, {2.0}, {201});
  const ScalarField g = ScalarField::from_function(grid, [](std::span<const double> x) { return x[0]; });
  auto drift = std::make_shared<const FunctionDynamics>(
      1, Box{{0.0}, {0.0}},
      [](std::span<const double>, std::span<const double>, std::span<double> v) { v[0] = -1.0; });
  auto one = std::make_shared<Dataset>(1, 1);
  const double x0[1] = {1.0}, u0[1] = {0.0}, v0[1] = {-1.0};
  one->append(x0, u0, v0);

  SolveConfig sc;
  sc.workers = opt.workers;
  double err_brute = 0.0, err_ddh = 0.0;
  for (int which = 0; which < 2; ++which) {
    const HamiltonianSpec h = which == 0 ? HamiltonianSpec::brute_force(drift, {1})
                                         : HamiltonianSpec::ddh(one, LipschitzSpec{UniformLipschitz{0.0}});
    const SolveResult r = solve(ProblemSpec{AvoidSets{g}, 0.5, h}, sc);
    double& err = which == 0 ? err_brute : err_ddh;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      err = std::max(err, std::abs(r.final_value[i] - (grid.coordinate(0, i) - 0.5)));
    }
  }
  const double tol = 2.0 * grid.spacing(0);
  return {err_brute <= tol && err_ddh <= tol,
          fmt("max |V - (x - t)| = %.3e (known dynamics), %.3e (one-sample DDH); tol %.3e", err_brute,
              err_ddh, tol)};
}

Outcome criterion5(const Options& opt) {
  PolynomialBenchmark b = make_polynomial_benchmark();
  const PolyFixture& f = poly_fixture();
  auto full = f.data;
  auto half = std::make_shared<Dataset>(2, 2);
  for (std::size_t i = 0; i < full->size() / 2; ++i) half->append(full->sample(i));
  SolveConfig sc;
  sc.workers = opt.workers;
  sc.candidates.workers = opt.workers;
  sc.dissipation = apriori_dissipation(b.certified, b.velocity_bound, b.grid);

  double worst = -INFINITY;
  std::size_t violations = 0;
  for (int kind = 0; kind < 2; ++kind) {
    auto problem = [&](std::shared_ptr<const Dataset> d) {
      HamiltonianSpec h = HamiltonianSpec::ddh(std::move(d), b.certified);
      return kind == 0 ? ProblemSpec{AvoidSets{b.g}, 1.0, h} : ProblemSpec{ReachAvoidSets{b.l, b.g}, 1.0, h};
    };
    const SolveResult small = solve(problem(half), sc);
    const SolveResult big = solve(problem(full), sc);
    for (std::size_t i = 0; i < b.grid.size(); ++i) {
      const double gap = small.final_value[i] - big.final_value[i];
      worst = std::max(worst, gap);
      if (gap > 1e-9) ++violations;
    }
  }
  return {violations == 0,
          fmt("avoid and reach-avoid, |D| = %zu vs |D'| = %zu: max(V_D - V_D') = %.3e, %zu violations",
              half->size(), full->size(), worst, violations)};
}

// ---------------------------------------------------------------------------
// 7, 8, 9: safe set expansion on the polynomial benchmark.

ExpansionConfig poly_expansion_config(std::size_t workers) {
  ExpansionConfig c;
  c.n_iter = 5;
  c.n_traj_first = 10;
  c.n_traj = 10;
  c.rollout_duration = 1.0;
  c.rollout_dt = 0.01;
  c.horizon = 1.0;
  c.seed = 2024;
  c.prune = false;
  c.workers = workers;
  return c;
}

struct ExpansionRun {
  std::vector<ScalarField> values;
  std::vector<IterationRecord> records;
  std::size_t unsafe_samples = 0;
  std::string failure;
  std::shared_ptr<const Dataset> final_data;
};

struct PolyExpansion {
  PolynomialBenchmark bench = make_polynomial_benchmark();
  ExpansionProblem problem = polynomial_expansion_problem(bench);
};

PolyExpansion& poly_expansion() {
  static PolyExpansion p;
  return p;
}

ExpansionRun run_expansion(const ExpansionConfig& config, const ExpansionProblem& problem,
                           const Dynamics& dynamics, const Policy& backup, const fs::path& dir) {
  ExpansionRun run;
  const Box box = dynamics.control_box();
  const ExploreFactory explore = [&](std::size_t k, std::size_t j) {
    return make_gaussian_explore(box, config.seed, k, j, config.explore_std_fraction);
  };
  const IterationSink sink = [&](const IterationOutput& out) {
    run.values.push_back(out.value.final_value);
    for (const auto& tr : out.trajectories) {
      for (std::size_t s = 0; s < tr.times.size(); ++s) {
        if (!(problem.g_exact(tr.samples.state(s)) > 0.0)) ++run.unsafe_samples;
      }
    }
    if (!dir.empty()) export_iteration(out, dir);
  };
  try {
    ExpansionResult r = expand(config, problem, dynamics, backup, explore, sink);
    run.records = r.records;
    run.final_data = r.state.data;
  } catch (const SafetyViolation& e) {
    run.failure = std::string(e.what()) + "\n" + e.forensics();
  } catch (const std::exception& e) {
    run.failure = e.what();
  }
  return run;
}

// Containment of the target (exact on grid points) and monotone volumes.
struct ExpansionChecks {
  std::size_t target_misses = 0;  // target points with V < 0
  std::size_t deep_misses = 0;    // misses more than one cell inside the target
  double worst_volume_drop = 0.0;
  double worst_pointwise_drop = 0.0;
  double worst_interior_drop = 0.0;  // same, ignoring points on the domain edge
  bool volume_ok = true;
};

ExpansionChecks check_expansion(const ExpansionRun& run, const ScalarField& l) {
  ExpansionChecks c;
  const Grid& grid = l.grid();
  const double kappa = grid.max_spacing();
  const double cell = 1.0 / static_cast<double>(grid.size());
  for (std::size_t k = 0; k < run.values.size(); ++k) {
    const ScalarField& v = run.values[k];
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (l[i] >= 0.0 && v[i] < 0.0) {
        ++c.target_misses;
        if (l[i] >= kappa) ++c.deep_misses;
      }
    }
    if (k > 0) {
      const double drop = nonnegative_fraction(run.values[k - 1]) - nonnegative_fraction(v);
      c.worst_volume_drop = std::max(c.worst_volume_drop, drop);
      if (drop > cell) c.volume_ok = false;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = run.values[k - 1][i] - v[i];
        c.worst_pointwise_drop = std::max(c.worst_pointwise_drop, d);
        const auto idx = grid.multi_index(i);
        bool edge = false;
        for (std::size_t j = 0; j < idx.size(); ++j) edge = edge || idx[j] == 0 || idx[j] + 1 == grid.counts()[j];
        if (!edge) c.worst_interior_drop = std::max(c.worst_interior_drop, d);
      }
    }
  }
  return c;
}

std::string volumes(const ExpansionRun& run) {
  std::string s;
  for (const auto& v : run.values) s += fmt("%s%.4f", s.empty() ? "" : " ", nonnegative_fraction(v));
  return s;
}

std::optional<ExpansionRun>& poly_run_single() {
  static std::optional<ExpansionRun> r;
  return r;
}

fs::path run_dir(const Options& opt, const char* name) {
  const fs::path d = opt.out / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const ExpansionRun& poly_run(const Options& opt) {
  auto& r = poly_run_single();
  if (!r) {
    PolyExpansion& p = poly_expansion();
    r = run_expansion(poly_expansion_config(1), p.problem, *p.bench.system, p.bench.backup(),
                      run_dir(opt, "expansion_w1"));
  }
  return *r;
}

Outcome criterion7(const Options& opt) {
  const ExpansionRun& run = poly_run(opt);
  if (!run.failure.empty()) return {false, "expansion aborted: " + run.failure};
  const ExpansionChecks c = check_expansion(run, poly_expansion().problem.l);
  const bool ok = run.unsafe_samples == 0 && c.deep_misses == 0 && c.volume_ok &&
                  run.values.size() == 5;
  return {ok, fmt("%zu iterations, %zu unsafe samples, %zu target points outside S_k (%zu deeper than "
                  "one cell), worst volume drop %.2e, worst pointwise drop %.2e, volumes %s",
                  run.values.size(), run.unsafe_samples, c.target_misses, c.deep_misses,
                  c.worst_volume_drop, c.worst_pointwise_drop, volumes(run).c_str())};
}

Outcome criterion8(const Options& opt) {
  const ExpansionRun& run = poly_run(opt);
  if (!run.failure.empty() || !run.final_data) return {false, "no expansion result"};
  PolyExpansion& pe = poly_expansion();
  const PolynomialBenchmark& b = pe.bench;
  const ExpansionConfig cfg = poly_expansion_config(opt.workers);

  // Re-solve the last iteration keeping the time-indexed value fields.
  const HamiltonianSpec h = with_dataset(pe.problem.hamiltonian, run.final_data);
  SolveConfig sc = pe.problem.solve;
  sc.workers = opt.workers;
  sc.store_history = true;
  const SolveResult res = solve(ProblemSpec{ReachAvoidSets{b.l, b.g}, cfg.horizon, h}, sc);
  if (!bit_equal(res.final_value, run.values.back())) return {false, "re-solve differs from the expansion"};

  // States at least one cell inside the safe set: every grid node within one
  // spacing of x (max norm) has V >= 0. The safe set contains the target, so
  // target states qualify too.
  const Grid& grid = b.grid;
  const ScalarField& v = res.final_value;
  auto one_cell_inside = [&](const std::vector<double>& x) {
    long lo[2], hi[2];
    for (std::size_t j = 0; j < 2; ++j) {
      const double h = grid.spacing(j), m = grid.mins()[j];
      lo[j] = static_cast<long>(std::ceil((x[j] - h - m) / h - 1e-12));
      hi[j] = static_cast<long>(std::floor((x[j] + h - m) / h + 1e-12));
      if (lo[j] < 0 || hi[j] >= static_cast<long>(grid.counts()[j])) return false;
    }
    for (long a = lo[0]; a <= hi[0]; ++a) {
      for (long c = lo[1]; c <= hi[1]; ++c) {
        const std::size_t nb[2] = {static_cast<std::size_t>(a), static_cast<std::size_t>(c)};
        if (v.at(nb) < 0.0) return false;
      }
    }
    return true;
  };
  Rng rng(808);
  std::vector<std::vector<double>> starts;
  std::size_t draws = 0;
  while (starts.size() < 100 && draws < 10'000'000) {
    ++draws;
    std::vector<double> x{rng.uniform(grid.mins()[0], grid.maxs()[0]), rng.uniform(grid.mins()[1], grid.maxs()[1])};
    if (one_cell_inside(x)) starts.push_back(std::move(x));
  }
  if (starts.size() < 100) return {false, fmt("only %zu interior states found", starts.size())};

  const PolicyContext ctx(res, h, cfg.epsilon, cfg.horizon, true);
  const Policy policy = make_safe_policy(ctx, b.backup());
  std::size_t good = 0, unsafe = 0, missed = 0, outside = 0, outside_good = 0;
  for (const auto& x0 : starts) {
    const Trajectory tr = rk4_rollout(*b.system, policy, x0, cfg.horizon, cfg.rollout_dt);
    bool safe = !tr.diverged, reached = false;
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      const auto x = tr.samples.state(s);
      safe = safe && b.g_exact(x) > 0.0;
      reached = reached || b.l_exact(x) >= 0.0;
    }
    if (!safe) ++unsafe;
    if (!reached) ++missed;
    if (safe && reached) ++good;
    if (b.l_exact(x0) < 0.0) {
      ++outside;
      if (safe && reached) ++outside_good;
    }
  }
  return {good >= 99, fmt("%zu/100 rollouts safe and reaching the target (%zu unsafe, %zu missed); "
                          "%zu/%zu of the starts outside the target succeeded; %zu draws, %zu stored fields",
                          good, unsafe, missed, outside_good, outside, draws, res.history.size())};
}

// Every file below both roots, compared byte for byte. Timing files hold
// wall-clock readings and are excluded by design.
std::vector<std::string> export_differences(const fs::path& a, const fs::path& b) {
  auto listing = [](const fs::path& root) {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() != "timing.json") {
        files.insert(fs::relative(e.path(), root).string());
      }
    }
    return files;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto fa = listing(a), fb = listing(b);
  std::vector<std::string> diff;
  std::set<std::string> all = fa;
  all.insert(fb.begin(), fb.end());
  for (const auto& f : all) {
    if (!fa.count(f) || !fb.count(f) || slurp(a / f) != slurp(b / f)) diff.push_back(f);
  }
  return diff;
}

Outcome criterion9(const Options& opt) {
  const ExpansionRun& single = poly_run(opt);
  PolyExpansion& p = poly_expansion();
  const ExpansionRun multi = run_expansion(poly_expansion_config(8), p.problem, *p.bench.system,
                                           p.bench.backup(), run_dir(opt, "expansion_w8"));
  if (!single.failure.empty() || !multi.failure.empty()) return {false, "expansion aborted"};
  const auto diff = export_differences(opt.out / "expansion_w1", opt.out / "expansion_w8");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(opt.out / "expansion_w1")) files += e.is_regular_file();
  return {diff.empty() && files > 0,
          fmt("%zu exported files compared, %zu differ%s%s", files, diff.size(), diff.empty() ? "" : ", first: ",
              diff.empty() ? "" : diff.front().c_str())};
}

// ---------------------------------------------------------------------------
// 10. Surrogate tiltrotor.

Outcome criterion10(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const TiltrotorBenchmark b = make_tiltrotor_benchmark();
  ExpansionProblem problem = tiltrotor_expansion_problem(b, true);
  ExpansionConfig cfg;
  cfg.n_iter = 3;
  cfg.seed = 31;
  cfg.prune = false;
  cfg.workers = opt.workers;
  const ExpansionRun run = run_expansion(cfg, problem, *b.model, b.backup(), run_dir(opt, "tiltrotor"));
  if (!run.failure.empty()) return {false, "expansion aborted: " + run.failure};
  const ExpansionChecks c = check_expansion(run, b.l);

  // Same final data: pruning round trip and the fully data-driven comparison.
  SolveConfig sc = problem.solve;
  sc.workers = opt.workers;
  const HamiltonianSpec hm = b.modular(run.final_data);
  const ProblemSpec pm{ReachAvoidSets{b.l, b.g}, cfg.horizon, hm};
  const SolveResult mod = solve(pm, sc);
  const PruneResult pr = prune(*run.final_data, mod.used_indices);
  const SolveResult mod_pruned =
      solve(ProblemSpec{ReachAvoidSets{b.l, b.g}, cfg.horizon, b.modular(std::make_shared<const Dataset>(pr.data))}, sc);
  const bool round_trip = !pr.empty && bit_equal(mod.final_value, mod_pruned.final_value) &&
                          bit_equal(mod.final_value, run.values.back());
  const SolveResult full = solve(ProblemSpec{ReachAvoidSets{b.l, b.g}, cfg.horizon, b.full(run.final_data)}, sc);
  double worst = -INFINITY;
  std::size_t below = 0;
  for (std::size_t i = 0; i < b.grid.size(); ++i) {
    const double gap = full.final_value[i] - mod.final_value[i];
    worst = std::max(worst, gap);
    if (gap > 1e-9) ++below;
  }
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const bool ok = run.unsafe_samples == 0 && c.deep_misses == 0 && c.volume_ok &&
                  c.worst_pointwise_drop <= 1e-9 && round_trip && pr.data.size() < run.final_data->size() &&
                  below == 0 && run.values.size() == 3 && minutes < 20.0;
  return {ok, fmt("%.1f min, %zu unsafe samples, %zu target misses, worst pointwise drop %.2e (%.2e off the "
                  "domain edge), volumes %s; "
                  "prune %zu -> %zu bit-exact %s; max(V_full - V_modular) = %.3e (%zu violations), "
                  "safe fractions %.4f modular / %.4f full",
                  minutes, run.unsafe_samples, c.target_misses, c.worst_pointwise_drop, c.worst_interior_drop,
                  volumes(run).c_str(),
                  run.final_data->size(), pr.data.size(), round_trip ? "yes" : "no", worst, below,
                  nonnegative_fraction(mod.final_value), nonnegative_fraction(full.final_value))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for ddhreach"};
  std::string only;
  Options opt;
  opt.out = fs::temp_directory_path() / "ddhreach_acceptance";
  std::string out_dir;
  app.add_option("--only", only, "Comma-separated criterion numbers");
  app.add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Directory for run exports");
  CLI11_PARSE(app, argc, argv);
  if (!out_dir.empty()) opt.out = out_dir;

  std::set<int> selected;
  if (!only.empty()) {
    std::stringstream ss(only);
    for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
  }

  const std::vector<std::pair<int, std::function<Outcome(const Options&)>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
