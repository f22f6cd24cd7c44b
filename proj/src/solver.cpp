#include "ddhreach/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "ddh_kernel.hpp"
#include "ddhreach/errors.hpp"

namespace ddhreach {

const Grid& ProblemSpec::grid() const { return g().grid(); }

const ScalarField& ProblemSpec::g() const {
  if (const auto* a = std::get_if<AvoidSets>(&kind)) return a->g;
  return std::get<ReachAvoidSets>(kind).g;
}

ScalarField ProblemSpec::terminal() const {
  if (const auto* a = std::get_if<AvoidSets>(&kind)) return a->g;
  const auto& ra = std::get<ReachAvoidSets>(kind);
  return pointwise_min(ra.l, ra.g);
}

void ProblemSpec::validate() const {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be finite and >= 0");
  if (const auto* ra = std::get_if<ReachAvoidSets>(&kind)) {
    if (!(ra->l.grid() == ra->g.grid())) throw ConfigError("l and g live on different grids");
  }
  hamiltonian.validate(grid().dims());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> corner(const Grid& grid, std::size_t mask) {
  std::vector<double> c(grid.dims());
  for (std::size_t j = 0; j < grid.dims(); ++j) c[j] = (mask >> j) & 1u ? grid.maxs()[j] : grid.mins()[j];
  return c;
}

/// Corners plus a strided subset of grid points, at most `budget` states.
std::vector<std::vector<double>> state_sample(const Grid& grid, std::size_t budget) {
  std::vector<std::vector<double>> out;
  for (std::size_t m = 0; m < (std::size_t{1} << grid.dims()); ++m) out.push_back(corner(grid, m));
  budget = std::max<std::size_t>(budget, 1);
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / budget);
  for (std::size_t f = 0; f < grid.size(); f += stride) out.push_back(grid.point(f));
  return out;
}

std::vector<double> alpha_of(const HamiltonianSpec& spec, const Grid& grid) {
  const std::size_t n = grid.dims();
  std::vector<double> a(n, 0.0);
  if (const auto* d = std::get_if<DdhSpec>(&spec.form)) {
    const Dataset& data = *d->data;
    if (data.empty()) throw ConfigError("auto dissipation over an empty dataset");
    const detail::DdhKernel k(d->lip, n);
    std::vector<double> vmax(n, 0.0), rmax(n, 0.0);
    double r[detail::DdhKernel::kDims];
    std::vector<std::vector<double>> corners;
    for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) corners.push_back(corner(grid, m));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto v = data.velocity(i);
      for (std::size_t j = 0; j < n; ++j) vmax[j] = std::max(vmax[j], std::abs(v[j]));
      // Radii are convex in x, so their maximum over the box sits at a corner.
      for (const auto& c : corners) {
        k.radius(c.data(), data.state(i).data(), r);
        for (std::size_t j = 0; j < n; ++j) rmax[j] = std::max(rmax[j], k.ball() ? r[0] : r[j]);
      }
    }
    for (std::size_t j = 0; j < n; ++j) a[j] = vmax[j] + rmax[j];
    return a;
  }
  if (const auto* b = std::get_if<BruteForceSpec>(&spec.form)) {
    const std::size_t budget = std::max<std::size_t>(1, 2'000'000 / b->controls->size());
    std::vector<double> v(n);
    for (const auto& x : state_sample(grid, budget)) {
      for (std::size_t k = 0; k < b->controls->size(); ++k) {
        b->dynamics->velocity(x, b->controls->control(k), v);
        for (std::size_t j = 0; j < n; ++j) a[j] = std::max(a[j], std::abs(v[j]));
      }
    }
    for (double& x : a) x *= 1.2;
    return a;
  }
  if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) {
    a = alpha_of(*g->inner, grid);
    auto widen = [&](const Box& bx) {
      for (std::size_t j = 0; j < n; ++j) {
        a[j] = std::max(a[j], std::max(std::abs(bx.lower[j]), std::abs(bx.upper[j])));
      }
    };
    if (g->bound.state_dependent()) {
      for (const auto& x : state_sample(grid, 4096)) widen(g->bound.at(x));
    } else {
      widen(g->bound.box);
    }
    return a;
  }
  for (const auto& part : std::get<ModularSpec>(spec.form).parts) {
    const auto pa = alpha_of(*part.spec, grid);
    for (std::size_t j : part.costate) a[j] += pa[j];
  }
  return a;
}

double cfl_number(const Grid& grid, const std::vector<double>& alpha, double dt) {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.dims(); ++j) s += alpha[j] / grid.spacing(j);
  return dt * s;
}

void check_alpha(const Grid& grid, const std::vector<double>& alpha) {
  if (alpha.size() != grid.dims()) throw ConfigError("dissipation vector has the wrong length");
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("dissipation must be finite and >= 0");
  }
}

void check_cfl(const Grid& grid, const std::vector<double>& alpha, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const double c = cfl_number(grid, alpha, dt);
  if (c > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "CFL violation: dt * sum(alpha / dx) = " << c << " > 1";
    throw ConfigError(os.str());
  }
}

/// One explicit Euler sweep plus the variational-inequality clamp.
class Stepper {
 public:
  Stepper(const Grid& grid, const CompiledHamiltonian& h, const std::vector<double>& alpha,
          const ScalarField* l, const ScalarField& g, std::size_t workers)
      : grid_(grid), h_(h), alpha_(alpha), l_(l), g_(g), workers_(std::max<std::size_t>(1, workers)) {}

  /// out = clamp(v + dt * H_num(v)); returns max |out - v|.
  double run(const std::vector<double>& v, std::vector<double>& out, double dt,
             std::vector<std::uint8_t>& used) {
    const std::size_t total = grid_.size();
    const std::size_t w = std::min(workers_, total);
    out.resize(total);
    if (w == 1) {
      Chunk c{0, total};
      sweep(v, out, dt, used.empty() ? nullptr : used.data(), c);
      finish(c);
      return c.max_change;
    }
    if (extra_used_.size() != w) extra_used_.assign(w, {});
    std::vector<Chunk> chunks(w);
    for (std::size_t k = 0; k < w; ++k) {
      chunks[k].begin = total * k / w;
      chunks[k].end = total * (k + 1) / w;
      if (!used.empty()) extra_used_[k].assign(used.size(), 0);
    }
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < w; ++k) {
      pool.emplace_back([&, k] {
        sweep(v, out, dt, used.empty() ? nullptr : extra_used_[k].data(), chunks[k]);
      });
    }
    sweep(v, out, dt, used.empty() ? nullptr : extra_used_[0].data(), chunks[0]);
    for (auto& t : pool) t.join();
    double change = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      finish(chunks[k]);
      change = std::max(change, chunks[k].max_change);
      if (!used.empty()) {
        for (std::size_t i = 0; i < used.size(); ++i) used[i] |= extra_used_[k][i];
      }
    }
    return change;
  }

 private:
  struct Chunk {
    std::size_t begin = 0, end = 0;
    double max_change = 0.0;
    bool bad = false;
    std::size_t bad_point = 0;
    double bad_value = 0.0;
  };

  void finish(const Chunk& c) const {
    if (!c.bad) return;
    std::ostringstream os;
    os << "non-finite value " << c.bad_value << " at grid point " << c.bad_point << " (";
    const auto x = grid_.point(c.bad_point);
    for (std::size_t j = 0; j < x.size(); ++j) os << (j ? ", " : "") << x[j];
    os << ")";
    throw NumericalError(os.str());
  }

  void sweep(const std::vector<double>& v, std::vector<double>& out, double dt, std::uint8_t* used,
             Chunk& c) const {
    const std::size_t n = grid_.dims();
    std::size_t idx[kMaxStateDims];
    double x[kMaxStateDims], p[kMaxStateDims];
    {
      const auto mi = grid_.multi_index(c.begin);
      for (std::size_t j = 0; j < n; ++j) {
        idx[j] = mi[j];
        x[j] = grid_.coordinate(j, idx[j]);
      }
    }
    const auto& counts = grid_.counts();
    const double* lv = l_ ? l_->values().data() : nullptr;
    const double* gv = g_.values().data();
    for (std::size_t f = c.begin; f < c.end; ++f) {
      const double vc = v[f];
      double diss = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t s = grid_.stride(j);
        const double dx = grid_.spacing(j);
        double pm = 0.0, pp = 0.0;
        const bool lo = idx[j] == 0, hi = idx[j] + 1 == counts[j];
        if (!lo) pm = (vc - v[f - s]) / dx;
        if (!hi) pp = (v[f + s] - vc) / dx;
        if (lo) pm = pp;
        if (hi) pp = pm;
        p[j] = 0.5 * (pm + pp);
        diss += alpha_[j] * (pp - pm);
      }
      const double h = h_.evaluate(f, x, p, used);
      double val = vc + dt * (h + 0.5 * diss);
      if (lv) val = std::max(lv[f], val);
      val = std::min(gv[f], val);
      if (!std::isfinite(val) && !c.bad) {
        c.bad = true;
        c.bad_point = f;
        c.bad_value = val;
      }
      out[f] = val;
      c.max_change = std::max(c.max_change, std::abs(val - vc));
      for (std::size_t j = n; j-- > 0;) {
        if (++idx[j] < counts[j]) {
          x[j] = grid_.coordinate(j, idx[j]);
          break;
        }
        idx[j] = 0;
        x[j] = grid_.coordinate(j, 0);
      }
    }
  }

  const Grid& grid_;
  const CompiledHamiltonian& h_;
  const std::vector<double>& alpha_;
  const ScalarField* l_;
  const ScalarField& g_;
  std::size_t workers_;
  std::vector<std::vector<std::uint8_t>> extra_used_;
};

IndexSet to_index_set(const std::vector<std::uint8_t>& used) {
  IndexSet s;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i]) s.push_back(i);
  }
  return s;
}

std::pair<ScalarField, IndexSet> single_step(const ScalarField& v, const ScalarField* l,
                                             const ScalarField& g, const HamiltonianSpec& spec,
                                             const std::vector<double>& alpha, double dt) {
  const Grid& grid = v.grid();
  if (!(g.grid() == grid) || (l && !(l->grid() == grid))) {
    throw std::invalid_argument("fields live on different grids");
  }
  check_alpha(grid, alpha);
  check_cfl(grid, alpha, dt);
  const CompiledHamiltonian h(spec, grid);
  Stepper st(grid, h, alpha, l, g, 1);
  std::vector<std::uint8_t> used(h.dataset_size(), 0);
  std::vector<double> in(v.values().begin(), v.values().end()), out;
  st.run(in, out, dt, used);
  return {ScalarField(grid, std::move(out)), to_index_set(used)};
}

}  // namespace

std::vector<double> auto_dissipation(const HamiltonianSpec& spec, const Grid& grid) {
  spec.validate(grid.dims());
  return alpha_of(spec, grid);
}

double cfl_time_step(const Grid& grid, const std::vector<double>& alpha, double cfl_factor) {
  check_alpha(grid, alpha);
  if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) throw ConfigError("cfl_factor must lie in (0, 1]");
  double s = 0.0;
  for (std::size_t j = 0; j < grid.dims(); ++j) s += alpha[j] / grid.spacing(j);
  return s > 0.0 ? cfl_factor / s : INFINITY;
}

double lf_numerical_hamiltonian(const HamiltonianSpec& spec, std::span<const double> x,
                                std::span<const double> p_minus, std::span<const double> p_plus,
                                std::span<const double> alpha) {
  const std::size_t n = x.size();
  if (p_minus.size() != n || p_plus.size() != n || alpha.size() != n) {
    throw std::invalid_argument("lf_numerical_hamiltonian: dimension mismatch");
  }
  std::vector<double> p(n);
  double diss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = 0.5 * (p_minus[j] + p_plus[j]);
    diss += alpha[j] * (p_plus[j] - p_minus[j]);
  }
  return evaluate(spec, x, p).value + 0.5 * diss;
}

std::pair<ScalarField, IndexSet> step_avoid(const ScalarField& v, const ScalarField& g,
                                            const HamiltonianSpec& spec,
                                            const std::vector<double>& alpha, double dt) {
  return single_step(v, nullptr, g, spec, alpha, dt);
}

std::pair<ScalarField, IndexSet> step_reach_avoid(const ScalarField& v, const ScalarField& l,
                                                  const ScalarField& g,
                                                  const HamiltonianSpec& spec,
                                                  const std::vector<double>& alpha, double dt) {
  return single_step(v, &l, g, spec, alpha, dt);
}

SolveResult solve(const ProblemSpec& problem, const SolveConfig& config) {
  problem.validate();
  const Grid& grid = problem.grid();
  if (!(config.cfl_factor > 0.0 && config.cfl_factor <= 1.0)) {
    throw ConfigError("cfl_factor must lie in (0, 1]");
  }
  if (config.convergence_tol < 0.0) throw ConfigError("convergence_tol must be >= 0");

  ScalarField terminal = problem.terminal();
  SolveResult res{terminal, {}, {}, 0, false, 0.0, problem.horizon, 0.0, config.cfl_factor, {}, {}};
  res.dissipation = config.dissipation.empty() ? auto_dissipation(problem.hamiltonian, grid)
                                               : config.dissipation;
  check_alpha(grid, res.dissipation);
  res.dt = config.dt > 0.0 ? config.dt : cfl_time_step(grid, res.dissipation, config.cfl_factor);
  if (!std::isfinite(res.dt)) res.dt = std::max(problem.horizon, 1e-300);
  check_cfl(grid, res.dissipation, res.dt);

  if (config.store_history) res.history.push_back({0.0, terminal});
  if (problem.horizon == 0.0) return res;

  CandidateOptions copt = config.candidates;
  copt.workers = config.workers;
  const CompiledHamiltonian h(problem.hamiltonian, grid, copt);
  res.candidate_stats = h.stats();

  const ScalarField* l = nullptr;
  if (const auto* ra = std::get_if<ReachAvoidSets>(&problem.kind)) l = &ra->l;
  Stepper st(grid, h, res.dissipation, l, problem.g(), config.workers);

  std::vector<std::uint8_t> used(h.dataset_size(), 0);
  std::vector<double> v = std::move(terminal).release();
  std::vector<double> next, stage;
  double t = 0.0, last_stored = 0.0;
  const double T = problem.horizon;
  while (t < T) {
    double dt = res.dt;
    bool last = false;
    if (t + dt >= T * (1.0 - 1e-12)) {
      dt = T - t;
      last = true;
    }
    double change;
    if (!config.rk2) {
      change = st.run(v, next, dt, used);
    } else {
      st.run(v, stage, dt, used);
      st.run(stage, next, dt, used);
      change = 0.0;
      const ScalarField* lf = l;
      const auto gv = problem.g().values();
      for (std::size_t f = 0; f < v.size(); ++f) {
        double val = 0.5 * (v[f] + next[f]);
        if (lf) val = std::max(lf->values()[f], val);
        val = std::min(gv[f], val);
        change = std::max(change, std::abs(val - v[f]));
        next[f] = val;
      }
    }
    v.swap(next);
    t = last ? T : t + dt;
    ++res.steps_taken;
    const bool converged = config.convergence_tol > 0.0 && change < config.convergence_tol;
    if (config.store_history &&
        (last || converged || config.history_interval <= 0.0 ||
         t - last_stored >= config.history_interval * (1.0 - 1e-9))) {
      res.history.push_back({t, ScalarField(grid, v)});
      last_stored = t;
    }
    if (converged && !last) {
      res.converged_early = true;
      break;
    }
  }
  res.final_time = t;
  res.final_value = ScalarField(grid, std::move(v));
  res.used_indices = to_index_set(used);
  return res;
}

const ScalarField& field_at_time(const SolveResult& result, double tau) {
  for (const auto& h : result.history) {
    if (h.time >= tau) return h.field;
  }
  return result.final_value;
}

}  // namespace ddhreach
