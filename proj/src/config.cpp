#include "ddhreach/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddhreach/errors.hpp"
#include "ddhreach/rng.hpp"

namespace ddhreach {

using nlohmann::ordered_json;

bool HamiltonianConfig::operator==(const HamiltonianConfig&) const = default;
bool RunConfig::operator==(const RunConfig&) const = default;

namespace {

// Strict object reader: every key must be consumed exactly once.
class Reader {
 public:
  Reader(const ordered_json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail("unknown key '" + k + "'");
    }
  }

  /// Present and not null. Marks the key as known either way.
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const ordered_json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail("bad value for '" + key + "'");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!has(key)) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

 private:
  const ordered_json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const char* kind_name(LipschitzKind k) {
  switch (k) {
    case LipschitzKind::kUniform: return "uniform";
    case LipschitzKind::kInputElementwise: return "input_elementwise";
    case LipschitzKind::kOutputElementwise: return "output_elementwise";
    case LipschitzKind::kSensitivityMatrix: return "sensitivity_matrix";
  }
  return "";
}

LipschitzKind kind_from(const std::string& s, const Reader& r) {
  for (auto k : {LipschitzKind::kUniform, LipschitzKind::kInputElementwise, LipschitzKind::kOutputElementwise,
                 LipschitzKind::kSensitivityMatrix}) {
    if (s == kind_name(k)) return k;
  }
  r.fail("unknown Lipschitz form '" + s + "'");
}

// --- writers ---------------------------------------------------------------

ordered_json to_json(const LipschitzSpec& s) {
  ordered_json j;
  j["form"] = kind_name(s.kind());
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformLipschitz>) {
          j["constant"] = f.constant;
        } else if constexpr (std::is_same_v<T, SensitivityMatrixLipschitz>) {
          ordered_json rows = ordered_json::array();
          for (std::size_t i = 0; i < f.dim; ++i) {
            rows.push_back(std::vector<double>(f.entries.begin() + static_cast<long>(i * f.dim),
                                               f.entries.begin() + static_cast<long>((i + 1) * f.dim)));
          }
          j["rows"] = rows;
        } else {
          j["constants"] = f.constants;
        }
      },
      s.form);
  return j;
}

ordered_json to_json(const Box& b) { return ordered_json{{"lower", b.lower}, {"upper", b.upper}}; }

ordered_json to_json(const SetConfig& s) {
  ordered_json j;
  j["type"] = s.type;
  ordered_json bounds = ordered_json::array();
  for (const auto& b : s.bounds) {
    ordered_json e;
    e["axis"] = b.axis;
    e["lower"] = b.lower ? ordered_json(*b.lower) : ordered_json(nullptr);
    e["upper"] = b.upper ? ordered_json(*b.upper) : ordered_json(nullptr);
    bounds.push_back(e);
  }
  j["bounds"] = bounds;
  j["center"] = s.center;
  j["radius"] = s.radius;
  return j;
}

ordered_json to_json(const HamiltonianConfig& h) {
  ordered_json j;
  j["type"] = h.type;
  ordered_json lip;
  lip["source"] = h.lipschitz.source;
  lip["spec"] = h.lipschitz.spec ? to_json(*h.lipschitz.spec) : ordered_json(nullptr);
  lip["estimate_kind"] = kind_name(h.lipschitz.estimate_kind);
  lip["scale"] = h.lipschitz.scale;
  j["lipschitz"] = lip;
  j["control_counts"] = h.control_counts;
  j["dynamics"] = h.dynamics;
  ordered_json inner = ordered_json::array();
  for (const auto& i : h.inner) inner.push_back(to_json(i));
  j["inner"] = inner;
  j["bound"] = h.bound ? to_json(*h.bound) : ordered_json(nullptr);
  ordered_json parts = ordered_json::array();
  for (const auto& p : h.parts) {
    parts.push_back(ordered_json{{"costate", p.costate}, {"controls", p.controls}, {"hamiltonian", to_json(p.hamiltonian)}});
  }
  j["parts"] = parts;
  return j;
}

ordered_json to_json(const TiltrotorParams& p) {
  return ordered_json{{"mass", p.mass},
                      {"gravity", p.gravity},
                      {"area", p.area},
                      {"density", p.density},
                      {"thrust_max_factor", p.thrust_max_factor},
                      {"alpha_min", p.alpha_min},
                      {"alpha_max", p.alpha_max},
                      {"delta_max", p.delta_max},
                      {"v_floor", p.v_floor},
                      {"cl0_cruise", p.cl0_cruise},
                      {"cl0_hover", p.cl0_hover},
                      {"cla_cruise", p.cla_cruise},
                      {"cla_hover", p.cla_hover},
                      {"cd0_cruise", p.cd0_cruise},
                      {"cd0_hover", p.cd0_hover},
                      {"k_cruise", p.k_cruise},
                      {"k_hover", p.k_hover}};
}

// --- readers ---------------------------------------------------------------

LipschitzSpec read_lipschitz_spec(const ordered_json& j, const std::string& where) {
  Reader r(j, where);
  std::string form;
  r.get("form", form);
  switch (kind_from(form, r)) {
    case LipschitzKind::kUniform: {
      UniformLipschitz u;
      r.get("constant", u.constant);
      return {u};
    }
    case LipschitzKind::kInputElementwise: {
      InputElementwiseLipschitz u;
      r.get("constants", u.constants);
      return {u};
    }
    case LipschitzKind::kOutputElementwise: {
      OutputElementwiseLipschitz u;
      r.get("constants", u.constants);
      return {u};
    }
    case LipschitzKind::kSensitivityMatrix: {
      std::vector<std::vector<double>> rows;
      r.get("rows", rows);
      SensitivityMatrixLipschitz m;
      m.dim = rows.size();
      for (const auto& row : rows) {
        if (row.size() != m.dim) r.fail("sensitivity matrix must be square");
        m.entries.insert(m.entries.end(), row.begin(), row.end());
      }
      return {m};
    }
  }
  r.fail("unreachable");
}

Box read_box(const ordered_json& j, const std::string& where) {
  Reader r(j, where);
  Box b;
  r.get("lower", b.lower);
  r.get("upper", b.upper);
  return b;
}

SetConfig read_set(const ordered_json& j, const std::string& where) {
  Reader r(j, where);
  SetConfig s;
  r.get("type", s.type);
  if (r.has("bounds")) {
    const auto& arr = r.at("bounds");
    if (!arr.is_array()) r.fail("bounds must be an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Reader b(arr[k], r.path("bounds[" + std::to_string(k) + "]"));
      AxisBound ab;
      b.get("axis", ab.axis);
      b.get("lower", ab.lower);
      b.get("upper", ab.upper);
      s.bounds.push_back(ab);
    }
  }
  r.get("center", s.center);
  r.get("radius", s.radius);
  return s;
}

HamiltonianConfig read_hamiltonian(const ordered_json& j, const std::string& where) {
  Reader r(j, where);
  HamiltonianConfig h;
  r.get("type", h.type);
  if (r.has("lipschitz")) {
    Reader l(r.at("lipschitz"), r.path("lipschitz"));
    l.get("source", h.lipschitz.source);
    if (l.has("spec")) {
      h.lipschitz.spec = read_lipschitz_spec(l.at("spec"), l.path("spec"));
    }
    std::string kind = kind_name(h.lipschitz.estimate_kind);
    l.get("estimate_kind", kind);
    h.lipschitz.estimate_kind = kind_from(kind, l);
    l.get("scale", h.lipschitz.scale);
  }
  r.get("control_counts", h.control_counts);
  r.get("dynamics", h.dynamics);
  if (r.has("inner")) {
    const auto& arr = r.at("inner");
    const auto& list = arr.is_array() ? arr : ordered_json::array({arr});
    for (std::size_t k = 0; k < list.size(); ++k) {
      h.inner.push_back(read_hamiltonian(list[k], r.path("inner[" + std::to_string(k) + "]")));
    }
  }
  if (r.has("bound")) {
    h.bound = read_box(r.at("bound"), r.path("bound"));
  }
  if (r.has("parts")) {
    const auto& arr = r.at("parts");
    if (!arr.is_array()) r.fail("parts must be an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string w = r.path("parts[" + std::to_string(k) + "]");
      Reader p(arr[k], w);
      ModularPartConfig part;
      p.get("costate", part.costate);
      p.get("controls", part.controls);
      if (!p.has("hamiltonian")) p.fail("missing 'hamiltonian'");
      part.hamiltonian = read_hamiltonian(p.at("hamiltonian"), p.path("hamiltonian"));
      h.parts.push_back(std::move(part));
    }
  }
  return h;
}

TiltrotorParams read_tiltrotor(const ordered_json& j, const std::string& where) {
  Reader r(j, where);
  TiltrotorParams p;
  r.get("mass", p.mass);
  r.get("gravity", p.gravity);
  r.get("area", p.area);
  r.get("density", p.density);
  r.get("thrust_max_factor", p.thrust_max_factor);
  r.get("alpha_min", p.alpha_min);
  r.get("alpha_max", p.alpha_max);
  r.get("delta_max", p.delta_max);
  r.get("v_floor", p.v_floor);
  r.get("cl0_cruise", p.cl0_cruise);
  r.get("cl0_hover", p.cl0_hover);
  r.get("cla_cruise", p.cla_cruise);
  r.get("cla_hover", p.cla_hover);
  r.get("cd0_cruise", p.cd0_cruise);
  r.get("cd0_hover", p.cd0_hover);
  r.get("k_cruise", p.k_cruise);
  r.get("k_hover", p.k_hover);
  return p;
}

void check_one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  throw ConfigError(what + ": unsupported value '" + value + "'");
}

bool uses_ddh(const HamiltonianConfig& h) {
  if (h.type == "ddh") return true;
  for (const auto& i : h.inner) {
    if (uses_ddh(i)) return true;
  }
  for (const auto& p : h.parts) {
    if (uses_ddh(p.hamiltonian)) return true;
  }
  return false;
}

void validate_hamiltonian(const HamiltonianConfig& h, const RunConfig& c, const std::string& where) {
  check_one_of(h.type, {"ddh", "brute_force", "g_bounded", "modular"}, where + ".type");
  const std::size_t n = c.grid.counts.size();
  if (h.type == "ddh") {
    const std::string& src = h.lipschitz.source;
    check_one_of(src, {"explicit", "certified", "sampled", "estimate"}, where + ".lipschitz.source");
    if (src == "explicit") {
      if (!h.lipschitz.spec) throw ConfigError(where + ": explicit Lipschitz source needs 'spec'");
      h.lipschitz.spec->validate(n);
    }
    if (src == "certified" && c.system.type != "polynomial") {
      throw ConfigError(where + ": certified constants exist only for the polynomial system");
    }
    if (src == "sampled" && c.system.type != "tiltrotor") {
      throw ConfigError(where + ": sampled constants exist only for the tiltrotor");
    }
    if (!(h.lipschitz.scale >= 0.0) || !std::isfinite(h.lipschitz.scale)) {
      throw ConfigError(where + ": Lipschitz scale must be finite and >= 0");
    }
  } else if (h.type == "brute_force") {
    check_one_of(h.dynamics, {"system", "tilt_kinematics"}, where + ".dynamics");
    if (h.dynamics == "system" && c.system.type == "dataset") {
      throw ConfigError(where + ": brute force needs known dynamics, the system is data only");
    }
    if (h.control_counts.empty()) throw ConfigError(where + ": brute force needs control_counts");
  } else if (h.type == "g_bounded") {
    if (h.inner.size() != 1) throw ConfigError(where + ": g_bounded needs exactly one inner Hamiltonian");
    if (!h.bound && c.system.type == "dataset") {
      throw ConfigError(where + ": a data-only system needs an explicit velocity bound");
    }
    if (h.bound) {
      h.bound->validate();
      if (h.bound->dims() != n) throw ConfigError(where + ": velocity bound dimension mismatch");
    }
    validate_hamiltonian(h.inner[0], c, where + ".inner[0]");
  } else {
    if (h.parts.empty()) throw ConfigError(where + ": modular Hamiltonian without parts");
    for (std::size_t k = 0; k < h.parts.size(); ++k) {
      for (std::size_t j : h.parts[k].costate) {
        if (j >= n) throw ConfigError(where + ": costate index out of range");
      }
      validate_hamiltonian(h.parts[k].hamiltonian, c, where + ".parts[" + std::to_string(k) + "]");
    }
  }
}

void validate_set(const SetConfig& s, std::size_t n, const std::string& where) {
  check_one_of(s.type, {"box", "ball", "tiltrotor"}, where + ".type");
  if (s.type == "box") {
    for (const auto& b : s.bounds) {
      if (b.axis >= n) throw ConfigError(where + ": bound axis out of range");
      if (b.lower && b.upper && *b.lower > *b.upper) throw ConfigError(where + ": empty bound");
    }
  } else if (s.type == "ball") {
    if (s.center.size() != n) throw ConfigError(where + ": ball center dimension mismatch");
    if (!(s.radius > 0.0)) throw ConfigError(where + ": ball radius must be positive");
  } else if (n != 3) {
    throw ConfigError(where + ": the tiltrotor envelope is three-dimensional");
  }
}

double eval_set(const SetConfig& s, std::span<const double> x) {
  if (s.type == "box") return box_margin(s.bounds, x);
  if (s.type == "ball") {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - s.center[j]) * (x[j] - s.center[j]);
    return s.radius - std::sqrt(d);
  }
  return tiltrotor_safety(x);
}

ScalarField sample_set(const SetConfig& s, const Grid& grid) {
  if (s.type == "box") return levelset_from_bounds(grid, s.bounds);
  return ScalarField::from_function(grid, [&s](std::span<const double> x) { return eval_set(s, x); });
}

}  // namespace

// --- parse / serialize -------------------------------------------------------

RunConfig parse_config(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Reader r(j, "config");
    r.get("seed", c.seed);
    r.get("out", c.out);
    if (r.has("system")) {
      Reader s(r.at("system"), "system");
      s.get("type", c.system.type);
      s.get("polynomial_seed", c.system.polynomial_seed);
      if (s.has("tiltrotor")) {
        c.system.tiltrotor = read_tiltrotor(s.at("tiltrotor"), "system.tiltrotor");
      }
      s.get("sampling_seed", c.system.sampling_seed);
      s.get("sampling_count", c.system.sampling_count);
      s.get("lipschitz_inflation", c.system.lipschitz_inflation);
      s.get("bound_inflation", c.system.bound_inflation);
      s.get("control_counts", c.system.control_counts);
    }
    if (r.has("grid")) {
      Reader g(r.at("grid"), "grid");
      g.get("mins", c.grid.mins);
      g.get("maxs", c.grid.maxs);
      g.get("counts", c.grid.counts);
    }
    if (r.has("problem")) {
      Reader p(r.at("problem"), "problem");
      p.get("type", c.problem.type);
      p.get("horizon", c.problem.horizon);
      if (p.has("safe")) {
        c.problem.safe = read_set(p.at("safe"), "problem.safe");
      }
      if (p.has("target")) {
        c.problem.target = read_set(p.at("target"), "problem.target");
      }
    }
    if (r.has("hamiltonian")) {
      c.hamiltonian = read_hamiltonian(r.at("hamiltonian"), "hamiltonian");
    }
    if (r.has("dataset")) {
      Reader d(r.at("dataset"), "dataset");
      d.get("path", c.dataset.path);
      d.get("collect", c.dataset.collect);
    }
    if (r.has("solver")) {
      Reader s(r.at("solver"), "solver");
      SolverConfig& v = c.solver;
      s.get("cfl_factor", v.cfl_factor);
      s.get("dissipation", v.dissipation);
      s.get("values", v.values);
      s.get("dt", v.dt);
      s.get("store_history", v.store_history);
      s.get("history_interval", v.history_interval);
      s.get("convergence_tol", v.convergence_tol);
      s.get("rk2", v.rk2);
      s.get("candidates", v.candidates);
      s.get("candidate_block", v.candidate_block);
    }
    if (r.has("expansion")) {
      Reader e(r.at("expansion"), "expansion");
      ExpansionConfig& v = c.expansion;
      e.get("n_iter", v.n_iter);
      e.get("n_traj_first", v.n_traj_first);
      e.get("n_traj", v.n_traj);
      e.get("rollout_duration", v.rollout_duration);
      e.get("rollout_dt", v.rollout_dt);
      e.get("horizon", v.horizon);
      e.get("epsilon", v.epsilon);
      e.get("boundary_band", v.boundary_band);
      e.get("density_weighting", v.density_weighting);
      e.get("prune", v.prune);
      e.get("explore_std_fraction", v.explore_std_fraction);
      e.get("preflight_rollouts", v.preflight_rollouts);
      e.get("preflight_margin", v.preflight_margin);
    }
    if (r.has("eval")) {
      Reader e(r.at("eval"), "eval");
      e.get("policy", c.eval.policy);
      e.get("initial_states", c.eval.initial_states);
      e.get("sample_inside", c.eval.sample_inside);
      e.get("duration", c.eval.duration);
      e.get("dt", c.eval.dt);
      e.get("time_varying", c.eval.time_varying);
    }
  }
  // The expansion seed always follows the global seed.
  c.expansion.seed = c.seed;
  validate_config(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["system"] = ordered_json{{"type", c.system.type},
                             {"polynomial_seed", c.system.polynomial_seed},
                             {"tiltrotor", to_json(c.system.tiltrotor)},
                             {"sampling_seed", c.system.sampling_seed},
                             {"sampling_count", c.system.sampling_count},
                             {"lipschitz_inflation", c.system.lipschitz_inflation},
                             {"bound_inflation", c.system.bound_inflation},
                             {"control_counts", c.system.control_counts}};
  j["grid"] = ordered_json{{"mins", c.grid.mins}, {"maxs", c.grid.maxs}, {"counts", c.grid.counts}};
  j["problem"] = ordered_json{{"type", c.problem.type},
                              {"horizon", c.problem.horizon},
                              {"safe", to_json(c.problem.safe)},
                              {"target", c.problem.target ? to_json(*c.problem.target) : ordered_json(nullptr)}};
  j["hamiltonian"] = to_json(c.hamiltonian);
  j["dataset"] = ordered_json{{"path", c.dataset.path ? ordered_json(*c.dataset.path) : ordered_json(nullptr)},
                              {"collect", c.dataset.collect}};
  const SolverConfig& s = c.solver;
  j["solver"] = ordered_json{{"cfl_factor", s.cfl_factor},
                             {"dissipation", s.dissipation},
                             {"values", s.values},
                             {"dt", s.dt},
                             {"store_history", s.store_history},
                             {"history_interval", s.history_interval},
                             {"convergence_tol", s.convergence_tol},
                             {"rk2", s.rk2},
                             {"candidates", s.candidates},
                             {"candidate_block", s.candidate_block}};
  const ExpansionConfig& e = c.expansion;
  j["expansion"] = ordered_json{{"n_iter", e.n_iter},
                                {"n_traj_first", e.n_traj_first},
                                {"n_traj", e.n_traj},
                                {"rollout_duration", e.rollout_duration},
                                {"rollout_dt", e.rollout_dt},
                                {"horizon", e.horizon},
                                {"epsilon", e.epsilon},
                                {"boundary_band", e.boundary_band},
                                {"density_weighting", e.density_weighting},
                                {"prune", e.prune},
                                {"explore_std_fraction", e.explore_std_fraction},
                                {"preflight_rollouts", e.preflight_rollouts},
                                {"preflight_margin", e.preflight_margin}};
  j["eval"] = ordered_json{{"policy", c.eval.policy},
                           {"initial_states", c.eval.initial_states},
                           {"sample_inside", c.eval.sample_inside},
                           {"duration", c.eval.duration},
                           {"dt", c.eval.dt},
                           {"time_varying", c.eval.time_varying}};
  return j.dump(2) + "\n";
}

void validate_config(const RunConfig& c) {
  check_one_of(c.system.type, {"polynomial", "tiltrotor", "dataset"}, "system.type");
  const std::size_t n = c.grid.counts.size();
  if (n == 0 || c.grid.mins.size() != n || c.grid.maxs.size() != n) {
    throw ConfigError("grid: mins, maxs and counts must have the same nonzero length");
  }
  if (n > kMaxStateDims) throw ConfigError("grid: too many dimensions");
  if (c.system.type == "polynomial" && n != 2) throw ConfigError("grid: the polynomial system is two-dimensional");
  if (c.system.type == "tiltrotor") {
    if (n != 3) throw ConfigError("grid: the tiltrotor is three-dimensional");
    c.system.tiltrotor.validate();
  }
  check_one_of(c.problem.type, {"avoid", "reach_avoid"}, "problem.type");
  if (!(c.problem.horizon >= 0.0) || !std::isfinite(c.problem.horizon)) {
    throw ConfigError("problem.horizon must be finite and >= 0");
  }
  validate_set(c.problem.safe, n, "problem.safe");
  if (c.problem.type == "reach_avoid") {
    if (!c.problem.target) throw ConfigError("problem: reach_avoid needs a target set");
    validate_set(*c.problem.target, n, "problem.target");
  }
  validate_hamiltonian(c.hamiltonian, c, "hamiltonian");
  if (uses_ddh(c.hamiltonian) && !c.dataset.path && c.dataset.collect == 0 && c.system.type == "dataset") {
    throw ConfigError("dataset: a data-only system needs a dataset path");
  }
  check_one_of(c.solver.dissipation, {"auto", "apriori", "explicit"}, "solver.dissipation");
  if (c.solver.dissipation == "explicit" && c.solver.values.size() != n) {
    throw ConfigError("solver.values must list one dissipation coefficient per axis");
  }
  if (c.solver.dissipation == "apriori" && c.system.type == "dataset") {
    throw ConfigError("solver: a-priori dissipation needs a system velocity bound");
  }
  if (c.solver.candidate_block == 0) throw ConfigError("solver.candidate_block must be positive");
  c.expansion.validate();
  check_one_of(c.eval.policy, {"safe", "switching"}, "eval.policy");
  for (const auto& x : c.eval.initial_states) {
    if (x.size() != n) throw ConfigError("eval.initial_states: dimension mismatch");
  }
  if (!(c.eval.duration > 0.0 && c.eval.dt > 0.0)) throw ConfigError("eval: duration and dt must be positive");
}

// --- defaults ----------------------------------------------------------------

RunConfig default_polynomial_config(std::uint64_t seed) {
  const PolynomialSetup setup;
  RunConfig c;
  c.seed = seed;
  c.expansion.seed = seed;
  c.system.type = "polynomial";
  c.system.polynomial_seed = seed;
  c.system.control_counts = setup.control_counts;
  c.grid = GridConfig{{-1.0, -1.0}, {1.0, 1.0}, {setup.grid_points, setup.grid_points}};
  const double h = setup.safe_half;
  c.problem.safe = SetConfig{"box", {{0, -h, h}, {1, -h, h}}, {}, 0.0};
  c.problem.target = SetConfig{"ball", {}, {0.0, 0.0}, setup.target_radius};
  c.hamiltonian.type = "ddh";
  c.hamiltonian.lipschitz.source = "certified";
  c.dataset.collect = 500;
  return c;
}

RunConfig default_tiltrotor_config() {
  const TiltrotorSetup setup;
  RunConfig c;
  c.seed = 31;
  c.expansion.seed = 31;
  c.expansion.n_iter = 3;
  c.system.type = "tiltrotor";
  c.system.tiltrotor = setup.params;
  c.system.sampling_seed = setup.seed;
  c.system.sampling_count = setup.lipschitz_samples;
  c.system.lipschitz_inflation = setup.lipschitz_inflation;
  c.system.bound_inflation = setup.bound_inflation;
  c.system.control_counts = {5, 5, setup.tilt_control_points};
  c.grid = GridConfig{setup.mins, setup.maxs, setup.counts};
  c.problem.safe = SetConfig{"tiltrotor", {}, {}, 0.0};
  c.problem.target = SetConfig{"box", setup.target.bounds(), {}, 0.0};

  HamiltonianConfig ddh;
  ddh.type = "ddh";
  ddh.lipschitz.source = "sampled";
  HamiltonianConfig aero;
  aero.type = "g_bounded";
  aero.inner = {ddh};
  HamiltonianConfig tilt;
  tilt.type = "brute_force";
  tilt.dynamics = "tilt_kinematics";
  tilt.control_counts = {setup.tilt_control_points};
  c.hamiltonian = HamiltonianConfig{};
  c.hamiltonian.type = "modular";
  c.hamiltonian.parts = {ModularPartConfig{{0, 1}, {0, 1}, aero}, ModularPartConfig{{2}, {2}, tilt}};
  c.dataset.collect = 0;
  return c;
}

// --- run setup -----------------------------------------------------------------

namespace {

Grid grid_of(const RunConfig& c) { return Grid(c.grid.mins, c.grid.maxs, c.grid.counts); }

}  // namespace

RunSetup::RunSetup(RunConfig config)
    : config_((validate_config(config), std::move(config))),
      grid_(grid_of(config_)),
      g_(sample_set(config_.problem.safe, grid_)),
      l_(config_.problem.target ? sample_set(*config_.problem.target, grid_) : ScalarField::constant(grid_, -1.0)) {
  const RunConfig& c = config_;
  const Box domain{c.grid.mins, c.grid.maxs};
  if (c.system.type == "polynomial") {
    polynomial_ = std::make_shared<const PolynomialSystem>(make_polynomial_system(c.system.polynomial_seed));
    dynamics_ = polynomial_;
    system_lipschitz_ = polynomial_true_lipschitz(*polynomial_, c.system.control_counts).certified;
    velocity_bound_ = polynomial_velocity_bound(*polynomial_, domain);
  } else if (c.system.type == "tiltrotor") {
    if (!(grid_.mins()[0] > c.system.tiltrotor.v_floor)) {
      throw ConfigError("grid: the tiltrotor domain must start above the airspeed floor");
    }
    tiltrotor_ = std::make_shared<const TiltrotorModel>(c.system.tiltrotor);
    dynamics_ = tiltrotor_;
    system_lipschitz_ = LipschitzSpec{tiltrotor_sampled_lipschitz(*tiltrotor_, grid_, c.system.sampling_seed,
                                                                  c.system.sampling_count,
                                                                  c.system.lipschitz_inflation)};
    Box vb = tiltrotor_sampled_velocity_bound(*tiltrotor_, grid_, c.system.sampling_seed, c.system.sampling_count,
                                              c.system.bound_inflation);
    vb.lower[2] = -c.system.tiltrotor.delta_max;
    vb.upper[2] = c.system.tiltrotor.delta_max;
    velocity_bound_ = vb;
  }
}

double RunSetup::g_exact(std::span<const double> x) const { return eval_set(config_.problem.safe, x); }

double RunSetup::l_exact(std::span<const double> x) const {
  return config_.problem.target ? eval_set(*config_.problem.target, x) : -1.0;
}

Dataset RunSetup::collect(std::size_t count) const {
  if (!dynamics_) throw ConfigError("collection needs known dynamics");
  Rng rng = Rng::stream(config_.seed, "collection");
  return collect_uniform(*dynamics_, grid_, count, rng);
}

std::shared_ptr<const Dataset> RunSetup::load_or_collect() const {
  if (config_.dataset.path) {
    auto d = std::make_shared<const Dataset>(load_dataset(*config_.dataset.path));
    if (d->n_x() != grid_.dims()) throw ConfigError("dataset state dimension does not match the grid");
    return d;
  }
  if (config_.dataset.collect > 0) return std::make_shared<const Dataset>(collect(config_.dataset.collect));
  const std::size_t n_u = dynamics_ ? dynamics_->control_dim() : 0;
  return std::make_shared<const Dataset>(grid_.dims(), n_u);
}

LipschitzSpec RunSetup::resolve_lipschitz(const LipschitzConfig& c, const Dataset* data) const {
  LipschitzSpec s;
  if (c.source == "explicit") {
    s = *c.spec;
  } else if (c.source == "estimate") {
    if (!data || data->size() < 2) throw ConfigError("Lipschitz estimation needs at least two samples");
    s = estimate_lipschitz(*data, c.estimate_kind).spec;
  } else {
    if (!system_lipschitz_) throw ConfigError("no system Lipschitz constants for source '" + c.source + "'");
    s = *system_lipschitz_;
  }
  return c.scale == 1.0 ? s : s.scaled(c.scale);
}

HamiltonianSpec RunSetup::build(const HamiltonianConfig& c, const std::shared_ptr<const Dataset>& data) const {
  if (c.type == "ddh") return HamiltonianSpec::ddh(data, resolve_lipschitz(c.lipschitz, data.get()));
  if (c.type == "brute_force") {
    std::shared_ptr<const Dynamics> dyn = dynamics_;
    if (c.dynamics == "tilt_kinematics") {
      dyn = std::make_shared<const TiltKinematics>(config_.system.tiltrotor.delta_max);
    }
    return HamiltonianSpec::brute_force(dyn, c.control_counts);
  }
  if (c.type == "g_bounded") {
    const Box b = c.bound ? *c.bound : *velocity_bound_;
    return HamiltonianSpec::g_bounded(build(c.inner[0], data), VelocityBound{b, {}});
  }
  std::vector<ModularPart> parts;
  for (const auto& p : c.parts) {
    parts.push_back({p.costate, p.controls, std::make_shared<const HamiltonianSpec>(build(p.hamiltonian, data))});
  }
  return HamiltonianSpec::modular(std::move(parts));
}

HamiltonianSpec RunSetup::hamiltonian(std::shared_ptr<const Dataset> data) const {
  HamiltonianSpec h = build(config_.hamiltonian, data);
  h.validate(grid_.dims());
  return h;
}

ProblemSpec RunSetup::problem(std::shared_ptr<const Dataset> data) const {
  HamiltonianSpec h = hamiltonian(std::move(data));
  if (config_.problem.type == "avoid") return ProblemSpec{AvoidSets{g_}, config_.problem.horizon, std::move(h)};
  return ProblemSpec{ReachAvoidSets{l_, g_}, config_.problem.horizon, std::move(h)};
}

namespace {

// Dissipation valid for any dataset whose velocities obey the system bound.
std::vector<double> apriori_for(const HamiltonianSpec& spec, const Box& vb, const Grid& grid) {
  if (const auto* d = std::get_if<DdhSpec>(&spec.form)) return apriori_dissipation(d->lip, vb, grid);
  if (std::holds_alternative<BruteForceSpec>(spec.form)) return auto_dissipation(spec, grid);
  if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) {
    std::vector<double> a = apriori_for(*g->inner, vb, grid);
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = std::max(a[j], std::max(std::abs(g->bound.box.lower[j]), std::abs(g->bound.box.upper[j])));
    }
    return a;
  }
  const auto& m = std::get<ModularSpec>(spec.form);
  std::vector<double> a(grid.dims(), 0.0);
  for (const auto& part : m.parts) {
    const std::vector<double> pa = apriori_for(*part.spec, vb, grid);
    for (std::size_t j : part.costate) a[j] = std::max(a[j], pa[j]);
  }
  return a;
}

}  // namespace

SolveConfig RunSetup::solve_config(const HamiltonianSpec& spec, std::size_t workers) const {
  const SolverConfig& s = config_.solver;
  SolveConfig sc;
  sc.cfl_factor = s.cfl_factor;
  sc.dt = s.dt;
  sc.store_history = s.store_history;
  sc.history_interval = s.history_interval;
  sc.convergence_tol = s.convergence_tol;
  sc.rk2 = s.rk2;
  sc.workers = workers;
  sc.candidates.enabled = s.candidates;
  sc.candidates.block = s.candidate_block;
  if (s.dissipation == "explicit") {
    sc.dissipation = s.values;
  } else if (s.dissipation == "apriori") {
    sc.dissipation = apriori_for(spec, *velocity_bound_, grid_);
  }
  return sc;
}

Policy RunSetup::backup() const {
  if (polynomial_) {
    auto sys = polynomial_;
    auto grid = std::make_shared<const ControlGrid>(sys->control_box(), config_.system.control_counts);
    return [sys, grid](std::span<const double> x, double) {
      const double p[2] = {-x[0], -x[1]};
      const ControlMax m = sys->max_over_controls(x, p, *grid);
      PolicyDecision d;
      const auto u = grid->control(m.index);
      d.control.assign(u.begin(), u.end());
      d.branch = Branch::kBackup;
      return d;
    };
  }
  if (tiltrotor_) {
    const TiltrotorBackup rec{config_.system.tiltrotor};
    return [rec](std::span<const double> x, double) {
      PolicyDecision d;
      d.control = rec(x);
      d.branch = Branch::kBackup;
      return d;
    };
  }
  throw ConfigError("a data-only system has no backup controller");
}

ExploreFactory RunSetup::explore() const {
  if (!dynamics_) throw ConfigError("exploration needs known dynamics");
  const Box box = dynamics_->control_box();
  const std::uint64_t seed = config_.seed;
  const double frac = config_.expansion.explore_std_fraction;
  return [box, seed, frac](std::size_t k, std::size_t j) { return make_gaussian_explore(box, seed, k, j, frac); };
}

ExpansionProblem RunSetup::expansion_problem() const {
  if (!dynamics_) throw ConfigError("expansion needs known dynamics");
  if (config_.problem.type != "reach_avoid") throw ConfigError("expansion needs a reach_avoid problem");
  auto empty = std::make_shared<const Dataset>(grid_.dims(), dynamics_->control_dim());
  const RunSetup* self = this;
  HamiltonianSpec h = build(config_.hamiltonian, empty);
  ExpansionProblem p{l_,
                     g_,
                     [self](std::span<const double> x) { return self->l_exact(x); },
                     [self](std::span<const double> x) { return self->g_exact(x); },
                     h,
                     {}};
  p.solve = solve_config(h, 1);
  return p;
}

}  // namespace ddhreach
