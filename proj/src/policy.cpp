#include "ddhreach/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddhreach/errors.hpp"

namespace ddhreach {

ValueGradient::ValueGradient(ScalarField value)
    : value_(std::move(value)), grads_(gradient_fields(value_)) {}

std::vector<double> ValueGradient::gradient_at(std::span<const double> x, bool* clamped) const {
  std::vector<double> p(grads_.size());
  bool c = false;
  for (std::size_t j = 0; j < grads_.size(); ++j) {
    const Interpolation r = interpolate(grads_[j], x);
    p[j] = r.value;
    c = c || r.clamped;
  }
  if (clamped) *clamped = c;
  return p;
}

namespace {

std::size_t infer_control_dim(const HamiltonianSpec& spec) {
  if (const Dataset* d = spec_dataset(spec)) return d->n_u();
  if (const auto* b = std::get_if<BruteForceSpec>(&spec.form)) return b->dynamics->control_dim();
  if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) return infer_control_dim(*g->inner);
  if (const auto* m = std::get_if<ModularSpec>(&spec.form)) {
    std::size_t n = 0;
    for (const auto& p : m->parts) {
      for (std::size_t c : p.controls) n = std::max(n, c + 1);
    }
    return n;
  }
  return 0;
}

}  // namespace

PolicyContext::PolicyContext(const SolveResult& result, HamiltonianSpec spec, double epsilon,
                             double horizon, bool time_varying)
    : spec_(std::move(spec)), epsilon_(epsilon), horizon_(horizon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  n_u_ = infer_control_dim(spec_);
  if (time_varying) {
    for (const auto& h : result.history) {
      times_.push_back(h.time);
      fields_.emplace_back(h.field);
    }
  }
  times_.push_back(INFINITY);
  fields_.emplace_back(result.final_value);
}

PolicyContext::PolicyContext(ScalarField value, HamiltonianSpec spec, double epsilon,
                             double horizon)
    : spec_(std::move(spec)), epsilon_(epsilon), horizon_(horizon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  n_u_ = infer_control_dim(spec_);
  times_.push_back(INFINITY);
  fields_.emplace_back(std::move(value));
}

const ValueGradient& PolicyContext::at(double tau) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), tau);
  return fields_[static_cast<std::size_t>(it - times_.begin())];
}

SafeAction extract_control(const HamiltonianSpec& spec, std::span<const double> x,
                           std::span<const double> p, std::size_t control_dim) {
  SafeAction out;
  if (const auto* d = std::get_if<DdhSpec>(&spec.form)) {
    const HamiltonianResult r = ddh(x, p, *d->data, d->lip);
    out.index = r.argmax_index;
    const auto u = d->data->control(*r.argmax_index);
    out.control.assign(u.begin(), u.end());
    return out;
  }
  if (const auto* b = std::get_if<BruteForceSpec>(&spec.form)) {
    const HamiltonianResult r = brute_force_hamiltonian(*b->dynamics, *b->controls, x, p);
    const auto u = b->controls->control(*r.control_index);
    out.control.assign(u.begin(), u.end());
    return out;
  }
  if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) {
    const HamiltonianResult inner = evaluate(*g->inner, x, p);
    if (!(inner.value >= g_bounded_min(p, g->bound, x))) {
      out.fallback = true;
      return out;
    }
    return extract_control(*g->inner, x, p, control_dim);
  }
  const auto& m = std::get<ModularSpec>(spec.form);
  out.control.assign(control_dim, 0.0);
  std::vector<double> masked(p.size());
  for (const auto& part : m.parts) {
    std::fill(masked.begin(), masked.end(), 0.0);
    for (std::size_t j : part.costate) masked[j] = p[j];
    const SafeAction sub = extract_control(*part.spec, x, masked, control_dim);
    if (sub.fallback) {
      out.fallback = true;
      out.control.clear();
      return out;
    }
    if (!out.index && sub.index) out.index = sub.index;
    if (sub.control.size() == control_dim) {
      for (std::size_t c : part.controls) out.control[c] = sub.control[c];
    } else if (sub.control.size() == part.controls.size()) {
      for (std::size_t q = 0; q < part.controls.size(); ++q) out.control[part.controls[q]] = sub.control[q];
    } else {
      throw ConfigError("modular part control dimension does not match its control indices");
    }
  }
  return out;
}

SafeAction safe_action(const PolicyContext& ctx, std::span<const double> x, double tau,
                       bool allow_clamp) {
  const ValueGradient& vg = ctx.at(tau);
  bool clamped = false;
  std::vector<double> p = vg.gradient_at(x, &clamped);
  if (clamped && !allow_clamp) throw std::out_of_range("safe_action query outside the grid");
  if (clamped) {
    // Evaluate the Hamiltonian at the clamped state as well.
    const Grid& g = vg.value().grid();
    std::vector<double> xc(x.begin(), x.end());
    for (std::size_t j = 0; j < xc.size(); ++j) xc[j] = std::clamp(xc[j], g.mins()[j], g.maxs()[j]);
    return extract_control(ctx.spec(), xc, p, ctx.control_dim());
  }
  return extract_control(ctx.spec(), x, p, ctx.control_dim());
}

PolicyDecision switching_policy(const PolicyContext& ctx, const ScalarField& l,
                                const Policy& backup, const Policy& explore,
                                std::span<const double> x, double t) {
  if (interpolate(l, x).value >= 0.0) {
    PolicyDecision d = backup(x, t);
    d.branch = Branch::kBackup;
    return d;
  }
  const double tau = std::max(0.0, ctx.horizon() - t);
  const Interpolation v = ctx.at(tau).value_at(x);
  if (v.clamped || v.value < ctx.epsilon()) {
    const SafeAction a = safe_action(ctx, x, tau, true);
    PolicyDecision d;
    if (a.fallback) {
      d = backup(x, t);
      d.fallback = true;
    } else {
      d.control = a.control;
    }
    d.branch = Branch::kSafe;
    return d;
  }
  PolicyDecision d = explore(x, t);
  d.branch = Branch::kExplore;
  return d;
}

Policy make_safe_policy(const PolicyContext& ctx, Policy backup) {
  return [&ctx, backup = std::move(backup)](std::span<const double> x, double t) {
    const double tau = std::max(0.0, ctx.horizon() - t);
    const SafeAction a = safe_action(ctx, x, tau, true);
    PolicyDecision d;
    if (a.fallback) {
      d = backup(x, t);
      d.fallback = true;
    } else {
      d.control = a.control;
    }
    d.branch = Branch::kSafe;
    return d;
  };
}

}  // namespace ddhreach
