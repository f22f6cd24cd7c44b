#include "ddhreach/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddh_kernel.hpp"
#include "ddhreach/errors.hpp"

namespace ddhreach {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

UncertaintyRadius uncertainty_radius(const LipschitzSpec& lip, std::span<const double> x,
                                     std::span<const double> x_i) {
  require_same(x.size(), x_i.size(), "uncertainty_radius");
  if (x.size() > kMaxStateDims) throw std::invalid_argument("state dimension too large");
  const detail::DdhKernel k(lip, x.size());
  double r[detail::DdhKernel::kDims];
  k.radius(x.data(), x_i.data(), r);
  if (k.ball()) return BallRadius{r[0]};
  return RectRadii{std::vector<double>(r, r + x.size())};
}

double ddh_inner_ball(std::span<const double> p, std::span<const double> v_i, double r) {
  require_same(p.size(), v_i.size(), "ddh_inner_ball");
  return detail::inner_ball(p.data(), v_i.data(), r, detail::norm2(p.data(), p.size()), p.size());
}

double ddh_inner_rect(std::span<const double> p, std::span<const double> v_i,
                      std::span<const double> r) {
  require_same(p.size(), v_i.size(), "ddh_inner_rect");
  require_same(p.size(), r.size(), "ddh_inner_rect");
  return detail::inner_rect(p.data(), v_i.data(), r.data(), p.size());
}

double g_bounded_min(std::span<const double> p, const VelocityBound& bound,
                     std::span<const double> x) {
  const Box b = bound.at(x);
  require_same(p.size(), b.dims(), "g_bounded_min");
  return detail::g_min(p.data(), b.lower.data(), b.upper.data(), p.size());
}

HamiltonianSpec HamiltonianSpec::ddh(std::shared_ptr<const Dataset> data, LipschitzSpec lip) {
  return {DdhSpec{std::move(data), std::move(lip)}};
}

HamiltonianSpec HamiltonianSpec::brute_force(std::shared_ptr<const Dynamics> dynamics,
                                             std::vector<std::size_t> control_counts) {
  auto grid = std::make_shared<const ControlGrid>(dynamics->control_box(), std::move(control_counts));
  return {BruteForceSpec{std::move(dynamics), std::move(grid)}};
}

HamiltonianSpec HamiltonianSpec::g_bounded(HamiltonianSpec inner, VelocityBound bound) {
  return {GBoundedSpec{std::make_shared<const HamiltonianSpec>(std::move(inner)), std::move(bound)}};
}

HamiltonianSpec HamiltonianSpec::modular(std::vector<ModularPart> parts) {
  return {ModularSpec{std::move(parts)}};
}

void HamiltonianSpec::validate(std::size_t n_x) const {
  if (n_x == 0 || n_x > kMaxStateDims) {
    throw ConfigError("state dimension must be in 1.." + std::to_string(kMaxStateDims));
  }
  if (const auto* d = std::get_if<DdhSpec>(&form)) {
    if (!d->data) throw ConfigError("DDH without a dataset");
    if (d->data->empty()) throw ConfigError("DDH over an empty dataset");
    if (d->data->n_x() != n_x) throw ConfigError("DDH dataset state dimension mismatch");
    try {
      d->lip.validate(n_x);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid Lipschitz spec: ") + e.what());
    }
  } else if (const auto* b = std::get_if<BruteForceSpec>(&form)) {
    if (!b->dynamics || !b->controls) throw ConfigError("brute force without dynamics");
    if (b->dynamics->state_dim() != n_x) throw ConfigError("brute force state dimension mismatch");
    if (b->controls->dims() != b->dynamics->control_dim()) {
      throw ConfigError("control grid does not match the dynamics");
    }
  } else if (const auto* g = std::get_if<GBoundedSpec>(&form)) {
    if (!g->inner) throw ConfigError("G-bounded without an inner Hamiltonian");
    if (std::holds_alternative<GBoundedSpec>(g->inner->form)) {
      throw ConfigError("G-bounded inner spec must not itself be G-bounded");
    }
    if (!g->bound.state_dependent()) {
      try {
        g->bound.box.validate();
      } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid velocity bound: ") + e.what());
      }
      if (g->bound.box.dims() != n_x) throw ConfigError("velocity bound dimension mismatch");
    }
    g->inner->validate(n_x);
  } else {
    const auto& m = std::get<ModularSpec>(form);
    if (m.parts.empty()) throw ConfigError("modular Hamiltonian without parts");
    std::vector<int> seen(n_x, 0);
    std::vector<std::size_t> controls;
    for (const auto& part : m.parts) {
      if (!part.spec) throw ConfigError("modular part without a spec");
      for (std::size_t j : part.costate) {
        if (j >= n_x) throw ConfigError("modular costate index out of range");
        ++seen[j];
      }
      controls.insert(controls.end(), part.controls.begin(), part.controls.end());
      part.spec->validate(n_x);
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
      throw ConfigError("modular parts must partition the costate indices");
    }
    std::sort(controls.begin(), controls.end());
    if (std::adjacent_find(controls.begin(), controls.end()) != controls.end()) {
      throw ConfigError("modular parts must not share control indices");
    }
  }
  (void)spec_dataset(*this);
}

namespace {

void collect_datasets(const HamiltonianSpec& spec, std::vector<const Dataset*>& out) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DdhSpec>) {
          out.push_back(f.data.get());
        } else if constexpr (std::is_same_v<T, GBoundedSpec>) {
          if (f.inner) collect_datasets(*f.inner, out);
        } else if constexpr (std::is_same_v<T, ModularSpec>) {
          for (const auto& p : f.parts) {
            if (p.spec) collect_datasets(*p.spec, out);
          }
        }
      },
      spec.form);
}

template <typename Fn>
HamiltonianSpec map_ddh(const HamiltonianSpec& spec, const Fn& fn) {
  return std::visit(
      [&](const auto& f) -> HamiltonianSpec {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DdhSpec>) {
          return {fn(f)};
        } else if constexpr (std::is_same_v<T, GBoundedSpec>) {
          return {GBoundedSpec{std::make_shared<const HamiltonianSpec>(map_ddh(*f.inner, fn)), f.bound}};
        } else if constexpr (std::is_same_v<T, ModularSpec>) {
          ModularSpec m;
          for (const auto& p : f.parts) {
            m.parts.push_back(
                {p.costate, p.controls, std::make_shared<const HamiltonianSpec>(map_ddh(*p.spec, fn))});
          }
          return {m};
        } else {
          return {f};
        }
      },
      spec.form);
}

}  // namespace

const Dataset* spec_dataset(const HamiltonianSpec& spec) {
  std::vector<const Dataset*> all;
  collect_datasets(spec, all);
  if (all.empty()) return nullptr;
  for (const Dataset* d : all) {
    if (d != all.front()) throw ConfigError("DDH nodes must share one dataset");
  }
  return all.front();
}

HamiltonianSpec with_dataset(const HamiltonianSpec& spec, std::shared_ptr<const Dataset> data) {
  return map_ddh(spec, [&](const DdhSpec& d) { return DdhSpec{data, d.lip}; });
}

HamiltonianSpec with_scaled_lipschitz(const HamiltonianSpec& spec, double c) {
  return map_ddh(spec, [&](const DdhSpec& d) { return DdhSpec{d.data, d.lip.scaled(c)}; });
}

HamiltonianResult ddh(std::span<const double> x, std::span<const double> p, const Dataset& data,
                      const LipschitzSpec& lip) {
  if (data.empty()) throw std::invalid_argument("DDH over an empty dataset");
  const std::size_t n = data.n_x();
  require_same(x.size(), n, "ddh state");
  require_same(p.size(), n, "ddh costate");
  if (n > kMaxStateDims) throw std::invalid_argument("state dimension too large");
  HamiltonianResult out;
  if (detail::is_zero(p.data(), n)) {
    out.value = 0.0;
    out.argmax_index = 0;
    return out;
  }
  const detail::DdhKernel k(lip, n);
  const double pnorm = detail::norm2(p.data(), n);
  double best = -INFINITY;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double t = k.term(x.data(), p.data(), pnorm, data.state(i).data(), data.velocity(i).data());
    if (t > best) {
      best = t;
      arg = i;
    }
  }
  out.value = best;
  out.argmax_index = arg;
  return out;
}

HamiltonianResult brute_force_hamiltonian(const Dynamics& dynamics, const ControlGrid& controls,
                                          std::span<const double> x,
                                          std::span<const double> p) {
  require_same(x.size(), dynamics.state_dim(), "brute force state");
  require_same(p.size(), dynamics.state_dim(), "brute force costate");
  const ControlMax m = dynamics.max_over_controls(x, p, controls);
  HamiltonianResult out;
  out.value = m.value;
  out.control_index = m.index;
  return out;
}

HamiltonianResult evaluate(const HamiltonianSpec& spec, std::span<const double> x,
                           std::span<const double> p) {
  if (const auto* d = std::get_if<DdhSpec>(&spec.form)) {
    return ddh(x, p, *d->data, d->lip);
  }
  if (const auto* b = std::get_if<BruteForceSpec>(&spec.form)) {
    return brute_force_hamiltonian(*b->dynamics, *b->controls, x, p);
  }
  if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) {
    HamiltonianResult inner = evaluate(*g->inner, x, p);
    const double bound = g_bounded_min(p, g->bound, x);
    if (inner.value >= bound) return inner;
    HamiltonianResult out;
    out.value = bound;
    return out;
  }
  const auto& m = std::get<ModularSpec>(spec.form);
  HamiltonianResult out;
  std::vector<double> masked(p.size());
  double sum = 0.0;
  for (const auto& part : m.parts) {
    std::fill(masked.begin(), masked.end(), 0.0);
    for (std::size_t j : part.costate) masked[j] = p[j];
    const HamiltonianResult r = evaluate(*part.spec, x, masked);
    sum += r.value;
    out.part_indices.push_back(r.argmax_index);
  }
  out.value = sum;
  return out;
}

}  // namespace ddhreach
