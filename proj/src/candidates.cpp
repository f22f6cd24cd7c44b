// Compiled Hamiltonian evaluation with per-block candidate lists.
//
// For a block B of grid points and a costate sign pattern s (rect case), the
// inner value of sample i is sum_j |p_j| z_ij(x) with z_ij = s_j v_ij - r_ij(x).
// If z_k >= z_i + m componentwise at the block center, where m covers twice
// the radius variation over B plus a rounding guard, then inner_k > inner_i at
// every x in B and every nonzero p with sign pattern s, so i is never the
// argmax there. Ball radii use r_i >= r_k + |v_k - v_i| + m instead.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "ddh_kernel.hpp"
#include "ddhreach/errors.hpp"
#include "ddhreach/hamiltonian.hpp"

namespace ddhreach {

namespace {

constexpr std::size_t kD = detail::DdhKernel::kDims;
constexpr double kGuard = 1e-9;
// Above this ratio of tie to free costate weight the grouped hull lists are
// bypassed; below it rounding stays far under the guard.
constexpr double kTieRatio = 1e4;

struct EvalOut {
  double value = 0.0;
  std::size_t count = 0;
  std::size_t idx[kD] = {};
};

enum class Kind { kDdh, kBrute, kGBounded, kModular };

struct Node {
  Kind kind = Kind::kDdh;

  // DDH
  const Dataset* data = nullptr;
  std::unique_ptr<detail::DdhKernel> kernel;
  std::vector<std::size_t> mask;
  std::size_t orthants = 1;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> cands;
  const Box* dominating_bound = nullptr;
  // Mask positions whose Lipschitz row is zero, and the others. Samples tie
  // exactly on the former, so lists built with the hull are only trusted
  // while the costate weight there stays small next to the rest.
  std::vector<std::size_t> tie_q, free_q;
  std::vector<std::uint32_t> all;

  // brute force
  const Dynamics* dyn = nullptr;
  const ControlGrid* controls = nullptr;

  // G-bounded
  const VelocityBound* bound = nullptr;
  int child = -1;

  // modular
  std::vector<std::vector<std::size_t>> part_costate;
  std::vector<int> part_child;
};

// Two components qa, qb: sample i is dropped when z_i + margin lies under
// the upper-right convex hull of the pool (and of the bound point). Then some
// convex combination beats it in every direction w >= 0, hence so does one
// of its members. The extra guard covers rounding in the hull test itself.
std::vector<std::uint32_t> hull_filter(const std::uint32_t* ids, std::size_t count, const std::vector<double>& z,
                                       std::size_t m, std::size_t qa, std::size_t qb, const double* margin,
                                       double guard, const double* zb) {
  struct P {
    double a, b;
  };
  std::vector<P> pts(count);
  for (std::size_t k = 0; k < count; ++k) pts[k] = {z[ids[k] * m + qa], z[ids[k] * m + qb]};
  if (zb) pts.push_back({zb[qa], zb[qb]});
  std::sort(pts.begin(), pts.end(), [](const P& u, const P& w) { return u.a > w.a || (u.a == w.a && u.b > w.b); });
  std::vector<P> hull;
  double top = -INFINITY;
  for (const P& q : pts) {
    if (!(q.b > top)) continue;
    top = q.b;
    while (hull.size() >= 2) {
      const P& A = hull[hull.size() - 2];
      const P& B = hull.back();
      const double cross = (B.a - A.a) * (q.b - A.b) - (B.b - A.b) * (q.a - A.a);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(q);
  }
  struct Edge {
    double wa, wb, c;
  };
  std::vector<Edge> edges;
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const P& A = hull[h];
    const P& B = hull[h + 1];
    const double wa = B.b - A.b, wb = A.a - B.a;
    edges.push_back({wa, wb, std::min(wa * A.a + wb * A.b, wa * B.a + wb * B.b)});
  }
  const double amax = hull.front().a, bmax = hull.back().b;
  std::vector<std::uint32_t> kept;
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint32_t i = ids[k];
    const double ya = z[i * m + qa] + margin[qa] + guard, yb = z[i * m + qb] + margin[qb] + guard;
    bool under = ya <= amax && yb <= bmax;
    for (std::size_t h = 0; under && h < edges.size(); ++h) under = edges[h].wa * ya + edges[h].wb * yb <= edges[h].c;
    if (!under) kept.push_back(i);
  }
  return kept;
}

// DdhKernel::term for a sensitivity matrix with the dimension fixed at
// compile time. Same operations in the same order, so the same bits.
template <std::size_t D>
void scan_sensitivity(const double* L, const double* x, const double* p, const Dataset& data,
                      const std::uint32_t* it, const std::uint32_t* end, double& best, std::size_t& arg,
                      bool& any) {
  double ap[D];
  for (std::size_t j = 0; j < D; ++j) ap[j] = std::abs(p[j]);
  for (; it != end; ++it) {
    const std::size_t i = *it;
    const double* xi = data.state(i).data();
    const double* vi = data.velocity(i).data();
    double d[D];
    for (std::size_t j = 0; j < D; ++j) d[j] = std::abs(x[j] - xi[j]);
    double s = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
      double r = 0.0;
      for (std::size_t j = 0; j < D; ++j) r += L[a * D + j] * d[j];
      s += p[a] * vi[a] - ap[a] * r;
    }
    if (s > best) {
      best = s;
      arg = i;
      any = true;
    }
  }
}

}  // namespace

struct CompiledHamiltonian::Impl {
  Grid grid;
  CandidateOptions opt;
  std::vector<Node> nodes;
  std::vector<std::uint32_t> block_of;
  std::size_t blocks = 1;
  std::vector<std::size_t> blocks_per_axis;
  std::size_t data_size = 0;
  std::size_t n = 0;

  Impl(const Grid& g, CandidateOptions o) : grid(g), opt(o), n(g.dims()) {}

  int build(const HamiltonianSpec& spec, std::vector<std::size_t> mask, const Box* bound);
  void build_blocks();
  void build_candidates(Node& node) const;
  void block_lists(const Node& node, std::size_t b, std::vector<std::vector<std::uint32_t>>& out) const;
  void eval(int id, std::size_t flat, const double* x, const double* p, EvalOut& out) const;
};

int CompiledHamiltonian::Impl::build(const HamiltonianSpec& spec, std::vector<std::size_t> mask,
                                     const Box* bound) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (const auto* d = std::get_if<DdhSpec>(&spec.form)) {
    Node node;
    node.kind = Kind::kDdh;
    node.data = d->data.get();
    node.kernel = std::make_unique<detail::DdhKernel>(d->lip, n);
    node.mask = std::move(mask);
    node.dominating_bound = bound;
    build_candidates(node);
    nodes[id] = std::move(node);
  } else if (const auto* b = std::get_if<BruteForceSpec>(&spec.form)) {
    nodes[id].kind = Kind::kBrute;
    nodes[id].dyn = b->dynamics.get();
    nodes[id].controls = b->controls.get();
  } else if (const auto* g = std::get_if<GBoundedSpec>(&spec.form)) {
    nodes[id].kind = Kind::kGBounded;
    nodes[id].bound = &g->bound;
    const Box* dom = g->bound.state_dependent() ? nullptr : &g->bound.box;
    const int c = build(*g->inner, mask, dom);
    nodes[id].child = c;
  } else {
    const auto& m = std::get<ModularSpec>(spec.form);
    std::vector<std::vector<std::size_t>> costates;
    std::vector<int> children;
    for (const auto& part : m.parts) {
      std::vector<std::size_t> sub;
      for (std::size_t j : part.costate) {
        if (std::find(mask.begin(), mask.end(), j) != mask.end()) sub.push_back(j);
      }
      std::sort(sub.begin(), sub.end());
      costates.push_back(part.costate);
      children.push_back(build(*part.spec, sub, nullptr));
    }
    nodes[id].kind = Kind::kModular;
    nodes[id].part_costate = std::move(costates);
    nodes[id].part_child = std::move(children);
  }
  return id;
}

void CompiledHamiltonian::Impl::build_blocks() {
  const std::size_t bs = opt.enabled ? std::max<std::size_t>(opt.block, 1) : 0;
  blocks_per_axis.assign(n, 1);
  block_of.assign(grid.size(), 0);
  if (bs == 0) {
    blocks = 1;
    return;
  }
  blocks = 1;
  for (std::size_t j = 0; j < n; ++j) {
    blocks_per_axis[j] = (grid.counts()[j] + bs - 1) / bs;
    blocks *= blocks_per_axis[j];
  }
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const auto idx = grid.multi_index(f);
    std::size_t b = 0;
    for (std::size_t j = 0; j < n; ++j) b = b * blocks_per_axis[j] + idx[j] / bs;
    block_of[f] = static_cast<std::uint32_t>(b);
  }
}

void CompiledHamiltonian::Impl::block_lists(const Node& node, std::size_t b,
                                            std::vector<std::vector<std::uint32_t>>& out) const {
  const Dataset& data = *node.data;
  const detail::DdhKernel& k = *node.kernel;
  const std::size_t N = data.size();
  const std::size_t m = node.mask.size();
  out.assign(node.orthants, {});

  if (!opt.enabled || m == 0) {
    for (auto& l : out) {
      l.resize(N);
      std::iota(l.begin(), l.end(), 0u);
    }
    return;
  }

  // Block geometry.
  const std::size_t bs = std::max<std::size_t>(opt.block, 1);
  double c[kD], h[kD];
  {
    std::size_t rem = b;
    for (std::size_t j = n; j-- > 0;) {
      const std::size_t bj = rem % blocks_per_axis[j];
      rem /= blocks_per_axis[j];
      const std::size_t k0 = bj * bs;
      const std::size_t k1 = std::min(k0 + bs - 1, grid.counts()[j] - 1);
      const double lo = grid.coordinate(j, k0), hi = grid.coordinate(j, k1);
      c[j] = 0.5 * (lo + hi);
      h[j] = 0.5 * (hi - lo) * (1.0 + 1e-12);
    }
  }

  // Radius variation over the block.
  const auto& L = k.constants();
  double e[kD] = {};
  double hnorm = 0.0;
  for (std::size_t j = 0; j < n; ++j) hnorm += h[j] * h[j];
  hnorm = std::sqrt(hnorm);
  switch (k.kind()) {
    case LipschitzKind::kUniform:
      e[0] = L[0] * hnorm;
      break;
    case LipschitzKind::kInputElementwise:
      for (std::size_t j = 0; j < n; ++j) e[0] += L[j] * h[j];
      break;
    case LipschitzKind::kOutputElementwise:
      for (std::size_t j = 0; j < n; ++j) e[j] = L[j] * hnorm;
      break;
    case LipschitzKind::kSensitivityMatrix:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) e[i] += L[i * n + j] * h[j];
      }
      break;
  }

  // Radii at the center, and a magnitude scale for the rounding guard.
  const std::size_t rw = k.ball() ? 1 : n;
  std::vector<double> r(N * rw);
  double scale = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    k.radius(c, data.state(i).data(), &r[i * rw]);
    for (std::size_t q = 0; q < rw; ++q) scale = std::max(scale, r[i * rw + q]);
    for (double v : data.velocity(i)) scale = std::max(scale, std::abs(v));
  }
  const double guard = kGuard * scale;
  const Box* gb = node.dominating_bound;

  if (k.ball()) {
    const double margin = 2.0 * e[0] + guard;
    std::vector<std::uint32_t> order(N);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t bb) { return r[a] < r[bb]; });
    std::vector<std::uint32_t> kept;
    auto vdist = [&](std::uint32_t a, std::uint32_t bb) {
      const auto va = data.velocity(a), vb = data.velocity(bb);
      double s = 0.0;
      for (std::size_t j : node.mask) s += (va[j] - vb[j]) * (va[j] - vb[j]);
      return std::sqrt(s);
    };
    std::size_t last = 0;
    for (std::uint32_t i : order) {
      if (gb) {
        const auto vi = data.velocity(i);
        double s = 0.0;
        for (std::size_t j : node.mask) {
          const double a = vi[j] - gb->lower[j], bb = gb->upper[j] - vi[j];
          s += std::max(a * a, bb * bb);
        }
        if (r[i] - e[0] >= std::sqrt(s) + guard + e[0]) continue;
      }
      bool dominated = false;
      if (!kept.empty()) {
        const std::uint32_t kk = kept[last];
        dominated = r[i] >= r[kk] + vdist(kk, i) + margin;
        for (std::size_t q = 0; !dominated && q < kept.size(); ++q) {
          if (r[i] >= r[kept[q]] + vdist(kept[q], i) + margin) {
            dominated = true;
            last = q;
          }
        }
      }
      if (!dominated) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    out[0] = std::move(kept);
    return;
  }

  // A component with no radius variation over the block is degenerate: its
  // contribution is the same at every x, so two samples with equal velocity
  // and radius there tie exactly and the smaller index wins.
  double margin[kD];
  bool deg[kD];
  for (std::size_t q = 0; q < m; ++q) {
    margin[q] = 2.0 * e[node.mask[q]] + guard;
    deg[q] = e[node.mask[q]] == 0.0;
  }
  std::vector<double> z(N * m);
  std::vector<double> sum(N);
  std::vector<std::uint32_t> order(N);
  std::vector<double> kz;
  std::vector<std::uint32_t> kept;
  for (std::size_t o = 0; o < node.orthants; ++o) {
    double zb[kD];
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t j = node.mask[q];
      const bool neg = (o >> q) & 1u;
      for (std::size_t i = 0; i < N; ++i) {
        const double v = data.velocity(i)[j];
        z[i * m + q] = (neg ? -v : v) - r[i * n + j];
      }
      if (gb) zb[q] = neg ? -gb->upper[j] : gb->lower[j];
    }
    auto beaten_by_bound = [&](const double* zi) {
      for (std::size_t q = 0; q < m; ++q) {
        if (zb[q] < zi[q] + margin[q]) return false;
      }
      return true;
    };

    std::vector<std::uint32_t> pool(N);
    std::iota(pool.begin(), pool.end(), 0u);
    if (node.free_q.size() == 2) {
      const std::size_t qa = node.free_q[0], qb = node.free_q[1];
      if (node.tie_q.empty()) {
        out[o] = hull_filter(pool.data(), N, z, m, qa, qb, margin, guard, gb ? zb : nullptr);
        continue;
      }
      // Hull within each group of samples that agree exactly on the tie components.
      auto less = [&](std::uint32_t u, std::uint32_t w) {
        for (std::size_t q : node.tie_q) {
          if (z[u * m + q] != z[w * m + q]) return z[u * m + q] < z[w * m + q];
        }
        return u < w;
      };
      auto same = [&](std::uint32_t u, std::uint32_t w) {
        for (std::size_t q : node.tie_q) {
          if (z[u * m + q] != z[w * m + q]) return false;
        }
        return true;
      };
      std::sort(pool.begin(), pool.end(), less);
      std::vector<std::uint32_t> survivors;
      for (std::size_t g0 = 0; g0 < N;) {
        std::size_t g1 = g0 + 1;
        while (g1 < N && same(pool[g0], pool[g1])) ++g1;
        const auto part = hull_filter(pool.data() + g0, g1 - g0, z, m, qa, qb, margin, guard, nullptr);
        survivors.insert(survivors.end(), part.begin(), part.end());
        g0 = g1;
      }
      std::sort(survivors.begin(), survivors.end());
      pool = std::move(survivors);
    }

    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t q = 0; q < m; ++q) s += z[i * m + q];
      sum[i] = s;
    }
    order = pool;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t bb) { return sum[a] > sum[bb]; });
    kz.clear();
    kept.clear();
    std::size_t last = 0;
    auto beats = [&](std::size_t kq, std::uint32_t i) {
      const double* zk = &kz[kq * m];
      const double* zi = &z[i * m];
      const std::uint32_t k = kept[kq];
      bool tied = false;
      for (std::size_t q = 0; q < m; ++q) {
        if (zk[q] >= zi[q] + margin[q]) continue;
        const std::size_t j = node.mask[q];
        if (deg[q] && data.velocity(k)[j] == data.velocity(i)[j] && r[k * n + j] == r[i * n + j]) {
          tied = true;
          continue;
        }
        return false;
      }
      return !tied || k < i;
    };
    for (std::uint32_t i : order) {
      const double* zi = &z[i * m];
      if (gb && beaten_by_bound(zi)) continue;
      bool dominated = false;
      if (!kept.empty()) {
        dominated = beats(last, i);
        for (std::size_t q = 0; !dominated && q < kept.size(); ++q) {
          if (beats(q, i)) {
            dominated = true;
            last = q;
          }
        }
      }
      if (!dominated) {
        kept.push_back(i);
        kz.insert(kz.end(), zi, zi + m);
      }
    }
    std::sort(kept.begin(), kept.end());
    out[o] = kept;
  }
}

void CompiledHamiltonian::Impl::build_candidates(Node& node) const {
  const std::size_t m = node.mask.size();
  node.orthants = (!opt.enabled || node.kernel->ball() || m == 0) ? 1 : (std::size_t{1} << m);
  node.tie_q.clear();
  node.free_q.clear();
  if (!node.kernel->ball()) {
    const auto& L = node.kernel->constants();
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t j = node.mask[q];
      bool zero = true;
      if (node.kernel->kind() == LipschitzKind::kSensitivityMatrix) {
        for (std::size_t k = 0; k < n; ++k) zero = zero && L[j * n + k] == 0.0;
      } else {
        zero = L[j] == 0.0;
      }
      (zero ? node.tie_q : node.free_q).push_back(q);
    }
    if (node.free_q.size() != 2) node.tie_q.clear();
  }
  if (!node.tie_q.empty()) {
    node.all.resize(node.data->size());
    std::iota(node.all.begin(), node.all.end(), 0u);
  }
  const std::size_t nb = blocks;
  std::vector<std::vector<std::vector<std::uint32_t>>> per_block(nb);
  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, nb));
  auto work = [&](std::size_t w) {
    for (std::size_t b = w; b < nb; b += workers) block_lists(node, b, per_block[b]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  node.offsets.assign(1, 0);
  node.cands.clear();
  for (std::size_t b = 0; b < nb; ++b) {
    for (auto& l : per_block[b]) {
      node.cands.insert(node.cands.end(), l.begin(), l.end());
      node.offsets.push_back(static_cast<std::uint32_t>(node.cands.size()));
    }
    per_block[b].clear();
    per_block[b].shrink_to_fit();
  }
}

void CompiledHamiltonian::Impl::eval(int id, std::size_t flat, const double* x, const double* p,
                                     EvalOut& out) const {
  const Node& node = nodes[static_cast<std::size_t>(id)];
  switch (node.kind) {
    case Kind::kDdh: {
      out.count = 0;
      if (detail::is_zero(p, n)) {
        out.value = 0.0;
        out.idx[out.count++] = 0;
        return;
      }
      std::size_t orth = 0;
      if (node.orthants > 1) {
        for (std::size_t q = 0; q < node.mask.size(); ++q) {
          if (!(p[node.mask[q]] >= 0.0)) orth |= std::size_t{1} << q;
        }
      }
      const std::size_t list = block_of[flat] * node.orthants + orth;
      const std::uint32_t* it = node.cands.data() + node.offsets[list];
      const std::uint32_t* end = node.cands.data() + node.offsets[list + 1];
      if (!node.tie_q.empty()) {
        double wt = 0.0, wf = 0.0;
        for (std::size_t q : node.tie_q) wt += std::abs(p[node.mask[q]]);
        for (std::size_t q : node.free_q) wf += std::abs(p[node.mask[q]]);
        if (wt > kTieRatio * wf) {
          it = node.all.data();
          end = it + node.all.size();
        }
      }
      const double pnorm = detail::norm2(p, n);
      const Dataset& data = *node.data;
      double best = -INFINITY;
      std::size_t arg = 0;
      bool any = false;
      const detail::DdhKernel& k = *node.kernel;
      if (k.kind() == LipschitzKind::kSensitivityMatrix && n == 3) {
        scan_sensitivity<3>(k.constants().data(), x, p, data, it, end, best, arg, any);
      } else if (k.kind() == LipschitzKind::kSensitivityMatrix && n == 2) {
        scan_sensitivity<2>(k.constants().data(), x, p, data, it, end, best, arg, any);
      } else {
        for (; it != end; ++it) {
          const std::size_t i = *it;
          const double t = k.term(x, p, pnorm, data.state(i).data(), data.velocity(i).data());
          if (t > best) {
            best = t;
            arg = i;
            any = true;
          }
        }
      }
      out.value = best;
      if (any) out.idx[out.count++] = arg;
      return;
    }
    case Kind::kBrute: {
      const ControlMax cm = node.dyn->max_over_controls({x, n}, {p, n}, *node.controls);
      out.value = cm.value;
      out.count = 0;
      return;
    }
    case Kind::kGBounded: {
      eval(node.child, flat, x, p, out);
      double bound;
      if (node.bound->state_dependent()) {
        const Box b = node.bound->at({x, n});
        bound = detail::g_min(p, b.lower.data(), b.upper.data(), n);
      } else {
        bound = detail::g_min(p, node.bound->box.lower.data(), node.bound->box.upper.data(), n);
      }
      if (!(out.value >= bound)) {
        out.value = bound;
        out.count = 0;
      }
      return;
    }
    case Kind::kModular: {
      double sum = 0.0;
      EvalOut total;
      for (std::size_t k = 0; k < node.part_child.size(); ++k) {
        double q[kD] = {};
        for (std::size_t j : node.part_costate[k]) q[j] = p[j];
        EvalOut sub;
        eval(node.part_child[k], flat, x, q, sub);
        sum += sub.value;
        for (std::size_t c = 0; c < sub.count && total.count < kD; ++c) total.idx[total.count++] = sub.idx[c];
      }
      total.value = sum;
      out = total;
      return;
    }
  }
}

CompiledHamiltonian::CompiledHamiltonian(const HamiltonianSpec& spec, const Grid& grid,
                                         CandidateOptions options)
    : impl_(std::make_unique<Impl>(grid, options)) {
  spec.validate(grid.dims());
  const Dataset* d = spec_dataset(spec);
  impl_->data_size = d ? d->size() : 0;
  impl_->build_blocks();
  std::vector<std::size_t> all(grid.dims());
  std::iota(all.begin(), all.end(), std::size_t{0});
  impl_->nodes.reserve(16);
  impl_->build(spec, all, nullptr);
}

CompiledHamiltonian::~CompiledHamiltonian() = default;
CompiledHamiltonian::CompiledHamiltonian(CompiledHamiltonian&&) noexcept = default;
CompiledHamiltonian& CompiledHamiltonian::operator=(CompiledHamiltonian&&) noexcept = default;

double CompiledHamiltonian::evaluate(std::size_t flat, const double* x, const double* p,
                                     std::uint8_t* used) const {
  EvalOut out;
  impl_->eval(0, flat, x, p, out);
  if (used) {
    for (std::size_t c = 0; c < out.count; ++c) used[out.idx[c]] = 1;
  }
  return out.value;
}

std::size_t CompiledHamiltonian::dataset_size() const { return impl_->data_size; }

CandidateStats CompiledHamiltonian::stats() const {
  CandidateStats s;
  s.dataset_size = impl_->data_size;
  for (const Node& node : impl_->nodes) {
    if (node.kind != Kind::kDdh) continue;
    for (std::size_t l = 0; l + 1 < node.offsets.size(); ++l) {
      const std::size_t c = node.offsets[l + 1] - node.offsets[l];
      ++s.lists;
      s.total_candidates += c;
      s.max_candidates = std::max(s.max_candidates, c);
    }
  }
  return s;
}

}  // namespace ddhreach
