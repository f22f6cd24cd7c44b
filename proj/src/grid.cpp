#include "ddhreach/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ddhreach {

Grid::Grid(std::vector<double> mins, std::vector<double> maxs,
           std::vector<std::size_t> counts)
    : mins_(std::move(mins)), maxs_(std::move(maxs)), counts_(std::move(counts)) {
  if (mins_.empty() || mins_.size() != maxs_.size() ||
      mins_.size() != counts_.size()) {
    throw std::invalid_argument("grid: mins, maxs and counts must have equal nonzero length");
  }
  const std::size_t n = mins_.size();
  spacing_.resize(n);
  strides_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(mins_[j]) || !std::isfinite(maxs_[j]) ||
        counts_[j] < 3 || !(maxs_[j] > mins_[j])) {
      std::ostringstream os;
      os << "grid: degenerate axis " << j << " (need count >= 3 and max > min)";
      throw std::invalid_argument(os.str());
    }
    spacing_[j] = (maxs_[j] - mins_[j]) / static_cast<double>(counts_[j] - 1);
  }
  std::size_t stride = 1;
  for (std::size_t j = n; j-- > 0;) {
    strides_[j] = stride;
    stride *= counts_[j];
  }
  size_ = stride;
}

Grid make_grid(std::vector<double> mins, std::vector<double> maxs,
               std::vector<std::size_t> counts) {
  return Grid(std::move(mins), std::move(maxs), std::move(counts));
}

double Grid::max_spacing() const {
  return *std::max_element(spacing_.begin(), spacing_.end());
}

double Grid::coordinate(std::size_t axis, std::size_t k) const {
  if (k + 1 == counts_[axis]) return maxs_[axis];
  return mins_[axis] + static_cast<double>(k) * spacing_[axis];
}

std::size_t Grid::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != dims()) throw std::invalid_argument("grid: index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t j = 0; j < dims(); ++j) {
    if (index[j] >= counts_[j]) throw std::out_of_range("grid: index out of bounds");
    flat += index[j] * strides_[j];
  }
  return flat;
}

std::vector<std::size_t> Grid::multi_index(std::size_t flat) const {
  if (flat >= size_) throw std::out_of_range("grid: flat index out of bounds");
  std::vector<std::size_t> index(dims());
  for (std::size_t j = 0; j < dims(); ++j) {
    index[j] = flat / strides_[j];
    flat %= strides_[j];
  }
  return index;
}

std::vector<double> Grid::point(std::size_t flat) const {
  std::vector<double> x(dims());
  point(flat, x);
  return x;
}

void Grid::point(std::size_t flat, std::span<double> out) const {
  for (std::size_t j = 0; j < dims(); ++j) {
    const std::size_t k = flat / strides_[j];
    flat %= strides_[j];
    out[j] = coordinate(j, k);
  }
}

bool Grid::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < dims(); ++j) {
    if (!(x[j] >= mins_[j] && x[j] <= maxs_[j])) return false;
  }
  return true;
}

bool Grid::operator==(const Grid& other) const {
  return mins_ == other.mins_ && maxs_ == other.maxs_ && counts_ == other.counts_;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("field: value count does not match grid");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream os;
      os << "field: non-finite value at flat index " << i;
      throw std::invalid_argument(os.str());
    }
  }
}

ScalarField ScalarField::constant(Grid grid, double value) {
  const std::size_t n = grid.size();
  return ScalarField(std::move(grid), std::vector<double>(n, value));
}

ScalarField ScalarField::from_function(
    Grid grid, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> values(grid.size());
  std::vector<double> x(grid.dims());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x);
    values[i] = f(x);
  }
  return ScalarField(std::move(grid), std::move(values));
}

ScalarField pointwise_min(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field: grid mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(a[i], b[i]);
  return ScalarField(a.grid(), std::move(out));
}

namespace {

double axis_derivative(const ScalarField& field, std::size_t flat,
                       std::size_t axis, std::size_t k) {
  const Grid& g = field.grid();
  const std::size_t s = g.stride(axis);
  const std::size_t n = g.counts()[axis];
  const double h = g.spacing(axis);
  if (k == 0) return (field[flat + s] - field[flat]) / h;
  if (k + 1 == n) return (field[flat] - field[flat - s]) / h;
  return (field[flat + s] - field[flat - s]) / (2.0 * h);
}

}  // namespace

std::vector<double> central_gradient(const ScalarField& field,
                                     std::span<const std::size_t> index) {
  const std::size_t flat = field.grid().flat_index(index);
  std::vector<double> grad(index.size());
  for (std::size_t j = 0; j < index.size(); ++j) {
    grad[j] = axis_derivative(field, flat, j, index[j]);
  }
  return grad;
}

std::vector<ScalarField> gradient_fields(const ScalarField& field) {
  const Grid& g = field.grid();
  std::vector<std::vector<double>> comps(g.dims(), std::vector<double>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t rem = i;
    for (std::size_t j = 0; j < g.dims(); ++j) {
      const std::size_t k = rem / g.stride(j);
      rem %= g.stride(j);
      comps[j][i] = axis_derivative(field, i, j, k);
    }
  }
  std::vector<ScalarField> out;
  out.reserve(g.dims());
  for (auto& c : comps) out.emplace_back(g, std::move(c));
  return out;
}

Interpolation interpolate(const ScalarField& field, std::span<const double> x) {
  const Grid& g = field.grid();
  const std::size_t n = g.dims();
  if (x.size() != n) throw std::invalid_argument("interpolate: dimension mismatch");
  constexpr std::size_t kMaxDims = 8;
  if (n > kMaxDims) throw std::invalid_argument("interpolate: too many dimensions");
  std::size_t lower[kMaxDims];
  double frac[kMaxDims];
  Interpolation result;
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(x[j])) throw std::invalid_argument("interpolate: non-finite query");
    double xj = x[j];
    if (xj < g.mins()[j]) {
      xj = g.mins()[j];
      result.clamped = true;
    } else if (xj > g.maxs()[j]) {
      xj = g.maxs()[j];
      result.clamped = true;
    }
    const std::size_t cells = g.counts()[j] - 1;
    const double pos = (xj - g.mins()[j]) / g.spacing(j);
    std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
    if (k >= cells) k = cells - 1;
    double t = (xj - g.coordinate(j, k)) / g.spacing(j);
    if (xj == g.coordinate(j, k)) t = 0.0;
    if (xj == g.coordinate(j, k + 1)) t = 1.0;
    lower[j] = k;
    frac[j] = std::clamp(t, 0.0, 1.0);
  }
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool up = (c >> j) & 1U;
      w *= up ? frac[j] : 1.0 - frac[j];
      flat += (lower[j] + (up ? 1 : 0)) * g.stride(j);
    }
    if (w != 0.0) acc += w * field[flat];
  }
  result.value = acc;
  return result;
}

double box_margin(const std::vector<AxisBound>& bounds,
                  std::span<const double> x) {
  double m = kVacuousLevel;
  for (const auto& b : bounds) {
    if (b.lower) m = std::min(m, x[b.axis] - *b.lower);
    if (b.upper) m = std::min(m, *b.upper - x[b.axis]);
  }
  return m;
}

ScalarField levelset_from_bounds(const Grid& grid,
                                 const std::vector<AxisBound>& bounds) {
  for (const auto& b : bounds) {
    if (b.axis >= grid.dims()) {
      std::ostringstream os;
      os << "levelset: unknown axis " << b.axis;
      throw std::invalid_argument(os.str());
    }
  }
  return ScalarField::from_function(
      grid, [&](std::span<const double> x) { return box_margin(bounds, x); });
}

double nonnegative_fraction(const ScalarField& field) {
  std::size_t count = 0;
  for (double v : field.values()) count += v >= 0.0 ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(field.size());
}

}  // namespace ddhreach
