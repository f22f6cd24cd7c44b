#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ddhreach {

/// Rectangular, uniformly spaced state-space grid. Storage order is row-major
/// over the axes in declared order (the last axis varies fastest).
class Grid {
 public:
  Grid(std::vector<double> mins, std::vector<double> maxs,
       std::vector<std::size_t> counts);

  std::size_t dims() const { return mins_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::vector<double>& spacing() const { return spacing_; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  double max_spacing() const;
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  double coordinate(std::size_t axis, std::size_t k) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;
  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::vector<double> point(std::size_t flat) const;
  void point(std::size_t flat, std::span<double> out) const;
  bool contains(std::span<const double> x) const;

  bool operator==(const Grid& other) const;

 private:
  std::vector<double> mins_, maxs_, spacing_;
  std::vector<std::size_t> counts_, strides_;
  std::size_t size_ = 0;
};

Grid make_grid(std::vector<double> mins, std::vector<double> maxs,
               std::vector<std::size_t> counts);

/// A finite scalar function sampled at every grid point.
class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values);

  static ScalarField constant(Grid grid, double value);
  static ScalarField from_function(
      Grid grid, const std::function<double(std::span<const double>)>& f);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double at(std::span<const std::size_t> index) const {
    return values_[grid_.flat_index(index)];
  }
  std::size_t size() const { return values_.size(); }

  /// Moves the storage out; the field is left empty.
  std::vector<double> release() && { return std::move(values_); }

 private:
  Grid grid_;
  std::vector<double> values_;
};

ScalarField pointwise_min(const ScalarField& a, const ScalarField& b);

/// Per-axis gradient: central differences inside, first-order one-sided
/// differences on the boundary.
std::vector<double> central_gradient(const ScalarField& field,
                                     std::span<const std::size_t> index);

/// One field per axis holding central_gradient at every grid point.
std::vector<ScalarField> gradient_fields(const ScalarField& field);

struct Interpolation {
  double value = 0.0;
  bool clamped = false;  // the query lay outside the grid and was clamped
};

/// Multilinear interpolation over the enclosing cell. Queries outside the
/// domain are clamped to the boundary and flagged.
Interpolation interpolate(const ScalarField& field, std::span<const double> x);

/// One axis-aligned constraint lower <= x[axis] <= upper; either side may be
/// omitted.
struct AxisBound {
  std::size_t axis = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  bool operator==(const AxisBound&) const = default;
};

/// Value used for a constraint-free level set ("everything inside").
inline constexpr double kVacuousLevel = 1.0e6;

/// Signed margin min_k (x_j - lower_k, upper_k - x_j): positive inside the
/// intersection of the bounds, zero on its boundary.
ScalarField levelset_from_bounds(const Grid& grid,
                                 const std::vector<AxisBound>& bounds);

/// Same margin evaluated at an arbitrary point.
double box_margin(const std::vector<AxisBound>& bounds,
                  std::span<const double> x);

/// Fraction of grid points where the field is >= 0.
double nonnegative_fraction(const ScalarField& field);

}  // namespace ddhreach
