#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ddhreach {

/// Sorted, duplicate-free list of dataset indices.
using IndexSet = std::vector<std::size_t>;

struct Sample {
  std::vector<double> x;  // state
  std::vector<double> u;  // control
  std::vector<double> v;  // state velocity f(x, u)
};

/// Ordered trajectory observations. The position of a sample is its identity:
/// argmax tie-breaking and pruning index maps both refer to it.
class Dataset {
 public:
  Dataset(std::size_t n_x, std::size_t n_u);

  std::size_t n_x() const { return n_x_; }
  std::size_t n_u() const { return n_u_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  void append(std::span<const double> x, std::span<const double> u,
              std::span<const double> v);
  void append(const Sample& s) { append(s.x, s.u, s.v); }
  void append(const Dataset& other);

  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * n_x_, n_x_};
  }
  std::span<const double> control(std::size_t i) const {
    return {controls_.data() + i * n_u_, n_u_};
  }
  std::span<const double> velocity(std::size_t i) const {
    return {velocities_.data() + i * n_x_, n_x_};
  }
  Sample sample(std::size_t i) const;

  bool operator==(const Dataset& other) const = default;

 private:
  std::size_t n_x_, n_u_, count_ = 0;
  std::vector<double> states_, controls_, velocities_;
};

struct UniformLipschitz {
  double constant = 0.0;
  bool operator==(const UniformLipschitz&) const = default;
};
struct InputElementwiseLipschitz {
  std::vector<double> constants;  // per state input dimension
  bool operator==(const InputElementwiseLipschitz&) const = default;
};
struct OutputElementwiseLipschitz {
  std::vector<double> constants;  // per velocity output dimension
  bool operator==(const OutputElementwiseLipschitz&) const = default;
};
/// entries[i * dim + j] bounds |f_i(x) - f_i(x')| per unit |x_j - x'_j|.
struct SensitivityMatrixLipschitz {
  std::size_t dim = 0;
  std::vector<double> entries;
  double at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
  bool operator==(const SensitivityMatrixLipschitz&) const = default;
};

enum class LipschitzKind { kUniform, kInputElementwise, kOutputElementwise, kSensitivityMatrix };

/// Prior knowledge of how fast the vector field may change with the state.
struct LipschitzSpec {
  std::variant<UniformLipschitz, InputElementwiseLipschitz,
               OutputElementwiseLipschitz, SensitivityMatrixLipschitz>
      form;

  LipschitzKind kind() const { return static_cast<LipschitzKind>(form.index()); }
  /// Throws unless every entry is finite, nonnegative and sized for `n_x`.
  void validate(std::size_t n_x) const;
  /// Every constant multiplied by c >= 0.
  LipschitzSpec scaled(double c) const;
  /// True when the uncertainty sets are l2 balls (otherwise hyperrectangles).
  bool is_ball() const {
    return kind() == LipschitzKind::kUniform ||
           kind() == LipschitzKind::kInputElementwise;
  }

  bool operator==(const LipschitzSpec& other) const = default;
};

/// Empirical Lipschitz constants: tight on the observed pairs, hence only a
/// lower bound on the true constants. Never a certificate.
struct LipschitzEstimate {
  LipschitzSpec spec;
  std::size_t pairs_used = 0;
  bool certified = false;
};

/// Scans all pairs whose controls agree within `control_tolerance` (l2).
/// The vector and matrix forms are not unique; this returns the isotropic
/// choice: InputElementwise = c * ones with c = max |dv| / |dx|_1, and each
/// SensitivityMatrix row i equal to max |dv_i| / |dx|_1.
LipschitzEstimate estimate_lipschitz(const Dataset& data, LipschitzKind kind,
                                     double control_tolerance = 1e-9);

/// True when the inequality for `lip` holds on the pair (i, k).
bool lipschitz_holds(const LipschitzSpec& lip, const Dataset& data,
                     std::size_t i, std::size_t k, double slack = 1e-12);

struct PruneResult {
  Dataset data;
  std::map<std::size_t, std::size_t> old_to_new;
  bool empty = false;  // nothing kept; any DDH over `data` is undefined
};

/// Keeps exactly the samples listed in `used`, preserving order.
PruneResult prune(const Dataset& data, const IndexSet& used);

Dataset read_dataset_csv(std::istream& in);
void write_dataset_csv(const Dataset& data, std::ostream& out);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Header "x0..,u0..,v0..".
std::vector<std::string> dataset_header(std::size_t n_x, std::size_t n_u);

}  // namespace ddhreach
