#pragma once

// Arithmetic shared by the reference scan and the compiled evaluator. Both
// must run the same operations in the same order to agree bit for bit.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ddhreach/dataset.hpp"

namespace ddhreach::detail {

inline double norm2(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += p[j] * p[j];
  return std::sqrt(s);
}

inline bool is_zero(const double* p, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    if (p[j] != 0.0) return false;
  }
  return true;
}

inline double inner_ball(const double* p, const double* v, double r, double pnorm,
                         std::size_t n) {
  if (pnorm == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t j = 0; j < n; ++j) dot += p[j] * v[j];
  return dot - r * pnorm;
}

inline double inner_rect(const double* p, const double* v, const double* r, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += p[j] * v[j] - std::abs(p[j]) * r[j];
  return s;
}

class DdhKernel {
 public:
  DdhKernel(const LipschitzSpec& lip, std::size_t n) : n_(n) {
    lip.validate(n);
    kind_ = lip.kind();
    ball_ = lip.is_ball();
    switch (kind_) {
      case LipschitzKind::kUniform:
        c_ = {std::get<UniformLipschitz>(lip.form).constant};
        break;
      case LipschitzKind::kInputElementwise:
        c_ = std::get<InputElementwiseLipschitz>(lip.form).constants;
        break;
      case LipschitzKind::kOutputElementwise:
        c_ = std::get<OutputElementwiseLipschitz>(lip.form).constants;
        break;
      case LipschitzKind::kSensitivityMatrix:
        c_ = std::get<SensitivityMatrixLipschitz>(lip.form).entries;
        break;
    }
  }

  std::size_t dims() const { return n_; }
  bool ball() const { return ball_; }
  LipschitzKind kind() const { return kind_; }
  const std::vector<double>& constants() const { return c_; }

  /// Ball: r[0]. Rect: r[0..n).
  void radius(const double* x, const double* xi, double* r) const {
    switch (kind_) {
      case LipschitzKind::kUniform: {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += (x[j] - xi[j]) * (x[j] - xi[j]);
        r[0] = c_[0] * std::sqrt(s);
        return;
      }
      case LipschitzKind::kInputElementwise: {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += c_[j] * std::abs(x[j] - xi[j]);
        r[0] = s;
        return;
      }
      case LipschitzKind::kOutputElementwise: {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += (x[j] - xi[j]) * (x[j] - xi[j]);
        const double d = std::sqrt(s);
        for (std::size_t j = 0; j < n_; ++j) r[j] = c_[j] * d;
        return;
      }
      case LipschitzKind::kSensitivityMatrix: {
        for (std::size_t i = 0; i < n_; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < n_; ++j) s += c_[i * n_ + j] * std::abs(x[j] - xi[j]);
          r[i] = s;
        }
        return;
      }
    }
  }

  /// Inner minimum for one sample; pnorm is only read in the ball case.
  double term(const double* x, const double* p, double pnorm, const double* xi,
              const double* vi) const {
    double r[kDims];
    radius(x, xi, r);
    return ball_ ? inner_ball(p, vi, r[0], pnorm, n_) : inner_rect(p, vi, r, n_);
  }

  static constexpr std::size_t kDims = 8;

 private:
  std::size_t n_;
  LipschitzKind kind_{};
  bool ball_ = false;
  std::vector<double> c_;
};

inline double g_min(const double* p, const double* lo, const double* hi, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += p[j] >= 0.0 ? p[j] * lo[j] : p[j] * hi[j];
  return s;
}

}  // namespace ddhreach::detail
