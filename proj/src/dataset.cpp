#include "ddhreach/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ddhreach {

Dataset::Dataset(std::size_t n_x, std::size_t n_u) : n_x_(n_x), n_u_(n_u) {
  if (n_x == 0) throw std::invalid_argument("dataset: state dimension must be positive");
}

void Dataset::append(std::span<const double> x, std::span<const double> u,
                     std::span<const double> v) {
  if (x.size() != n_x_ || u.size() != n_u_ || v.size() != n_x_) {
    throw std::invalid_argument("dataset: sample dimensions do not match");
  }
  auto finite = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double d) { return std::isfinite(d); });
  };
  if (!finite(x) || !finite(u) || !finite(v)) {
    throw std::invalid_argument("dataset: non-finite sample");
  }
  states_.insert(states_.end(), x.begin(), x.end());
  controls_.insert(controls_.end(), u.begin(), u.end());
  velocities_.insert(velocities_.end(), v.begin(), v.end());
  ++count_;
}

void Dataset::append(const Dataset& other) {
  if (other.n_x_ != n_x_ || other.n_u_ != n_u_) {
    throw std::invalid_argument("dataset: cannot append datasets of different dimensions");
  }
  states_.insert(states_.end(), other.states_.begin(), other.states_.end());
  controls_.insert(controls_.end(), other.controls_.begin(), other.controls_.end());
  velocities_.insert(velocities_.end(), other.velocities_.begin(), other.velocities_.end());
  count_ += other.count_;
}

Sample Dataset::sample(std::size_t i) const {
  if (i >= count_) throw std::out_of_range("dataset: sample index out of range");
  auto x = state(i), u = control(i), v = velocity(i);
  return {{x.begin(), x.end()}, {u.begin(), u.end()}, {v.begin(), v.end()}};
}

namespace {

void require_nonnegative(std::span<const double> c, const char* what) {
  for (double d : c) {
    if (!std::isfinite(d) || d < 0.0) {
      throw std::invalid_argument(std::string("lipschitz: ") + what +
                                  " entries must be finite and nonnegative");
    }
  }
}

}  // namespace

void LipschitzSpec::validate(std::size_t n_x) const {
  std::visit(
      [n_x](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformLipschitz>) {
          require_nonnegative(std::span<const double>(&f.constant, 1), "uniform");
        } else if constexpr (std::is_same_v<T, SensitivityMatrixLipschitz>) {
          if (f.dim != n_x || f.entries.size() != n_x * n_x) {
            throw std::invalid_argument("lipschitz: sensitivity matrix must be n_x x n_x");
          }
          require_nonnegative(f.entries, "sensitivity matrix");
        } else {
          if (f.constants.size() != n_x) {
            throw std::invalid_argument("lipschitz: constant vector must have length n_x");
          }
          require_nonnegative(f.constants, "elementwise");
        }
      },
      form);
}

LipschitzSpec LipschitzSpec::scaled(double c) const {
  if (!(c >= 0.0)) throw std::invalid_argument("lipschitz: scale must be nonnegative");
  LipschitzSpec out = *this;
  std::visit(
      [c](auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformLipschitz>) {
          f.constant *= c;
        } else if constexpr (std::is_same_v<T, SensitivityMatrixLipschitz>) {
          for (double& e : f.entries) e *= c;
        } else {
          for (double& e : f.constants) e *= c;
        }
      },
      out.form);
  return out;
}

namespace {

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return s;
}

}  // namespace

LipschitzEstimate estimate_lipschitz(const Dataset& data, LipschitzKind kind,
                                     double control_tolerance) {
  if (data.size() < 2) throw std::invalid_argument("estimate_lipschitz: need at least 2 samples");
  if (!(control_tolerance >= 0.0)) {
    throw std::invalid_argument("estimate_lipschitz: control tolerance must be nonnegative");
  }
  const std::size_t n = data.n_x();
  double scalar = 0.0;
  std::vector<double> per_output(n, 0.0);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = i + 1; k < data.size(); ++k) {
      if (l2(data.control(i), data.control(k)) > control_tolerance) continue;
      const auto xi = data.state(i), xk = data.state(k);
      const auto vi = data.velocity(i), vk = data.velocity(k);
      const double dx2 = l2(xi, xk);
      if (dx2 == 0.0) continue;  // repeated state carries no slope information
      const double dx1 = l1(xi, xk);
      ++pairs;
      switch (kind) {
        case LipschitzKind::kUniform:
          scalar = std::max(scalar, l2(vi, vk) / dx2);
          break;
        case LipschitzKind::kInputElementwise:
          scalar = std::max(scalar, l2(vi, vk) / dx1);
          break;
        case LipschitzKind::kOutputElementwise:
          for (std::size_t r = 0; r < n; ++r) {
            per_output[r] = std::max(per_output[r], std::abs(vi[r] - vk[r]) / dx2);
          }
          break;
        case LipschitzKind::kSensitivityMatrix:
          for (std::size_t r = 0; r < n; ++r) {
            per_output[r] = std::max(per_output[r], std::abs(vi[r] - vk[r]) / dx1);
          }
          break;
      }
    }
  }
  if (pairs == 0) {
    throw std::invalid_argument("estimate_lipschitz: no sample pair passed the control filter");
  }
  LipschitzEstimate est;
  est.pairs_used = pairs;
  switch (kind) {
    case LipschitzKind::kUniform:
      est.spec.form = UniformLipschitz{scalar};
      break;
    case LipschitzKind::kInputElementwise:
      est.spec.form = InputElementwiseLipschitz{std::vector<double>(n, scalar)};
      break;
    case LipschitzKind::kOutputElementwise:
      est.spec.form = OutputElementwiseLipschitz{per_output};
      break;
    case LipschitzKind::kSensitivityMatrix: {
      SensitivityMatrixLipschitz m{n, std::vector<double>(n * n)};
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m.entries[r * n + c] = per_output[r];
      est.spec.form = m;
      break;
    }
  }
  return est;
}

bool lipschitz_holds(const LipschitzSpec& lip, const Dataset& data,
                     std::size_t i, std::size_t k, double slack) {
  const auto xi = data.state(i), xk = data.state(k);
  const auto vi = data.velocity(i), vk = data.velocity(k);
  const std::size_t n = data.n_x();
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformLipschitz>) {
          return l2(vi, vk) <= f.constant * l2(xi, xk) + slack;
        } else if constexpr (std::is_same_v<T, InputElementwiseLipschitz>) {
          double rhs = 0.0;
          for (std::size_t j = 0; j < n; ++j) rhs += f.constants[j] * std::abs(xi[j] - xk[j]);
          return l2(vi, vk) <= rhs + slack;
        } else if constexpr (std::is_same_v<T, OutputElementwiseLipschitz>) {
          const double d = l2(xi, xk);
          for (std::size_t r = 0; r < n; ++r)
            if (std::abs(vi[r] - vk[r]) > f.constants[r] * d + slack) return false;
          return true;
        } else {
          for (std::size_t r = 0; r < n; ++r) {
            double rhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) rhs += f.at(r, j) * std::abs(xi[j] - xk[j]);
            if (std::abs(vi[r] - vk[r]) > rhs + slack) return false;
          }
          return true;
        }
      },
      lip.form);
}

PruneResult prune(const Dataset& data, const IndexSet& used) {
  PruneResult out{Dataset(data.n_x(), data.n_u()), {}, false};
  std::vector<std::size_t> keep(used.begin(), used.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (std::size_t old : keep) {
    if (old >= data.size()) throw std::out_of_range("prune: index out of range");
    out.old_to_new.emplace(old, out.data.size());
    out.data.append(data.state(old), data.control(old), data.velocity(old));
  }
  out.empty = out.data.empty();
  return out;
}

std::vector<std::string> dataset_header(std::size_t n_x, std::size_t n_u) {
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < n_x; ++j) cols.push_back("x" + std::to_string(j));
  for (std::size_t j = 0; j < n_u; ++j) cols.push_back("u" + std::to_string(j));
  for (std::size_t j = 0; j < n_x; ++j) cols.push_back("v" + std::to_string(j));
  return cols;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = cell.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset csv: missing header");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = split_csv(line);
  std::size_t n_x = 0, n_u = 0, n_v = 0;
  for (const auto& h : header) {
    if (h.empty()) throw std::invalid_argument("dataset csv: empty header cell");
    const char kind = h[0];
    std::size_t& counter = kind == 'x' ? n_x : kind == 'u' ? n_u : n_v;
    if ((kind != 'x' && kind != 'u' && kind != 'v') || h.substr(1) != std::to_string(counter)) {
      throw std::invalid_argument("dataset csv: unexpected header column '" + h + "'");
    }
    ++counter;
  }
  if (header != dataset_header(n_x, n_u) || n_v != n_x) {
    throw std::invalid_argument("dataset csv: header must be x0..,u0..,v0.. with matching x/v counts");
  }
  Dataset data(n_x, n_u);
  std::vector<double> row(header.size());
  // Data rows are numbered from 1; the header does not count.
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_number;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("dataset csv: row " + std::to_string(row_number) +
                                  " has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      row[c] = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0') {
        throw std::invalid_argument("dataset csv: malformed number in row " +
                                    std::to_string(row_number));
      }
      if (!std::isfinite(row[c])) {
        throw std::invalid_argument("dataset csv: non-finite value in row " +
                                    std::to_string(row_number));
      }
    }
    std::span<const double> r(row);
    data.append(r.subspan(0, n_x), r.subspan(n_x, n_u), r.subspan(n_x + n_u, n_x));
  }
  return data;
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  const auto header = dataset_header(data.n_x(), data.n_u());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool first = true;
    for (auto part : {data.state(i), data.control(i), data.velocity(i)}) {
      for (double d : part) {
        std::snprintf(buf, sizeof buf, "%.17g", d);
        out << (first ? "" : ",") << buf;
        first = false;
      }
    }
    out << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("dataset: cannot open " + path.string());
  return read_dataset_csv(in);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path.string());
  write_dataset_csv(data, out);
}

}  // namespace ddhreach
