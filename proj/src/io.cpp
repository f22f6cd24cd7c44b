#include "ddhreach/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ddhreach/errors.hpp"

namespace ddhreach {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

void write_field_binary(const ScalarField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  std::ofstream out = open_out(path, true);
  out << "# ddhreach-field dims=" << g.dims() << " mins=" << join(g.mins()) << " maxs=" << join(g.maxs())
      << " counts=" << join(g.counts()) << "\n";
  const auto v = field.values();
  std::vector<unsigned char> buf(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ScalarField read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;
  if (tok != "#") throw ConfigError(path.string() + ": missing field header");
  std::vector<double> mins, maxs;
  std::vector<std::size_t> counts;
  std::size_t dims = 0;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dims") {
      dims = std::stoul(val);
    } else if (key == "mins" || key == "maxs") {
      auto& dst = key == "mins" ? mins : maxs;
      for (const auto& s : split(val, ',')) dst.push_back(std::stod(s));
    } else if (key == "counts") {
      for (const auto& s : split(val, ',')) counts.push_back(std::stoul(s));
    }
  }
  if (dims == 0 || mins.size() != dims || maxs.size() != dims || counts.size() != dims) {
    throw ConfigError(path.string() + ": inconsistent field header");
  }
  Grid grid(mins, maxs, counts);
  std::vector<unsigned char> buf(grid.size() * 8);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw ConfigError(path.string() + ": truncated field data");
  }
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
    v[i] = std::bit_cast<double>(bits);
  }
  return ScalarField(std::move(grid), std::move(v));
}

void write_field_csv(const ScalarField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  std::ofstream out = open_out(path);
  for (std::size_t j = 0; j < g.dims(); ++j) out << "x" << j << ",";
  out << "value\n";
  std::vector<double> x(g.dims());
  for (std::size_t f = 0; f < g.size(); ++f) {
    g.point(f, x);
    for (double a : x) out << fmt(a) << ",";
    out << fmt(field[f]) << "\n";
  }
}

std::string solve_metadata_json(const SolveResult& r) {
  nlohmann::ordered_json j;
  j["horizon"] = r.horizon;
  j["final_time"] = r.final_time;
  j["steps"] = r.steps_taken;
  j["dt"] = r.dt;
  j["cfl_factor"] = r.cfl_factor;
  j["dissipation"] = r.dissipation;
  j["converged_early"] = r.converged_early;
  j["used_indices"] = r.used_indices;
  j["candidate_lists"] = r.candidate_stats.lists;
  j["candidate_max"] = r.candidate_stats.max_candidates;
  j["candidate_total"] = r.candidate_stats.total_candidates;
  j["grid_counts"] = r.final_value.grid().counts();
  j["safe_fraction"] = nonnegative_fraction(r.final_value);
  return j.dump(2) + "\n";
}

void write_solve_metadata(const SolveResult& result, const std::filesystem::path& path) {
  write_text(path, solve_metadata_json(result));
}

void write_trajectory_csv(const Trajectory& traj, const std::vector<double>* values,
                          const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  const Dataset& d = traj.samples;
  out << "t";
  for (const auto& h : dataset_header(d.n_x(), d.n_u())) out << "," << h;
  out << ",branch,fallback";
  if (values) out << ",value";
  out << "\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    out << fmt(traj.times[k]);
    for (double a : d.state(k)) out << "," << fmt(a);
    for (double a : d.control(k)) out << "," << fmt(a);
    for (double a : d.velocity(k)) out << "," << fmt(a);
    out << "," << branch_name(traj.branches[k]) << "," << int(traj.fallbacks[k]);
    if (values) out << "," << fmt((*values)[k]);
    out << "\n";
  }
}

std::string iteration_record_json(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["dataset_before"] = r.dataset_before;
  j["dataset_after"] = r.dataset_after;
  j["pruned_size"] = r.pruned_size;
  j["used_indices"] = r.used_indices;
  j["safe_volume"] = r.safe_volume;
  j["min_g"] = r.min_g;
  j["branches"] = {{"backup", r.branches.backup},
                   {"safe", r.branches.safe},
                   {"explore", r.branches.explore},
                   {"fallback", r.branches.fallback}};
  j["solve_steps"] = r.solve_steps;
  return j.dump(2) + "\n";
}

void write_prune_map(const std::map<std::size_t, std::size_t>& map, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "old,new\n";
  for (const auto& [a, b] : map) out << a << "," << b << "\n";
}

void write_polynomial_coefficients(const PolynomialSystem& sys, const std::filesystem::path& path) {
  static const char* kMult[3] = {"p", "q", "r"};
  static const char* kMono[kPolyMonomials] = {"1", "u1", "u2", "u1^2", "u1*u2", "u2^2"};
  std::ofstream out = open_out(path);
  out << "output,multiplier,monomial,coefficient\n";
  const auto& c = sys.coefficients();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t k = 0; k < kPolyMonomials; ++k) {
        out << i + 1 << "," << kMult[a] << "," << kMono[k] << "," << fmt(c[i][a][k]) << "\n";
      }
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void export_iteration(const IterationOutput& out, const std::filesystem::path& dir) {
  char name[32];
  std::snprintf(name, sizeof name, "iter_%03zu", out.record.iteration);
  const auto d = dir / name;
  std::filesystem::create_directories(d);
  write_field_binary(out.value.final_value, d / "value.bin");
  write_solve_metadata(out.value, d / "solve.json");
  save_dataset(out.data, d / "dataset.csv");
  for (std::size_t j = 0; j < out.trajectories.size(); ++j) {
    char tn[32];
    std::snprintf(tn, sizeof tn, "traj_%03zu.csv", j);
    write_trajectory_csv(out.trajectories[j], &out.values_along[j], d / tn);
  }
  write_text(d / "record.json", iteration_record_json(out.record));
  if (out.prune_map) write_prune_map(*out.prune_map, d / "prune_map.csv");
  nlohmann::ordered_json t;
  t["wall_seconds"] = out.record.wall_seconds;
  write_text(d / "timing.json", t.dump(2) + "\n");
}

}  // namespace ddhreach
