#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddhreach/expansion.hpp"
#include "ddhreach/grid.hpp"
#include "ddhreach/solver.hpp"
#include "ddhreach/systems.hpp"

namespace ddhreach {

/// Binary field: one UTF-8 header line
///   "# ddhreach-field dims=2 mins=a,b maxs=a,b counts=m,n\n"
/// followed by the values as little-endian float64 in storage order.
void write_field_binary(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_field_binary(const std::filesystem::path& path);

/// One row per grid point: x0..x{n-1},value.
void write_field_csv(const ScalarField& field, const std::filesystem::path& path);

/// Horizon, steps, CFL, dissipation, used indices and convergence flag.
std::string solve_metadata_json(const SolveResult& result);
void write_solve_metadata(const SolveResult& result, const std::filesystem::path& path);

/// Dataset columns plus t first, then branch and switching value.
void write_trajectory_csv(const Trajectory& traj, const std::vector<double>* values,
                          const std::filesystem::path& path);

std::string iteration_record_json(const IterationRecord& record);
void write_prune_map(const std::map<std::size_t, std::size_t>& map, const std::filesystem::path& path);
void write_polynomial_coefficients(const PolynomialSystem& sys, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes value, dataset, trajectories, record and prune map for one
/// iteration into dir/iter_NNN. Wall time goes to a separate timing file so
/// the rest of the export is reproducible bit for bit.
void export_iteration(const IterationOutput& out, const std::filesystem::path& dir);

}  // namespace ddhreach
