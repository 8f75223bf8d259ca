#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fatigue/discretization.hpp"

namespace fatigue {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Column label of a node: "x" in 1D, "x|y" in 2D.
std::string node_label(const SpaceGrid& grid, int node);

/**
 * CSV with one row per time node and one column per space node. An optional
 * leading "# config_hash=..." comment, then a header "t,<node coordinates>".
 */
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& u, const Grids& grids,
                          const std::string& config_hash = {});
Trajectory read_trajectory_csv(const std::filesystem::path& path, const Grids& grids);

nlohmann::json grid_to_json(const Grids& grids);
nlohmann::json trajectory_to_json(const Trajectory& u, const Grids& grids);
Trajectory trajectory_from_json(const nlohmann::json& j, const Grids& grids);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace fatigue
