#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fatigue/adjoint.hpp"
#include "fatigue/config.hpp"
#include "fatigue/optimizer.hpp"
#include "fatigue/state_solver.hpp"

namespace fatigue {

/// A fully resolved run description built from a config file.
struct Scenario {
    std::string name;
    Config config;
    Problem problem;
    Trajectory control;
    ObjectiveSpec objective;
    std::optional<Trajectory> direction;
    SmoothingParams smoothing;
    PathConfig path;
    std::vector<double> fd_taus;
    std::vector<double> grad_taus;
    int fd_directions = 3;
    int probe_directions = 20;
    double stationarity_tolerance = 0.0;  // 0: derive from the path
    std::optional<std::filesystem::path> candidate_file;
    bool monotone_required = false;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

Scenario scenario_from_config(Config config);
Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Trajectory described by a control-like section (constant / separable / csv).
Trajectory trajectory_from_section(const Config& config, const std::string& section, const Grids& grids);

/// Random smooth directions reproducible from the scenario seed.
std::vector<Trajectory> scenario_directions(const Scenario& scenario, int count, std::uint64_t salt);

}  // namespace fatigue
