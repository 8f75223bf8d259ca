#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fatigue {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode : int { exit_ok = 0, exit_internal = 1, exit_validation = 2, exit_solver = 3 };

struct CliOptions {
    std::string subcommand;
    std::filesystem::path config;
    std::filesystem::path out = "out";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::vector<std::string> overrides;
};

const std::vector<std::string>& cli_subcommands();

/// Run one subcommand; writes manifest.json, report.json and trajectories/ under options.out.
int run_command(const CliOptions& options);

/// argv front end.
int cli_main(int argc, char** argv);

}  // namespace fatigue
