#pragma once

#include <stdexcept>
#include <string>

namespace fatigue {

/// Invalid input: bad parameters, mismatched grids, malformed files or configs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical solve did not reach its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int step, double residual)
        : std::runtime_error(what), step_(step), residual_(residual) {}

    [[nodiscard]] int step() const noexcept { return step_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    int step_;
    double residual_;
};

}  // namespace fatigue
