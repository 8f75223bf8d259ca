#pragma once

#include <string>
#include <vector>

#include "fatigue/adjoint.hpp"

namespace fatigue {

struct PathConfig {
    double eps0 = 0.1;
    double gamma = 0.5;
    int stages = 8;
    double tol0 = 1e-4;       // stage k stops at |g|_{H1} <= tol0 * gamma^k
    double eps_f_ratio = 1.0; // eps_f = eps_f_ratio * eps_max
    int max_iterations = 2000;
    double armijo = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-14;
    bool anchor_previous_stage = true;

    void validate() const;
    [[nodiscard]] SmoothingParams smoothing(int stage) const;
    [[nodiscard]] double tolerance(int stage) const;
};

struct StageRecord {
    SmoothingParams smoothing;
    double tolerance = 0.0;
    int iterations = 0;
    bool converged = false;
    bool aborted = false;
    std::string diagnostic;
    double final_objective = 0.0;
    double final_grad_norm = 0.0;
    double distance_to_previous = 0.0;  // |ell_k - ell_{k-1}|_{H1}
};

struct OptimizeResult {
    Trajectory ell_star;
    std::vector<double> objective_history;
    std::vector<double> grad_norm_history;
    std::vector<int> history_stage;  // stage index of each history entry
    std::vector<SmoothingParams> eps_path;
    std::vector<StageRecord> stages;
    int armijo_violations = 0;
    SmoothingParams final_smoothing;
    double final_tolerance = 0.0;
    StateSolution final_state;
    AdjointSolution final_adjoint;
    Trajectory final_gradient;
};

/**
 * Path following over decreasing smoothing widths. Each stage runs
 * H1(0,T;L2) gradient descent with Barzilai-Borwein initial steps and
 * Armijo backtracking on the smoothed reduced objective, anchored (if
 * enabled) at the previous stage's result.
 */
OptimizeResult optimize(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell0,
                        const PathConfig& path);

}  // namespace fatigue
