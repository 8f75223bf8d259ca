#pragma once

#include <optional>
#include <vector>

#include "fatigue/sensitivity.hpp"
#include "fatigue/state_solver.hpp"

namespace fatigue {

/**
 * J = 1/2 |q - q_d|^2_{L2(L2)} + kappa/2 |phi|^2_{L2(H1)} + 1/2 |ell|^2_{H1(L2)}
 * (+ 1/2 |ell - anchor|^2_{H1(L2)} when an anchor is set).
 */
struct ObjectiveSpec {
    Trajectory q_d;
    double kappa = 0.0;
    std::optional<Trajectory> anchor;

    void validate(const Grids& grids) const;
};

struct ObjectiveTerms {
    double tracking = 0.0;
    double phi_term = 0.0;
    double control = 0.0;
    double anchor = 0.0;

    [[nodiscard]] double total() const { return tracking + phi_term + control + anchor; }
};

/// Objective terms for a given state and control.
ObjectiveTerms objective_terms(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                               const StateSolution& state);

double reduced_objective(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                         const std::optional<SmoothingParams>& smoothing = std::nullopt);

/// j'(q, phi)(dq, dphi) for the tracking part of the objective.
double tracking_derivative(const Problem& problem, const ObjectiveSpec& objective, const StateSolution& state,
                           const Trajectory& dq, const Trajectory& dphi);

struct AdjointSolution {
    Trajectory xi;
    Trajectory w;
    Trajectory lambda;
    Trajectory mu;
    std::vector<int> picard_iterations;
    double max_elliptic_residual = 0.0;
};

/**
 * Discrete adjoint of the regularized linearized scheme: backward implicit
 * steps with xi_M = 0, so that
 * sum_{k<M} dt (w_k, dell_k) = j'(S(ell)) S'(ell) dell exactly.
 */
AdjointSolution solve_adjoint_regularized(const Problem& problem, const ObjectiveSpec& objective,
                                          const StateSolution& state);

struct GradientResult {
    Trajectory gradient;  // H1(0,T;L2) Riesz representative
    double objective = 0.0;
    ObjectiveTerms terms;
    StateSolution state;
    AdjointSolution adjoint;
};

GradientResult reduced_gradient(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                const SmoothingParams& smoothing);

struct FdGradientDirection {
    double analytic = 0.0;
    std::vector<double> central;
    std::vector<double> relative_errors;
    double min_relative_error = 0.0;
    double best_tau = 0.0;
};

struct FdGradientReport {
    std::vector<double> taus;
    std::vector<FdGradientDirection> directions;
    double worst_min_relative_error = 0.0;
};

FdGradientReport fd_gradient_check(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                   const std::vector<Trajectory>& directions, const std::vector<double>& taus,
                                   const SmoothingParams& smoothing);

std::vector<double> default_gradient_taus();

}  // namespace fatigue
