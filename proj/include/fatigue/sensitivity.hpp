#pragma once

#include <optional>
#include <vector>

#include "fatigue/state_solver.hpp"

namespace fatigue {

struct LinearizedSolution {
    Trajectory dq;
    Trajectory dphi;
    std::vector<int> picard_iterations;
    /// Node-time points where z was exactly 0 (middle branch of max').
    int z_zero_hits = 0;
    /// Node-time points where H(q) sat exactly on a kink of f with a nonzero direction.
    int kink_hits = 0;
};

/**
 * Directional derivative of the non-smooth control-to-state map at the
 * stored state, using the exact one-sided rules for max and f.
 */
LinearizedSolution solve_linearized(const Problem& problem, const StateSolution& state, const Trajectory& dell);

/// Derivative of the regularized map at a state computed with the same smoothing.
LinearizedSolution solve_linearized_regularized(const Problem& problem, const StateSolution& state,
                                                const Trajectory& dell);

struct FdDirectionalReport {
    std::vector<double> taus;
    std::vector<double> errors;
    std::vector<double> ratios;   // e_i / e_{i-1}; NaN for the first entry
    std::vector<double> floors;   // estimated roundoff level of e at each tau
    std::vector<bool> at_floor;
    bool monotone = true;
    bool floor_reached = false;
    std::optional<double> slope;  // log-log fit over points above the floor
    double derivative_norm = 0.0;
    int kink_hits = 0;
    int z_zero_hits = 0;
};

/**
 * e(tau) = |(q(ell + tau dell) - q(ell)) / tau - dq|_{H1(0,T;L2)} along a
 * strictly decreasing tau schedule. Without smoothing the non-smooth map and
 * its directional derivative are used.
 */
FdDirectionalReport fd_directional_check(const Problem& problem, const Trajectory& ell, const Trajectory& dell,
                                         const std::vector<double>& taus,
                                         const std::optional<SmoothingParams>& smoothing = std::nullopt);

std::vector<double> default_tau_schedule();

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fatigue
