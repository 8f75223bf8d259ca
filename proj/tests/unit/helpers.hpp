#pragma once

#include <array>
#include <random>

#include "fatigue/discretization.hpp"
#include "fatigue/model.hpp"
#include "fatigue/state_solver.hpp"

namespace fatigue::test {

inline Grids grids_1d(int nodes, int steps, double length = 1.0, double final_time = 1.0) {
    const std::array<double, 1> ext{length};
    const std::array<int, 1> n{nodes};
    return {build_space_grid(1, ext, n), build_time_grid(final_time, steps)};
}

inline Grids grids_2d(int nx, int ny, int steps) {
    const std::array<double, 2> ext{1.0, 1.0};
    const std::array<int, 2> n{nx, ny};
    return {build_space_grid(2, ext, n), build_time_grid(1.0, steps)};
}

inline ScalarField random_field(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    ScalarField f(n);
    for (int i = 0; i < n; ++i) f[i] = u(rng);
    return f;
}

inline Trajectory random_trajectory(const Grids& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Trajectory t = Trajectory::zeros(g);
    for (int k = 0; k <= g.time.steps; ++k) t[k] = random_field(g.space.node_count, rng, lo, hi);
    return t;
}

/// Constant-data problem: no history, plateau law f = c0.
inline Problem constant_problem(const Grids& g, double c0, double viscosity, double alpha = 1.0, double beta = 1.0) {
    Problem p;
    p.grids = g;
    p.params = {alpha, beta, viscosity};
    p.law = {c0, 10.0, 0.0, 0.0};
    p.kernel = HistoryKernel::constant(g, 0.0, ScalarField::Zero(g.space.node_count));
    return p;
}

}  // namespace fatigue::test
