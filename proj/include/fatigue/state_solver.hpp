#pragma once

#include <optional>
#include <vector>

#include "fatigue/discretization.hpp"
#include "fatigue/model.hpp"

namespace fatigue {

struct Tolerances {
    double picard_tol = 1e-12;
    int max_picard = 200;
    double elliptic_tol = 1e-10;
    double tol_z = 1e-6;
    double tol_f = 1e-6;

    void validate() const;
};

/// Everything that defines the state system on fixed grids.
struct Problem {
    Grids grids;
    ModelParams params;
    FatigueLaw law;
    HistoryKernel kernel;
    Tolerances tol;

    void validate() const;
};

/**
 * Factorized (alpha K + beta M) for repeated solves of
 * -alpha Lap phi + beta phi = rhs with Neumann data.
 */
class EllipticSolver {
public:
    EllipticSolver(const ModelParams& params, const SpaceGrid& grid, double tolerance = 1e-10);

    /// phi with (alpha K + beta M) phi = M (beta q + ell).
    [[nodiscard]] ScalarField solve(const ScalarField& q, const ScalarField& ell) const;
    /// x with (alpha K + beta M) x = b.
    [[nodiscard]] ScalarField solve_raw(const ScalarField& b) const;
    /// Relative residual of a candidate phi for given (q, ell).
    [[nodiscard]] double relative_residual(const ScalarField& phi, const ScalarField& q,
                                           const ScalarField& ell) const;

    [[nodiscard]] const SparseMatrix& matrix() const { return a_; }
    [[nodiscard]] double max_residual() const { return max_residual_; }

private:
    ScalarField weights_;
    double alpha_;
    double beta_;
    double tolerance_;
    SparseMatrix a_;
    Eigen::SimplicialLDLT<SparseMatrix> factor_;
    mutable double max_residual_ = 0.0;
};

ScalarField solve_elliptic(const ModelParams& params, const SpaceGrid& grid, const ScalarField& q,
                           const ScalarField& ell);

struct StateSolution {
    Trajectory q;
    Trajectory phi;
    Trajectory z;
    Trajectory Hq;
    bool regularized = false;
    SmoothingParams smoothing;
    std::vector<int> picard_iterations;  // per step, slot 0 unused
    double contraction_estimate = 0.0;
    double max_elliptic_residual = 0.0;
};

StateSolution solve_state(const Problem& problem, const Trajectory& ell);
StateSolution solve_state_regularized(const Problem& problem, const Trajectory& ell,
                                      const SmoothingParams& smoothing);
/// Dispatches on the presence of smoothing.
StateSolution solve_state_any(const Problem& problem, const Trajectory& ell,
                              const std::optional<SmoothingParams>& smoothing);

/// dt (beta / eps + L_f L_H dt / eps): the per-step Picard contraction bound.
double contraction_estimate(const Problem& problem);

struct LipschitzRatio {
    double ratio = 0.0;
    bool degenerate = false;
};

/// |q1 - q2|_{H1(0,T;L2)} / |ell1 - ell2|_{L2(0,T;L2)}.
LipschitzRatio lipschitz_probe(const Problem& problem, const Trajectory& ell1, const Trajectory& ell2);

}  // namespace fatigue
