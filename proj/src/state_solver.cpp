#include "fatigue/state_solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

void Tolerances::validate() const {
    if (!(picard_tol > 0.0)) throw ValidationError("tolerances.picard_tol must be > 0");
    if (max_picard < 1) throw ValidationError("tolerances.max_picard must be >= 1");
    if (!(elliptic_tol > 0.0)) throw ValidationError("tolerances.elliptic_tol must be > 0");
    if (!(tol_z > 0.0)) throw ValidationError("tolerances.tol_z must be > 0");
    if (!(tol_f > 0.0)) throw ValidationError("tolerances.tol_f must be > 0");
}

void Problem::validate() const {
    params.validate();
    law.validate();
    kernel.validate(grids);
    tol.validate();
}

EllipticSolver::EllipticSolver(const ModelParams& params, const SpaceGrid& grid, double tolerance)
    : weights_(grid.quadrature_weights), alpha_(params.alpha), beta_(params.beta), tolerance_(tolerance) {
    params.validate();
    a_ = params.alpha * stiffness_matrix(grid);
    for (int i = 0; i < grid.node_count; ++i) a_.coeffRef(i, i) += params.beta * weights_[i];
    a_.makeCompressed();
    factor_.compute(a_);
    if (factor_.info() != Eigen::Success) {
        throw SolverError("elliptic operator factorization failed", -1, 0.0);
    }
}

ScalarField EllipticSolver::solve_raw(const ScalarField& b) const {
    if (b.size() != weights_.size()) throw ValidationError("elliptic solve: right-hand side size mismatch");
    ScalarField x = factor_.solve(b);
    const double bn = b.norm();
    const double res = bn > 0.0 ? (a_ * x - b).norm() / bn : (a_ * x).norm();
    if (!(res <= tolerance_)) {
        throw SolverError("elliptic solve residual above tolerance", -1, res);
    }
    max_residual_ = std::max(max_residual_, res);
    return x;
}

ScalarField EllipticSolver::solve(const ScalarField& q, const ScalarField& ell) const {
    if (q.size() != weights_.size() || ell.size() != weights_.size()) {
        throw ValidationError("elliptic solve: field size mismatch");
    }
    return solve_raw(weights_.cwiseProduct(beta_ * q + ell));
}

double EllipticSolver::relative_residual(const ScalarField& phi, const ScalarField& q,
                                         const ScalarField& ell) const {
    const ScalarField b = weights_.cwiseProduct(beta_ * q + ell);
    const double bn = b.norm();
    const double r = (a_ * phi - b).norm();
    return bn > 0.0 ? r / bn : r;
}

ScalarField solve_elliptic(const ModelParams& params, const SpaceGrid& grid, const ScalarField& q,
                           const ScalarField& ell) {
    require_field(q, grid, "solve_elliptic");
    require_field(ell, grid, "solve_elliptic");
    return EllipticSolver(params, grid).solve(q, ell);
}

double contraction_estimate(const Problem& problem) {
    const double dt = problem.grids.time.dt();
    const double eps = problem.params.viscosity;
    return dt * (problem.params.beta / eps + problem.law.slope_m * problem.kernel.sup_abs() * dt / eps);
}

namespace {

template <typename MaxFn, typename LawFn>
StateSolution integrate(const Problem& problem, const Trajectory& ell, MaxFn&& max_fn, LawFn&& law_fn) {
    problem.validate();
    const Grids& g = problem.grids;
    require_trajectory(ell, g, "control");
    const int m = g.time.steps;
    const int n = g.space.node_count;
    const double beta = problem.params.beta;
    const double c = g.time.dt() / problem.params.viscosity;

    EllipticSolver elliptic(problem.params, g.space, problem.tol.elliptic_tol);
    StateSolution s;
    s.q = Trajectory::zeros(g);
    s.phi = Trajectory::zeros(g);
    s.z = Trajectory::zeros(g);
    s.Hq = Trajectory::zeros(g);
    s.picard_iterations.assign(static_cast<std::size_t>(m + 1), 0);
    s.contraction_estimate = contraction_estimate(problem);

    auto law_at = [&](const ScalarField& h) {
        ScalarField f(n);
        for (int i = 0; i < n; ++i) f[i] = law_fn(h[i]);
        return f;
    };

    HistoryAccumulator history(problem.kernel, g);
    s.Hq[0] = problem.kernel.q0;
    s.phi[0] = elliptic.solve(s.q[0], ell[0]);
    s.z[0] = -beta * (s.q[0] - s.phi[0]) - law_at(s.Hq[0]);

    for (int k = 1; k <= m; ++k) {
        history.push(s.q[k - 1]);
        s.Hq[k] = history.value() + problem.kernel.q0;
        const ScalarField fk = law_at(s.Hq[k]);
        const ScalarField& prev = s.q[k - 1];

        ScalarField y = prev;
        ScalarField next(n);
        bool converged = false;
        double delta = std::numeric_limits<double>::infinity();
        int it = 0;
        while (it < problem.tol.max_picard) {
            ++it;
            const ScalarField phi = elliptic.solve(y, ell[k]);
            const ScalarField arg = -beta * (y - phi) - fk;
            for (int i = 0; i < n; ++i) next[i] = prev[i] + c * max_fn(arg[i]);
            if (!next.allFinite()) {
                throw SolverError("non-finite damage at step " + std::to_string(k), k, delta);
            }
            delta = (next - y).lpNorm<Eigen::Infinity>();
            // Scale of the terms entering the update; keeps the test above roundoff.
            const double scale = next.lpNorm<Eigen::Infinity>() +
                                 c * (beta * (y.lpNorm<Eigen::Infinity>() + phi.lpNorm<Eigen::Infinity>()) +
                                      fk.lpNorm<Eigen::Infinity>());
            y.swap(next);
            if (delta == 0.0 || delta <= problem.tol.picard_tol * scale) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw SolverError("Picard iteration did not converge at step " + std::to_string(k) +
                                  " (contraction estimate " + std::to_string(s.contraction_estimate) +
                                  "; reduce dt)",
                              k, delta);
        }
        s.picard_iterations[static_cast<std::size_t>(k)] = it;
        s.q[k] = y;
        s.phi[k] = elliptic.solve(s.q[k], ell[k]);
        s.z[k] = -beta * (s.q[k] - s.phi[k]) - fk;
    }
    s.max_elliptic_residual = elliptic.max_residual();
    return s;
}

}  // namespace

StateSolution solve_state(const Problem& problem, const Trajectory& ell) {
    const FatigueLaw& law = problem.law;
    return integrate(problem, ell, [](double x) { return max_plus(x); },
                     [&law](double v) { return f_eval(law, v); });
}

StateSolution solve_state_regularized(const Problem& problem, const Trajectory& ell,
                                      const SmoothingParams& smoothing) {
    smoothing.validate();
    const FatigueLaw& law = problem.law;
    const double em = smoothing.eps_max;
    const double ef = smoothing.eps_f;
    f_eps_eval(law, ef, law.n_f);  // rejects overlapping blends up front
    StateSolution s = integrate(problem, ell, [em](double x) { return max_eps(em, x); },
                                [&law, ef](double v) { return f_eps_eval(law, ef, v); });
    s.regularized = true;
    s.smoothing = smoothing;
    return s;
}

StateSolution solve_state_any(const Problem& problem, const Trajectory& ell,
                              const std::optional<SmoothingParams>& smoothing) {
    return smoothing ? solve_state_regularized(problem, ell, *smoothing) : solve_state(problem, ell);
}

LipschitzRatio lipschitz_probe(const Problem& problem, const Trajectory& ell1, const Trajectory& ell2) {
    const Grids& g = problem.grids;
    const double den = l2_time_norm(ell1 - ell2, g);
    if (den == 0.0) return {std::numeric_limits<double>::infinity(), true};
    const StateSolution s1 = solve_state(problem, ell1);
    const StateSolution s2 = solve_state(problem, ell2);
    return {h1_time_norm(s1.q - s2.q, g) / den, false};
}

}  // namespace fatigue
