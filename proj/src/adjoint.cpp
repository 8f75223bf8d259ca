#include "fatigue/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

void ObjectiveSpec::validate(const Grids& grids) const {
    require_trajectory(q_d, grids, "objective target q_d");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("objective.kappa must be >= 0");
    if (anchor) require_trajectory(*anchor, grids, "objective anchor");
}

ObjectiveTerms objective_terms(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                               const StateSolution& state) {
    const Grids& g = problem.grids;
    objective.validate(g);
    const SparseMatrix k = stiffness_matrix(g.space);
    const double dt = g.time.dt();
    ObjectiveTerms t;
    for (int s = 0; s < g.time.steps; ++s) {
        const ScalarField e = state.q[s] - objective.q_d[s];
        t.tracking += 0.5 * dt * l2_inner(e, e, g.space);
        if (objective.kappa > 0.0) {
            const ScalarField& p = state.phi[s];
            t.phi_term += 0.5 * objective.kappa * dt * (l2_inner(p, p, g.space) + p.dot(k * p));
        }
    }
    t.control = 0.5 * h1_time_inner(ell, ell, g);
    if (objective.anchor) {
        const Trajectory d = ell - *objective.anchor;
        t.anchor = 0.5 * h1_time_inner(d, d, g);
    }
    return t;
}

double reduced_objective(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                         const std::optional<SmoothingParams>& smoothing) {
    const StateSolution s = solve_state_any(problem, ell, smoothing);
    return objective_terms(problem, objective, ell, s).total();
}

double tracking_derivative(const Problem& problem, const ObjectiveSpec& objective, const StateSolution& state,
                           const Trajectory& dq, const Trajectory& dphi) {
    const Grids& g = problem.grids;
    require_trajectory(dq, g, "dq");
    require_trajectory(dphi, g, "dphi");
    const SparseMatrix k = stiffness_matrix(g.space);
    double s = 0.0;
    for (int i = 0; i < g.time.steps; ++i) {
        s += l2_inner(state.q[i] - objective.q_d[i], dq[i], g.space);
        if (objective.kappa > 0.0) {
            const ScalarField& p = state.phi[i];
            s += objective.kappa * (l2_inner(p, dphi[i], g.space) + p.dot(k * dphi[i]));
        }
    }
    return g.time.dt() * s;
}

AdjointSolution solve_adjoint_regularized(const Problem& problem, const ObjectiveSpec& objective,
                                          const StateSolution& state) {
    problem.validate();
    if (!state.regularized) throw ValidationError("adjoint needs a state computed with smoothing");
    const Grids& g = problem.grids;
    objective.validate(g);
    require_trajectory(state.q, g, "state");
    const int m = g.time.steps;
    const int n = g.space.node_count;
    const double dt = g.time.dt();
    const double beta = problem.params.beta;
    const double visc = problem.params.viscosity;
    const double kappa = objective.kappa;
    const double em = state.smoothing.eps_max;
    const double ef = state.smoothing.eps_f;

    EllipticSolver elliptic(problem.params, g.space, problem.tol.elliptic_tol);
    const SparseMatrix k = stiffness_matrix(g.space);
    // kappa (phi + M^{-1} K phi): the phi-derivative of j expressed as a field.
    auto phi_source = [&](int s) -> ScalarField {
        if (kappa == 0.0) return ScalarField::Zero(n);
        const ScalarField& p = state.phi[s];
        return kappa * (p + (k * p).cwiseQuotient(g.space.quadrature_weights));
    };
    const ScalarField zero = ScalarField::Zero(n);

    AdjointSolution a;
    a.xi = Trajectory::zeros(g);
    a.w = Trajectory::zeros(g);
    a.lambda = Trajectory::zeros(g);
    a.mu = Trajectory::zeros(g);
    a.picard_iterations.assign(static_cast<std::size_t>(m + 1), 0);
    a.w[m] = elliptic.solve(zero, phi_source(m));

    HistoryAccumulator history(problem.kernel, g);
    history.push(zero);  // mu_M carries no weight in the pairing
    for (int s = m - 1; s >= 0; --s) {
        const ScalarField hist = history.value();
        const ScalarField src = phi_source(s);
        const ScalarField dj = state.q[s] - objective.q_d[s];
        if (s == 0) {
            // No dynamics at t_0: the control there only acts through phi_0.
            a.w[0] = elliptic.solve(zero, src);
            a.xi[0] = a.xi[1] + dt * (dj + beta * a.w[0] - hist);
            break;
        }
        ScalarField slope(n);
        ScalarField law_slope(n);
        for (int i = 0; i < n; ++i) {
            slope[i] = max_eps_prime(em, state.z[s][i]) / visc;
            law_slope[i] = f_eps_prime(problem.law, ef, state.Hq[s][i]);
        }
        const ScalarField& later = a.xi[s + 1];
        ScalarField x = later;
        ScalarField lam(n);
        ScalarField w(n);
        bool converged = false;
        double delta = std::numeric_limits<double>::infinity();
        int it = 0;
        while (it < problem.tol.max_picard) {
            ++it;
            lam = slope.cwiseProduct(x);
            w = elliptic.solve(lam, src);
            ScalarField next = later + dt * (dj + beta * (w - lam) - hist);
            if (!next.allFinite()) throw SolverError("non-finite adjoint at step " + std::to_string(s), s, delta);
            delta = (next - x).lpNorm<Eigen::Infinity>();
            const double scale = next.lpNorm<Eigen::Infinity>() +
                                 dt * (dj.lpNorm<Eigen::Infinity>() +
                                       beta * (w.lpNorm<Eigen::Infinity>() + lam.lpNorm<Eigen::Infinity>()) +
                                       hist.lpNorm<Eigen::Infinity>());
            x.swap(next);
            if (delta == 0.0 || delta <= problem.tol.picard_tol * scale) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw SolverError("adjoint Picard iteration did not converge at step " + std::to_string(s), s, delta);
        }
        a.picard_iterations[static_cast<std::size_t>(s)] = it;
        a.xi[s] = x;
        a.lambda[s] = slope.cwiseProduct(x);
        a.w[s] = elliptic.solve(a.lambda[s], src);
        a.mu[s] = law_slope.cwiseProduct(a.lambda[s]);
        history.push(a.mu[s]);
    }
    a.max_elliptic_residual = elliptic.max_residual();
    return a;
}

GradientResult reduced_gradient(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                const SmoothingParams& smoothing) {
    GradientResult r;
    r.state = solve_state_regularized(problem, ell, smoothing);
    r.terms = objective_terms(problem, objective, ell, r.state);
    r.objective = r.terms.total();
    r.adjoint = solve_adjoint_regularized(problem, objective, r.state);
    r.gradient = riesz_h1_time(r.adjoint.w, problem.grids);
    r.gradient += ell;
    if (objective.anchor) {
        r.gradient += ell;
        r.gradient -= *objective.anchor;
    }
    return r;
}

std::vector<double> default_gradient_taus() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}; }

FdGradientReport fd_gradient_check(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                   const std::vector<Trajectory>& directions, const std::vector<double>& taus,
                                   const SmoothingParams& smoothing) {
    if (taus.empty()) throw ValidationError("tau schedule is empty");
    const Grids& g = problem.grids;
    const GradientResult base = reduced_gradient(problem, objective, ell, smoothing);
    FdGradientReport rep;
    rep.taus = taus;
    for (const auto& d : directions) {
        require_trajectory(d, g, "gradient check direction");
        FdGradientDirection out;
        out.analytic = h1_time_inner(base.gradient, d, g);
        out.min_relative_error = std::numeric_limits<double>::infinity();
        for (double tau : taus) {
            Trajectory plus = ell;
            plus.axpy(tau, d);
            Trajectory minus = ell;
            minus.axpy(-tau, d);
            const double fd = (reduced_objective(problem, objective, plus, smoothing) -
                               reduced_objective(problem, objective, minus, smoothing)) /
                              (2.0 * tau);
            const double den = std::max(std::abs(out.analytic), std::abs(fd));
            const double rel = den == 0.0 ? 0.0 : std::abs(fd - out.analytic) / den;
            out.central.push_back(fd);
            out.relative_errors.push_back(rel);
            if (rel < out.min_relative_error) {
                out.min_relative_error = rel;
                out.best_tau = tau;
            }
        }
        rep.worst_min_relative_error = std::max(rep.worst_min_relative_error, out.min_relative_error);
        rep.directions.push_back(std::move(out));
    }
    return rep;
}

}  // namespace fatigue
