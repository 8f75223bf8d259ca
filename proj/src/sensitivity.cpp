#include "fatigue/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

template <typename MaxRule, typename LawRule>
LinearizedSolution linearize(const Problem& problem, const StateSolution& state, const Trajectory& dell,
                             MaxRule&& max_rule, LawRule&& law_rule) {
    problem.validate();
    const Grids& g = problem.grids;
    require_trajectory(dell, g, "direction");
    require_trajectory(state.q, g, "base state");
    const int m = g.time.steps;
    const int n = g.space.node_count;
    const double beta = problem.params.beta;
    const double c = g.time.dt() / problem.params.viscosity;

    EllipticSolver elliptic(problem.params, g.space, problem.tol.elliptic_tol);
    LinearizedSolution out;
    out.dq = Trajectory::zeros(g);
    out.dphi = Trajectory::zeros(g);
    out.picard_iterations.assign(static_cast<std::size_t>(m + 1), 0);
    out.dphi[0] = elliptic.solve(out.dq[0], dell[0]);

    HistoryAccumulator history(problem.kernel, g);
    for (int k = 1; k <= m; ++k) {
        history.push(out.dq[k - 1]);
        const ScalarField dh = history.value();
        ScalarField df(n);
        for (int i = 0; i < n; ++i) df[i] = law_rule(k, i, dh[i], out);

        const ScalarField& prev = out.dq[k - 1];
        ScalarField y = prev;
        ScalarField next(n);
        bool converged = false;
        double delta = std::numeric_limits<double>::infinity();
        int it = 0;
        while (it < problem.tol.max_picard) {
            ++it;
            const ScalarField dphi = elliptic.solve(y, dell[k]);
            const ScalarField rho = -beta * (y - dphi) - df;
            for (int i = 0; i < n; ++i) next[i] = prev[i] + c * max_rule(k, i, rho[i]);
            if (!next.allFinite()) {
                throw SolverError("non-finite linearized damage at step " + std::to_string(k), k, delta);
            }
            delta = (next - y).lpNorm<Eigen::Infinity>();
            const double scale = next.lpNorm<Eigen::Infinity>() +
                                 c * (beta * (y.lpNorm<Eigen::Infinity>() + dphi.lpNorm<Eigen::Infinity>()) +
                                      df.lpNorm<Eigen::Infinity>());
            y.swap(next);
            if (delta == 0.0 || delta <= problem.tol.picard_tol * scale) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw SolverError("linearized Picard iteration did not converge at step " + std::to_string(k), k,
                              delta);
        }
        out.picard_iterations[static_cast<std::size_t>(k)] = it;
        out.dq[k] = y;
        out.dphi[k] = elliptic.solve(out.dq[k], dell[k]);
    }
    for (int k = 1; k <= m; ++k) {
        for (int i = 0; i < n; ++i) {
            if (state.z[k][i] == 0.0) ++out.z_zero_hits;
        }
    }
    return out;
}

}  // namespace

LinearizedSolution solve_linearized(const Problem& problem, const StateSolution& state, const Trajectory& dell) {
    const FatigueLaw& law = problem.law;
    const auto kinks = law.kinks();
    return linearize(
        problem, state, dell,
        [&state](int k, int i, double rho) { return max_dir(state.z[k][i], rho); },
        [&state, &law, &kinks](int k, int i, double h, LinearizedSolution& out) {
            const double v = state.Hq[k][i];
            if (h != 0.0) {
                for (double p : kinks) {
                    if (v == p) ++out.kink_hits;
                }
            }
            return f_dir(law, v, h);
        });
}

LinearizedSolution solve_linearized_regularized(const Problem& problem, const StateSolution& state,
                                                const Trajectory& dell) {
    if (!state.regularized) {
        throw ValidationError("solve_linearized_regularized needs a state computed with smoothing");
    }
    const FatigueLaw& law = problem.law;
    const double em = state.smoothing.eps_max;
    const double ef = state.smoothing.eps_f;
    return linearize(
        problem, state, dell,
        [&state, em](int k, int i, double rho) { return max_eps_prime(em, state.z[k][i]) * rho; },
        [&state, &law, ef](int k, int i, double h, LinearizedSolution&) {
            return f_eps_prime(law, ef, state.Hq[k][i]) * h;
        });
}

std::vector<double> default_tau_schedule() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}; }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope needs >= 2 matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FdDirectionalReport fd_directional_check(const Problem& problem, const Trajectory& ell, const Trajectory& dell,
                                         const std::vector<double>& taus,
                                         const std::optional<SmoothingParams>& smoothing) {
    if (taus.empty()) throw ValidationError("tau schedule is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0) || (i > 0 && !(taus[i] < taus[i - 1]))) {
            throw ValidationError("tau schedule must be positive and strictly decreasing");
        }
    }
    const Grids& g = problem.grids;
    const StateSolution base = solve_state_any(problem, ell, smoothing);
    const LinearizedSolution lin = smoothing ? solve_linearized_regularized(problem, base, dell)
                                             : solve_linearized(problem, base, dell);

    FdDirectionalReport r;
    r.taus = taus;
    r.derivative_norm = h1_time_norm(lin.dq, g);
    r.kink_hits = lin.kink_hits;
    r.z_zero_hits = lin.z_zero_hits;
    // Each solve carries errors of order picard_tol relative to the state scale in
    // every step; divided by tau this bounds what the quotient can resolve.
    const double state_scale = std::max(1.0, h1_time_norm(base.q, g));
    const double noise = problem.tol.picard_tol * (g.time.steps + 10) * state_scale;

    for (double tau : taus) {
        Trajectory shifted = ell;
        shifted.axpy(tau, dell);
        const StateSolution s = solve_state_any(problem, shifted, smoothing);
        Trajectory quotient = s.q - base.q;
        quotient *= 1.0 / tau;
        r.errors.push_back(h1_time_norm(quotient - lin.dq, g));
        r.floors.push_back(noise / tau);
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const bool floor = r.errors[i] <= r.floors[i];
        r.at_floor.push_back(floor);
        r.floor_reached = r.floor_reached || floor;
        r.ratios.push_back(i == 0 || r.errors[i - 1] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                                             : r.errors[i] / r.errors[i - 1]);
        if (i > 0 && !floor && r.errors[i] > r.errors[i - 1] * (1.0 + 1e-9)) r.monotone = false;
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (r.at_floor[i] || r.errors[i] <= 0.0) break;
        xs.push_back(taus[i]);
        ys.push_back(r.errors[i]);
    }
    if (xs.size() >= 2) r.slope = loglog_slope(xs, ys);
    return r;
}

}  // namespace fatigue
