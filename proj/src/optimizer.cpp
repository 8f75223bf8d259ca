#include "fatigue/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "fatigue/errors.hpp"

namespace fatigue {

void PathConfig::validate() const {
    if (!(eps0 > 0.0)) throw ValidationError("path.eps0 must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("path.gamma must lie in (0, 1)");
    if (stages < 1) throw ValidationError("path.stages must be >= 1");
    if (!(tol0 > 0.0)) throw ValidationError("path.tol0 must be > 0");
    if (!(eps_f_ratio > 0.0)) throw ValidationError("path.eps_f_ratio must be > 0");
    if (max_iterations < 1) throw ValidationError("path.max_iterations must be >= 1");
    if (!(armijo > 0.0 && armijo < 1.0)) throw ValidationError("path.armijo must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ValidationError("path.backtrack must lie in (0, 1)");
    if (!(min_step > 0.0)) throw ValidationError("path.min_step must be > 0");
}

SmoothingParams PathConfig::smoothing(int stage) const {
    const double e = eps0 * std::pow(gamma, stage);
    return {e, eps_f_ratio * e};
}

double PathConfig::tolerance(int stage) const { return tol0 * std::pow(gamma, stage); }

OptimizeResult optimize(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell0,
                        const PathConfig& path) {
    path.validate();
    problem.validate();
    const Grids& g = problem.grids;
    objective.validate(g);
    require_trajectory(ell0, g, "initial control");

    OptimizeResult res;
    Trajectory ell = ell0;
    ObjectiveSpec obj = objective;
    obj.anchor.reset();

    for (int stage = 0; stage < path.stages; ++stage) {
        const SmoothingParams sm = path.smoothing(stage);
        const double tol = path.tolerance(stage);
        StageRecord rec;
        rec.smoothing = sm;
        rec.tolerance = tol;
        res.eps_path.push_back(sm);
        const Trajectory stage_start = ell;

        GradientResult cur = reduced_gradient(problem, obj, ell, sm);
        double gnorm = h1_time_norm(cur.gradient, g);
        res.objective_history.push_back(cur.objective);
        res.grad_norm_history.push_back(gnorm);
        res.history_stage.push_back(stage);

        Trajectory prev_ell;
        Trajectory prev_grad;
        bool have_prev = false;
        int it = 0;
        while (gnorm > tol && it < path.max_iterations) {
            double step = 1.0;
            if (have_prev) {
                const Trajectory s = ell - prev_ell;
                const Trajectory y = cur.gradient - prev_grad;
                const double sy = h1_time_inner(s, y, g);
                const double ss = h1_time_inner(s, s, g);
                if (sy > 0.0 && std::isfinite(ss / sy)) step = ss / sy;
            }
            const double decrease = gnorm * gnorm;
            Trajectory trial;
            double trial_value = 0.0;
            bool accepted = false;
            while (step >= path.min_step) {
                trial = ell;
                trial.axpy(-step, cur.gradient);
                trial_value = reduced_objective(problem, obj, trial, sm);
                if (!std::isfinite(trial_value)) {
                    throw SolverError("non-finite objective in line search", it, trial_value);
                }
                if (trial_value <= cur.objective - path.armijo * step * decrease) {
                    accepted = true;
                    break;
                }
                step *= path.backtrack;
            }
            if (!accepted) {
                std::ostringstream msg;
                msg << "line search step underflow at iteration " << it << " (|g| = " << gnorm
                    << ", tolerance " << tol << ")";
                rec.aborted = true;
                rec.diagnostic = msg.str();
                break;
            }
            if (trial_value > cur.objective) ++res.armijo_violations;
            prev_ell = ell;
            prev_grad = cur.gradient;
            have_prev = true;
            ell = trial;
            cur = reduced_gradient(problem, obj, ell, sm);
            gnorm = h1_time_norm(cur.gradient, g);
            ++it;
            res.objective_history.push_back(cur.objective);
            res.grad_norm_history.push_back(gnorm);
            res.history_stage.push_back(stage);
        }
        rec.iterations = it;
        rec.converged = gnorm <= tol;
        if (!rec.converged && !rec.aborted) {
            rec.diagnostic = "iteration budget exhausted";
        }
        rec.final_objective = cur.objective;
        rec.final_grad_norm = gnorm;
        rec.distance_to_previous = h1_time_norm(ell - stage_start, g);
        res.stages.push_back(rec);

        res.final_state = std::move(cur.state);
        res.final_adjoint = std::move(cur.adjoint);
        res.final_gradient = std::move(cur.gradient);
        res.final_smoothing = sm;
        res.final_tolerance = tol;
        if (path.anchor_previous_stage) obj.anchor = ell;
    }
    res.ell_star = ell;
    return res;
}

}  // namespace fatigue
