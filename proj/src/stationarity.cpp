#include "fatigue/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fatigue/errors.hpp"
#include "fatigue/sensitivity.hpp"

namespace fatigue {

namespace {

constexpr std::size_t kMaxListedNodes = 50;

// Accumulates pointwise violations for one condition.
class ViolationTally {
public:
    ViolationTally(std::string name, double threshold) : threshold_(threshold) { report_.name = std::move(name); }

    void add(int k, int i, double violation) {
        report_.max_violation = std::max(report_.max_violation, violation);
        if (violation > threshold_) {
            ++report_.violating;
            if (report_.violating_nodes.size() < kMaxListedNodes) report_.violating_nodes.emplace_back(k, i);
        }
    }

    ConditionReport finish(double scale, double tolerance, bool graded) {
        report_.residual = report_.max_violation;
        report_.relative = scale > 0.0 ? report_.max_violation / scale : report_.max_violation;
        report_.tolerance = tolerance;
        report_.graded = graded;
        report_.pass = report_.violating == 0;
        return report_;
    }

private:
    double threshold_;
    ConditionReport report_;
};

double l2l2(const Trajectory& u, const Grids& g) { return l2_time_norm(u, g); }

}  // namespace

int ActiveSets::count(ZClass c) const {
    return static_cast<int>(std::count(z.begin(), z.end(), c));
}

int ActiveSets::kink_count() const {
    return static_cast<int>(std::count_if(kink.begin(), kink.end(), [](std::int8_t v) { return v >= 0; }));
}

ActiveSets classify_active_sets(const StateSolution& state, const FatigueLaw& law, double tol_z, double tol_f) {
    if (!(tol_z > 0.0) || !(tol_f > 0.0)) throw ValidationError("active-set tolerances must be > 0");
    ActiveSets s;
    s.steps = state.z.steps();
    s.nodes = state.z.node_count();
    s.tol_z = tol_z;
    s.tol_f = tol_f;
    const std::size_t total = static_cast<std::size_t>(s.steps + 1) * static_cast<std::size_t>(s.nodes);
    s.z.assign(total, ZClass::negative);
    s.kink.assign(total, -1);
    const auto kinks = law.kinks();
    for (int k = 0; k <= s.steps; ++k) {
        for (int i = 0; i < s.nodes; ++i) {
            const double z = state.z[k][i];
            const std::size_t idx = s.index(k, i);
            if (std::abs(z) <= tol_z) {
                s.z[idx] = ZClass::zero;
            } else if (z > tol_z) {
                s.z[idx] = ZClass::positive;
            }
            for (std::size_t p = 0; p < kinks.size(); ++p) {
                if (std::abs(state.Hq[k][i] - kinks[p]) <= tol_f) s.kink[idx] = static_cast<std::int8_t>(p);
            }
        }
    }
    return s;
}

MultiplierBundle extract_multipliers(const AdjointSolution& adjoint) {
    MultiplierBundle b;
    b.lambda = adjoint.lambda;
    b.mu = adjoint.mu;
    b.Gplus = Trajectory(adjoint.lambda.steps(), adjoint.lambda.node_count());
    b.Gminus = b.Gplus;
    return b;
}

void compute_G(const Problem& problem, const ActiveSets& sets, MultiplierBundle& bundle) {
    const Grids& g = problem.grids;
    require_trajectory(bundle.lambda, g, "lambda");
    require_trajectory(bundle.mu, g, "mu");
    const int m = g.time.steps;
    const int n = g.space.node_count;
    const auto kinks = problem.law.kinks();
    Trajectory eta_plus = Trajectory::zeros(g);
    Trajectory eta_minus = Trajectory::zeros(g);
    for (int k = 0; k <= m; ++k) {
        for (int i = 0; i < n; ++i) {
            const int p = sets.kink[sets.index(k, i)];
            if (p < 0) continue;
            const auto [right, left] = f_onesided(problem.law, kinks[static_cast<std::size_t>(p)]);
            eta_plus[k][i] = -bundle.lambda[k][i] * right + bundle.mu[k][i];
            eta_minus[k][i] = -bundle.lambda[k][i] * left + bundle.mu[k][i];
        }
    }
    const Trajectory hp = history_adjoint_apply(problem.kernel, eta_plus, g);
    const Trajectory hm = history_adjoint_apply(problem.kernel, eta_minus, g);
    const double dt = g.time.dt();
    bundle.Gplus = Trajectory::zeros(g);
    bundle.Gminus = Trajectory::zeros(g);
    for (int k = m - 1; k >= 0; --k) {
        bundle.Gplus[k] = bundle.Gplus[k + 1] + dt * hp[k];
        bundle.Gminus[k] = bundle.Gminus[k + 1] + dt * hm[k];
    }
}

const char* mode_name(StationarityMode mode) {
    switch (mode) {
        case StationarityMode::limit:
            return "limit";
        case StationarityMode::improved:
            return "improved";
        case StationarityMode::strong:
            return "strong";
    }
    return "limit";
}

StationarityMode parse_mode(const std::string& name) {
    if (name == "limit") return StationarityMode::limit;
    if (name == "improved") return StationarityMode::improved;
    if (name == "strong") return StationarityMode::strong;
    throw ValidationError("unknown stationarity mode '" + name + "' (limit, improved, strong)");
}

const ConditionReport& StationarityReport::condition(const std::string& name) const {
    for (const auto& c : conditions) {
        if (c.name == name) return c;
    }
    throw ValidationError("report has no condition '" + name + "'");
}

bool StationarityReport::has_condition(const std::string& name) const {
    return std::any_of(conditions.begin(), conditions.end(), [&](const ConditionReport& c) { return c.name == name; });
}

StationarityReport check_system(const Problem& problem, const ObjectiveSpec& objective, const Candidate& c,
                                const ActiveSets& sets, StationarityMode mode, double tolerance) {
    if (!(tolerance > 0.0)) throw ValidationError("stationarity tolerance must be > 0");
    const Grids& g = problem.grids;
    objective.validate(g);
    require_trajectory(c.ell, g, "candidate control");
    require_trajectory(c.state.q, g, "candidate state");
    require_trajectory(c.xi, g, "candidate xi");
    require_trajectory(c.w, g, "candidate w");
    require_trajectory(c.bundle.lambda, g, "candidate lambda");
    require_trajectory(c.bundle.mu, g, "candidate mu");
    require_trajectory(c.bundle.Gplus, g, "candidate G+");
    require_trajectory(c.bundle.Gminus, g, "candidate G-");
    if (sets.steps != g.time.steps || sets.nodes != g.space.node_count) {
        throw ValidationError("active sets do not match the grids");
    }
    const int m = g.time.steps;
    const int n = g.space.node_count;
    const double dt = g.time.dt();
    const double beta = problem.params.beta;
    const double visc = problem.params.viscosity;
    const auto& lam = c.bundle.lambda;
    const auto& mu = c.bundle.mu;

    StationarityReport rep;
    rep.mode = mode;
    rep.tolerance = tolerance;
    rep.tol_z = sets.tol_z;
    rep.tol_f = sets.tol_f;
    rep.z_positive = sets.count(ZClass::positive);
    rep.z_zero = sets.count(ZClass::zero);
    rep.z_negative = sets.count(ZClass::negative);
    rep.kink_points = sets.kink_count();
    rep.strong_stationarity_applicable = rep.kink_points == 0;

    // Adjoint ODE for xi.
    {
        const Trajectory hist = history_adjoint_apply(problem.kernel, mu, g);
        Trajectory r = Trajectory::zeros(g);
        Trajectory xdot = Trajectory::zeros(g);
        Trajectory dj = Trajectory::zeros(g);
        Trajectory coupling = Trajectory::zeros(g);
        for (int k = 0; k < m; ++k) {
            xdot[k] = (c.xi[k] - c.xi[k + 1]) / dt;
            dj[k] = c.state.q[k] - objective.q_d[k];
            coupling[k] = beta * (c.w[k] - lam[k]) - hist[k];
            r[k] = xdot[k] - dj[k] - coupling[k];
        }
        ConditionReport cr;
        cr.name = condition::adjoint_q;
        cr.residual = l2l2(r, g) + l2_norm(c.xi[m], g.space);
        const double scale = l2l2(xdot, g) + l2l2(dj, g) + l2l2(coupling, g);
        cr.relative = scale > 0.0 ? cr.residual / scale : cr.residual;
        cr.tolerance = tolerance;
        cr.max_violation = cr.residual;
        cr.pass = cr.relative <= tolerance;
        rep.conditions.push_back(cr);
    }

    // Elliptic equation for w.
    {
        EllipticSolver elliptic(problem.params, g.space, problem.tol.elliptic_tol);
        const SparseMatrix k = stiffness_matrix(g.space);
        double diff2 = 0.0;
        double ref2 = 0.0;
        for (int s = 0; s < m; ++s) {
            ScalarField src = ScalarField::Zero(n);
            if (objective.kappa > 0.0) {
                const ScalarField& p = c.state.phi[s];
                src = objective.kappa * (p + (k * p).cwiseQuotient(g.space.quadrature_weights));
            }
            const ScalarField wt = elliptic.solve(lam[s], src);
            const ScalarField d = c.w[s] - wt;
            diff2 += dt * (l2_inner(d, d, g.space) + d.dot(k * d));
            ref2 += dt * (l2_inner(wt, wt, g.space) + wt.dot(k * wt));
        }
        ConditionReport cr;
        cr.name = condition::adjoint_phi;
        cr.residual = std::sqrt(diff2);
        cr.relative = ref2 > 0.0 ? cr.residual / std::sqrt(ref2) : cr.residual;
        cr.tolerance = tolerance;
        cr.max_violation = cr.residual;
        cr.pass = cr.relative <= tolerance;
        rep.conditions.push_back(cr);
    }

    const double xi_scale = c.xi.max_abs() / visc;
    // Inactive-set identities for lambda and mu.
    {
        const double scale = xi_scale + mu.max_abs();
        ViolationTally tally(condition::kkt_inactive, tolerance * scale);
        for (int k = 1; k <= m; ++k) {
            for (int i = 0; i < n; ++i) {
                double v = 0.0;
                switch (sets.z_at(k, i)) {
                    case ZClass::positive:
                        v = std::abs(lam[k][i] - c.xi[k][i] / visc);
                        break;
                    case ZClass::negative:
                        v = std::abs(lam[k][i]);
                        break;
                    case ZClass::zero:
                        break;
                }
                if (!sets.kink_at(k, i)) {
                    const double slope = f_onesided(problem.law, c.state.Hq[k][i]).first;
                    v = std::max(v, std::abs(mu[k][i] - slope * lam[k][i]));
                }
                tally.add(k, i, v);
            }
        }
        ConditionReport cr = tally.finish(scale, tolerance, true);
        cr.pass = cr.relative <= tolerance;
        rep.conditions.push_back(cr);
    }

    // Gradient relation ell + R(w) = 0 in H1(0,T;L2).
    {
        const Trajectory rw = riesz_h1_time(c.w, g);
        ConditionReport cr;
        cr.name = condition::gradient;
        cr.residual = h1_time_norm(c.ell + rw, g);
        const double scale = h1_time_norm(c.ell, g) + h1_time_norm(rw, g);
        cr.relative = scale > 0.0 ? cr.residual / scale : cr.residual;
        cr.tolerance = tolerance;
        cr.max_violation = cr.residual;
        cr.pass = cr.relative <= tolerance;
        rep.conditions.push_back(cr);
    }

    const double sign_scale = std::max(1.0, xi_scale);
    const auto kinks = problem.law.kinks();
    if (mode == StationarityMode::improved) {
        ViolationTally tally(condition::sign_weak, tolerance * sign_scale);
        for (int k = 1; k <= m; ++k) {
            for (int i = 0; i < n; ++i) {
                const ZClass zc = sets.z_at(k, i);
                if (zc == ZClass::zero) {
                    const double upper = (c.xi[k][i] + c.bundle.Gplus[k][i]) / visc;
                    tally.add(k, i, std::max(0.0, -lam[k][i]) + std::max(0.0, lam[k][i] - upper));
                } else if (zc == ZClass::positive) {
                    tally.add(k, i, std::max(0.0, c.bundle.Gminus[k][i]) + std::max(0.0, -c.bundle.Gplus[k][i]));
                }
            }
        }
        rep.conditions.push_back(tally.finish(sign_scale, tolerance, true));
    }
    if (mode == StationarityMode::strong) {
        ViolationTally tally(condition::sign_strong, tolerance * sign_scale);
        for (int k = 1; k <= m; ++k) {
            for (int i = 0; i < n; ++i) {
                double v = 0.0;
                if (sets.z_at(k, i) == ZClass::zero) {
                    v += std::max(0.0, -lam[k][i]) + std::max(0.0, lam[k][i] - c.xi[k][i] / visc);
                }
                const int p = sets.kink[sets.index(k, i)];
                if (p >= 0) {
                    const auto [right, left] = f_onesided(problem.law, kinks[static_cast<std::size_t>(p)]);
                    v += std::max(0.0, right * lam[k][i] - mu[k][i]) + std::max(0.0, mu[k][i] - left * lam[k][i]);
                }
                if (sets.z_at(k, i) == ZClass::zero || p >= 0) tally.add(k, i, v);
            }
        }
        rep.conditions.push_back(tally.finish(sign_scale, tolerance, true));
    }

    // Pointwise subdifferential inclusions; reported, never graded.
    {
        ViolationTally tl(condition::conc_lambda, tolerance * sign_scale);
        ViolationTally tm(condition::conc_mu, tolerance * sign_scale);
        for (int k = 1; k <= m; ++k) {
            for (int i = 0; i < n; ++i) {
                if (sets.z_at(k, i) == ZClass::zero) {
                    const double a = 0.0;
                    const double b = c.xi[k][i] / visc;
                    const double lo = std::min(a, b);
                    const double hi = std::max(a, b);
                    tl.add(k, i, std::max(0.0, lo - lam[k][i]) + std::max(0.0, lam[k][i] - hi));
                }
                const int p = sets.kink[sets.index(k, i)];
                if (p >= 0) {
                    const auto [right, left] = f_onesided(problem.law, kinks[static_cast<std::size_t>(p)]);
                    const double lo = std::min(right * lam[k][i], left * lam[k][i]);
                    const double hi = std::max(right * lam[k][i], left * lam[k][i]);
                    tm.add(k, i, std::max(0.0, lo - mu[k][i]) + std::max(0.0, mu[k][i] - hi));
                }
            }
        }
        rep.conditions.push_back(tl.finish(sign_scale, tolerance, false));
        rep.conditions.push_back(tm.finish(sign_scale, tolerance, false));
    }

    rep.pass = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                           [](const ConditionReport& cr) { return !cr.graded || cr.pass; });
    return rep;
}

Candidate candidate_from(const Problem& problem, const Trajectory& ell, const AdjointSolution& adjoint) {
    Candidate c;
    c.ell = ell;
    c.state = solve_state(problem, ell);
    c.xi = adjoint.xi;
    c.w = adjoint.w;
    c.bundle = extract_multipliers(adjoint);
    return c;
}

std::vector<double> b_stationarity_values(const Problem& problem, const ObjectiveSpec& objective,
                                          const Trajectory& ell, const std::vector<Trajectory>& directions) {
    const StateSolution state = solve_state(problem, ell);
    std::vector<double> out;
    out.reserve(directions.size());
    for (const auto& d : directions) {
        const LinearizedSolution lin = solve_linearized(problem, state, d);
        out.push_back(tracking_derivative(problem, objective, state, lin.dq, lin.dphi) +
                      h1_time_inner(ell, d, problem.grids));
    }
    return out;
}

BStatReport b_stationarity_probe(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                 int n_directions, std::uint64_t seed, double tolerance) {
    if (n_directions < 1) throw ValidationError("probe needs at least one direction");
    std::mt19937_64 rng(seed);
    std::vector<Trajectory> dirs;
    for (int d = 0; d < n_directions; ++d) {
        Trajectory t = random_smooth_trajectory(problem.grids, rng);
        t *= 1.0 / h1_time_norm(t, problem.grids);
        dirs.push_back(t);
        dirs.push_back(-1.0 * t);
    }
    BStatReport rep;
    rep.values = b_stationarity_values(problem, objective, ell, dirs);
    rep.min_value = *std::min_element(rep.values.begin(), rep.values.end());
    rep.tolerance = tolerance;
    rep.pass = rep.min_value >= -tolerance;
    return rep;
}

}  // namespace fatigue
