// Acceptance runner: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fatigue/scenario.hpp"
#include "fatigue/sensitivity.hpp"
#include "fatigue/stationarity.hpp"

using namespace fatigue;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = FATIGUE_SCENARIO_DIR;
constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            detail << " FAILED(" << what << ")";
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

Scenario scenario(const std::string& name, const std::vector<std::string>& overrides = {}) {
    return load_scenario(kScenarios / (name + ".toml"), overrides);
}

std::vector<std::string> shipped() {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(kScenarios)) {
        if (e.path().extension() == ".toml") names.push_back(e.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

double constant_value(const Trajectory& u, const Grids& g) {
    const double v = u[0][0];
    if ((u - Trajectory::constant(g, v)).max_abs() != 0.0) throw std::runtime_error("control is not constant");
    return v;
}

// Sup over t of |q_h(t) - q(t)| with q_h(t) = q_k on [t_k, t_{k+1}) and q affine.
double step_function_error(const Trajectory& q, const Grids& g, const std::function<double(double)>& exact) {
    double err = 0.0;
    for (int k = 0; k < g.time.steps; ++k) {
        for (int i = 0; i < g.space.node_count; ++i) {
            err = std::max({err, std::abs(q[k][i] - exact(g.time.t(k))), std::abs(q[k][i] - exact(g.time.t(k + 1)))});
        }
    }
    return err;
}

double nodal_error(const Trajectory& q, const Grids& g, const std::function<double(double)>& exact) {
    double err = 0.0;
    for (int k = 0; k <= g.time.steps; ++k) {
        err = std::max(err, (q[k].array() - exact(g.time.t(k))).abs().maxCoeff());
    }
    return err;
}

void closed_form(Outcome& o) {
    std::vector<double> dts;
    std::vector<double> errs;
    double nodal = 0.0;
    for (int steps : {100, 200, 400, 800}) {
        const Scenario sc = scenario("constant_data", {"time.steps=" + std::to_string(steps)});
        const Problem& p = sc.problem;
        const double ell = constant_value(sc.control, p.grids);
        const double rate = (ell - p.law.c0) / p.params.viscosity;
        const StateSolution s = solve_state(p, sc.control);
        const double dt = p.grids.time.dt();
        const double err = step_function_error(s.q, p.grids, [&](double t) { return rate * t; });
        nodal = std::max(nodal, nodal_error(s.q, p.grids, [&](double t) { return rate * t; }));
        o.require(err <= 2.0 * dt * std::abs(rate), "Linf bound at M=" + std::to_string(steps));
        dts.push_back(dt);
        errs.push_back(err);
    }
    const double slope = loglog_slope(dts, errs);
    o.require(std::abs(slope - 1.0) <= 0.15, "slope");
    o.detail << "Linf err " << fmt(errs.front()) << ".." << fmt(errs.back()) << ", slope " << fmt(slope)
             << ", nodal err " << fmt(nodal);
}

void elliptic_order(Outcome& o) {
    const Scenario sc = scenario("constant_data");
    const ModelParams& p = sc.problem.params;
    std::vector<double> h;
    std::vector<double> e;
    for (int cells : {10, 20, 40, 80, 160}) {
        const std::array<double, 1> ext{1.0};
        const std::array<int, 1> n{cells + 1};
        const SpaceGrid g = build_space_grid(1, ext, n);
        ScalarField exact(g.node_count);
        for (int i = 0; i < g.node_count; ++i) exact[i] = std::cos(pi * g.coordinate(i)[0]);
        // -alpha phi'' + beta phi = rhs with q = 0
        const ScalarField rhs = (p.alpha * pi * pi + p.beta) * exact;
        const ScalarField phi = solve_elliptic(p, g, ScalarField::Zero(g.node_count), rhs);
        h.push_back(1.0 / cells);
        e.push_back(l2_norm(phi - exact, g));
    }
    o.detail << "orders";
    for (std::size_t i = 1; i < e.size(); ++i) {
        const double order = std::log(e[i - 1] / e[i]) / std::log(2.0);
        o.detail << " " << fmt(order);
        o.require(std::abs(order - 2.0) <= 0.2, "order at refinement " + std::to_string(i));
    }
}

long decreases(const Trajectory& q, const Grids& g) {
    long n = 0;
    for (int k = 1; k <= g.time.steps; ++k) n += ((q[k] - q[k - 1]).array() < 0.0).count();
    return n;
}

void irreversibility(Outcome& o) {
    long total = 0;
    int runs = 0;
    for (const auto& name : shipped()) {
        const Scenario sc = scenario(name);
        const Problem& p = sc.problem;
        std::vector<Trajectory> controls{sc.control};
        std::mt19937_64 rng(sc.seed);
        for (int r = 0; r < 5; ++r) {
            Trajectory ell = random_smooth_trajectory(p.grids, rng);
            ell += sc.control;
            controls.push_back(ell);
        }
        for (const auto& ell : controls) {
            total += decreases(solve_state(p, ell).q, p.grids);
            total += decreases(solve_state_regularized(p, ell, sc.smoothing).q, p.grids);
            runs += 2;
        }
    }
    o.require(total == 0, "violations");
    o.detail << runs << " solves, " << total << " violations";
}

void smoothing_consistency(Outcome& o) {
    // sup |max_eps - max| by grid scan
    double worst = 0.0;
    for (double eps : {0.4, 0.1, 0.01}) {
        double sup = 0.0;
        const int n = 200001;
        for (int i = 0; i < n; ++i) {
            const double x = -2.0 * eps + 4.0 * eps * i / (n - 1);
            sup = std::max(sup, std::abs(max_eps(eps, x) - std::max(x, 0.0)));
        }
        worst = std::max(worst, std::abs(sup - eps / 2.0));
    }
    o.require(worst <= 1e-12, "sup scan");

    const Scenario sc = scenario("constant_data");
    const Problem& p = sc.problem;
    const double ell = constant_value(sc.control, p.grids);
    const double eps = sc.smoothing.eps_max;
    const double rate = (ell - p.law.c0 - eps / 2.0) / p.params.viscosity;
    const StateSolution r = solve_state_regularized(p, sc.control, sc.smoothing);
    const double dt = p.grids.time.dt();
    const double reg_err = step_function_error(r.q, p.grids, [&](double t) { return rate * t; });
    o.require(reg_err <= 2.0 * dt * std::abs(rate), "regularized closed form");

    const Scenario eng = scenario("engagement");
    const StateSolution s = solve_state(eng.problem, eng.control);
    std::vector<double> dev;
    for (int j = 3; j <= 7; ++j) {
        const double e = std::ldexp(1.0, -j);
        dev.push_back((solve_state_regularized(eng.problem, eng.control, {e, e}).q - s.q).max_abs());
    }
    o.detail << "sup scan dev " << fmt(worst) << ", regularized Linf err " << fmt(reg_err) << ", halving ratios";
    for (std::size_t i = 1; i < dev.size(); ++i) {
        const double ratio = dev[i - 1] / dev[i];
        o.detail << " " << fmt(ratio);
        o.require(std::abs(ratio - 2.0) <= 0.4, "halving ratio");
    }
}

void directional_derivative(Outcome& o) {
    int fits = 0;
    double min_slope = INFINITY;
    for (const auto& name : shipped()) {
        const Scenario sc = scenario(name);
        const auto dirs = scenario_directions(sc, sc.fd_directions, 1);
        for (const auto& d : dirs) {
            const auto ns = fd_directional_check(sc.problem, sc.control, d, sc.fd_taus);
            o.require(ns.monotone, name + " non-smooth monotone");
            const auto sm = fd_directional_check(sc.problem, sc.control, d, sc.fd_taus, sc.smoothing);
            o.require(sm.monotone, name + " smoothed monotone");
            if (sm.slope) {
                ++fits;
                min_slope = std::min(min_slope, *sm.slope);
                o.require(*sm.slope >= 0.8, name + " slope");
            }
        }
    }
    o.require(fits > 0, "no pre-floor slope fit anywhere");
    o.detail << "all monotone checks run, " << fits << " smooth-regime fits, min slope " << fmt(min_slope);
}

void adjoint_duality(Outcome& o) {
    double worst = 0.0;
    for (const auto& name : shipped()) {
        const Scenario sc = scenario(name);
        const Problem& p = sc.problem;
        const StateSolution s = solve_state_regularized(p, sc.control, sc.smoothing);
        const AdjointSolution a = solve_adjoint_regularized(p, sc.objective, s);
        for (const auto& d : scenario_directions(sc, 10, 2)) {
            const LinearizedSolution lin = solve_linearized_regularized(p, s, d);
            const double primal = tracking_derivative(p, sc.objective, s, lin.dq, lin.dphi);
            const double dual = l2_time_inner(a.w, d, p.grids);
            worst = std::max(worst, std::abs(dual - primal) / std::max(1.0, std::abs(primal)));
        }
    }
    o.require(worst <= 1e-10, "duality");
    o.detail << "worst relative gap " << fmt(worst);
}

void gradient_audit(Outcome& o) {
    o.detail << "min relative error per scenario:";
    for (const auto& name : shipped()) {
        const Scenario sc = scenario(name);
        const auto dirs = scenario_directions(sc, sc.fd_directions, 3);
        const auto rep = fd_gradient_check(sc.problem, sc.objective, sc.control, dirs, sc.grad_taus, sc.smoothing);
        o.require(rep.worst_min_relative_error <= 1e-6, name);
        o.detail << " " << name << "=" << fmt(rep.worst_min_relative_error);
    }
}

// Independent evaluation of (H'dq)_k = dt sum_{j<k} a_{k-j} dq_j.
Trajectory direct_history(const std::vector<double>& a, const Trajectory& dq, const Grids& g) {
    Trajectory out = Trajectory::zeros(g);
    for (int k = 0; k <= g.time.steps; ++k) {
        for (int j = 0; j < k; ++j) out[k] += g.time.dt() * a[static_cast<std::size_t>(k - j)] * dq[j];
    }
    return out;
}

void volterra_adjoint(Outcome& o) {
    const Scenario sc = scenario("engagement");
    const Grids& g = sc.problem.grids;
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    auto random = [&](std::uniform_real_distribution<double>& dist) {
        Trajectory t = Trajectory::zeros(g);
        for (int k = 0; k <= g.time.steps; ++k) {
            for (int i = 0; i < g.space.node_count; ++i) t[k][i] = dist(rng);
        }
        return t;
    };
    const ScalarField q0 = ScalarField::Zero(g.space.node_count);
    std::vector<double> sampled(static_cast<std::size_t>(g.time.steps + 1));
    for (auto& v : sampled) v = pos(rng);
    const std::vector<HistoryKernel> kernels{sc.problem.kernel, HistoryKernel::exponential(g, 0.7, 0.2, q0),
                                             HistoryKernel::sampled(g, sampled, q0)};
    double worst_dual = 0.0;
    double worst_direct = 0.0;
    long negatives = 0;
    for (int pair = 0; pair < 100; ++pair) {
        const HistoryKernel& kernel = kernels[static_cast<std::size_t>(pair) % kernels.size()];
        const Trajectory dq = random(u);
        const Trajectory mu = random(u);
        const Trajectory hdq = history_linear_apply(kernel, dq, g);
        const double lhs = l2_time_inner(hdq, mu, g);
        const double rhs = l2_time_inner(dq, history_adjoint_apply(kernel, mu, g), g);
        worst_dual = std::max(worst_dual, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        worst_direct = std::max(worst_direct, (hdq - direct_history(kernel.a, dq, g)).max_abs());

        const Trajectory nonneg = random(pos);
        const Trajectory h = history_linear_apply(kernel, nonneg, g);
        for (int k = 0; k <= g.time.steps; ++k) negatives += (h[k].array() < 0.0).count();
    }
    o.require(worst_dual <= 1e-13, "adjoint identity");
    o.require(worst_direct <= 1e-12, "direct sum");
    o.require(negatives == 0, "monotonicity");
    o.detail << "worst pairing gap " << fmt(worst_dual) << ", direct-sum dev " << fmt(worst_direct) << ", "
             << negatives << " sign violations";
}

bool monotone_within_stages(const OptimizeResult& r) {
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
        if (r.history_stage[i] == r.history_stage[i - 1] && r.objective_history[i] > r.objective_history[i - 1]) {
            return false;
        }
    }
    return true;
}

void optimizer_sanity(Outcome& o) {
    const Scenario fz = scenario("frozen");
    const OptimizeResult rf = optimize(fz.problem, fz.objective, fz.control, fz.path);
    const double norm = h1_time_norm(rf.ell_star, fz.problem.grids);
    o.require(norm <= 1e-6, "frozen norm");
    o.require(rf.armijo_violations == 0 && monotone_within_stages(rf), "frozen monotone");

    const Scenario at = scenario("attainable");
    const Grids& g = at.problem.grids;
    const OptimizeResult ra = optimize(at.problem, at.objective, at.control, at.path);
    const double before = l2_time_norm(solve_state(at.problem, at.control).q - at.objective.q_d, g);
    const double after = l2_time_norm(solve_state(at.problem, ra.ell_star).q - at.objective.q_d, g);
    const double cut = 1.0 - after / before;
    o.require(cut >= 0.9, "attainable cut");
    o.require(ra.armijo_violations == 0 && monotone_within_stages(ra), "attainable monotone");
    o.detail << "frozen |ell|_H1 " << fmt(norm) << "; attainable residual " << fmt(before) << " -> " << fmt(after)
             << " (" << fmt(100.0 * cut) << "% cut, " << ra.stages.size() << " stages); Armijo violations "
             << rf.armijo_violations + ra.armijo_violations;
}

void stationarity_grading(Outcome& o) {
    const Scenario sc = scenario("stationary");
    const Problem& p = sc.problem;
    const OptimizeResult r = optimize(p, sc.objective, sc.control, sc.path);
    const int last = sc.path.stages - 1;
    const SmoothingParams sm = sc.path.smoothing(last);
    const double tol = 10.0 * std::max(sm.eps_max, sc.path.tolerance(last));

    const StateSolution reg = solve_state_regularized(p, r.ell_star, sm);
    const AdjointSolution adj = solve_adjoint_regularized(p, sc.objective, reg);
    Candidate cand = candidate_from(p, r.ell_star, adj);
    const ActiveSets sets = classify_active_sets(cand.state, p.law, p.tol.tol_z, p.tol.tol_f);
    compute_G(p, sets, cand.bundle);
    o.require(sets.count(ZClass::zero) == 0 && sets.kink_count() == 0, "bands not empty");

    const auto limit = check_system(p, sc.objective, cand, sets, StationarityMode::limit, tol);
    const auto improved = check_system(p, sc.objective, cand, sets, StationarityMode::improved, tol);
    const auto strong = check_system(p, sc.objective, cand, sets, StationarityMode::strong, tol);
    double worst = 0.0;
    for (const auto& c : limit.conditions) {
        if (c.graded) worst = std::max(worst, c.relative);
    }
    o.require(limit.pass, "limit system");
    o.require(improved.pass == limit.pass && strong.pass == limit.pass, "modes disagree");

    const BStatReport probe = b_stationarity_probe(p, sc.objective, r.ell_star, 20, sc.seed, tol);
    o.require(probe.min_value >= -tol, "b-probe");
    o.detail << "tolerance " << fmt(tol) << ", worst limit residual " << fmt(worst) << ", modes "
             << limit.pass << improved.pass << strong.pass << ", probe min " << fmt(probe.min_value) << " over "
             << probe.values.size() << " values, bands z=0:" << sets.count(ZClass::zero)
             << " kink:" << sets.kink_count();
}

void strong_feasible_bundles(Outcome& o) {
    const Scenario sc = scenario("engagement", {"time.steps=20"});
    Problem p = sc.problem;
    const Grids& g = p.grids;
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    const double visc = p.params.viscosity;
    const auto kinks = p.law.kinks();
    long sign_violations = 0;
    long g_violations = 0;
    for (int rep = 0; rep < 200; ++rep) {
        // Fresh nonnegative kernel per bundle.
        std::vector<double> a(static_cast<std::size_t>(g.time.steps + 1));
        for (auto& v : a) v = u(rng);
        p.kernel = HistoryKernel::sampled(g, a, ScalarField::Zero(g.space.node_count));

        Candidate c;
        c.ell = Trajectory::zeros(g);
        c.state.q = Trajectory::zeros(g);
        c.state.phi = Trajectory::zeros(g);
        c.state.z = Trajectory::zeros(g);
        c.state.Hq = Trajectory::zeros(g);
        c.xi = Trajectory::zeros(g);
        c.w = Trajectory::zeros(g);
        c.bundle = {Trajectory::zeros(g), Trajectory::zeros(g), Trajectory::zeros(g), Trajectory::zeros(g)};
        ActiveSets sets;
        sets.steps = g.time.steps;
        sets.nodes = g.space.node_count;
        sets.tol_z = p.tol.tol_z;
        sets.tol_f = p.tol.tol_f;
        sets.z.assign(static_cast<std::size_t>((sets.steps + 1) * sets.nodes), ZClass::negative);
        sets.kink.assign(sets.z.size(), -1);

        for (int k = 1; k <= g.time.steps; ++k) {
            for (int i = 0; i < g.space.node_count; ++i) {
                c.xi[k][i] = 2.0 * u(rng) - 1.0;
                const double r = u(rng);
                const ZClass zc = r < 0.3 ? ZClass::zero : (r < 0.7 ? ZClass::positive : ZClass::negative);
                sets.z[sets.index(k, i)] = zc;
                const bool kink = u(rng) < 0.4;
                if (kink) sets.kink[sets.index(k, i)] = 0;
                double lam = zc == ZClass::negative ? 0.0 : 2.0 * u(rng) - 1.0;
                if (zc == ZClass::zero) {
                    c.xi[k][i] = std::abs(c.xi[k][i]);
                    lam = u(rng) * c.xi[k][i] / visc;
                }
                if (kink) lam = std::abs(lam);
                c.bundle.lambda[k][i] = lam;
                double mu = 0.0;
                if (kink) {
                    // f'_+ lam <= mu <= f'_- lam at H = n_f
                    const auto [right, left] = f_onesided(p.law, kinks.front());
                    const double s = u(rng);
                    mu = (s * right + (1.0 - s) * left) * lam;
                }
                c.bundle.mu[k][i] = mu;
            }
        }
        compute_G(p, sets, c.bundle);
        const auto improved = check_system(p, obj, c, sets, StationarityMode::improved, 1e-12);
        sign_violations += improved.condition(condition::sign_weak).violating;
        for (int k = 0; k <= g.time.steps; ++k) {
            g_violations += (c.bundle.Gplus[k].array() < 0.0).count() + (c.bundle.Gminus[k].array() > 0.0).count();
        }
    }
    o.require(sign_violations == 0, "sign conditions");
    o.require(g_violations == 0, "G signs");
    o.detail << "200 bundles, " << sign_violations << " sign violations, " << g_violations << " G sign violations";
}

double lipschitz_sup(int steps) {
    const Scenario sc = scenario("engagement", {"time.steps=" + std::to_string(steps)});
    std::mt19937_64 rng(sc.seed);
    double sup = 0.0;
    for (int pair = 0; pair < 50; ++pair) {
        Trajectory a = random_smooth_trajectory(sc.problem.grids, rng);
        Trajectory b = random_smooth_trajectory(sc.problem.grids, rng);
        a *= 0.5;
        b *= 0.5;
        a += sc.control;
        b += sc.control;
        const LipschitzRatio r = lipschitz_probe(sc.problem, a, b);
        if (!r.degenerate) sup = std::max(sup, r.ratio);
    }
    return sup;
}

void lipschitz_stability(Outcome& o) {
    const Scenario sc = scenario("engagement");
    const int steps = sc.problem.grids.time.steps;
    const double coarse = lipschitz_sup(steps);
    const double fine = lipschitz_sup(2 * steps);
    const double change = std::abs(fine - coarse) / coarse;
    o.require(std::isfinite(coarse) && std::isfinite(fine) && coarse > 0.0, "finite sup");
    o.require(change <= 0.1, "stability");
    o.detail << "sup " << fmt(coarse) << " (M=" << steps << "), " << fmt(fine) << " (M=" << 2 * steps << "), change "
             << fmt(100.0 * change) << "%";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"closed-form state", closed_form},
        {"elliptic order", elliptic_order},
        {"irreversibility", irreversibility},
        {"smoothing consistency", smoothing_consistency},
        {"directional derivative", directional_derivative},
        {"adjoint duality", adjoint_duality},
        {"gradient audit", gradient_audit},
        {"Volterra adjoint", volterra_adjoint},
        {"optimizer sanity", optimizer_sanity},
        {"stationarity grading", stationarity_grading},
        {"strong-feasible bundles", strong_feasible_bundles},
        {"Lipschitz stability", lipschitz_stability},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << ": " << o.detail.str()
                  << " [" << fmt(secs) << " s]" << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
