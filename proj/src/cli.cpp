#include "fatigue/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fatigue/errors.hpp"
#include "fatigue/scenario.hpp"
#include "fatigue/sensitivity.hpp"
#include "fatigue/stationarity.hpp"
#include "fatigue/trajectory_io.hpp"

namespace fatigue {

using nlohmann::json;

namespace {

struct RunContext {
    const CliOptions& options;
    std::filesystem::path out;
    std::string config_hash;
    std::vector<std::string> outputs;

    void write_trajectory(const std::string& name, const Trajectory& u, const Grids& grids) {
        const auto rel = std::filesystem::path("trajectories") / (name + ".csv");
        write_trajectory_csv(out / rel, u, grids, config_hash);
        outputs.push_back(rel.generic_string());
    }

    void write_text(const std::string& name, const std::string& body) {
        std::ofstream f(out / name);
        if (!f) throw ValidationError("cannot write " + (out / name).string());
        f << body;
        outputs.push_back(name);
    }

    void write_csv(const std::string& name, const std::string& body) {
        write_text(name, "# config_hash=" + config_hash + "\n" + body);
    }

    void write_json(const std::string& name, json j) {
        j["config_hash"] = config_hash;
        write_text(name, j.dump(2) + "\n");
    }
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json state_summary(const StateSolution& s, const Grids& g) {
    int max_it = 0;
    long total_it = 0;
    for (int it : s.picard_iterations) {
        max_it = std::max(max_it, it);
        total_it += it;
    }
    long decreases = 0;
    for (int k = 1; k <= g.time.steps; ++k) {
        decreases += (s.q[k] - s.q[k - 1]).unaryExpr([](double d) { return d < 0.0 ? 1.0 : 0.0; }).sum();
    }
    return {{"regularized", s.regularized},
            {"smoothing", s.regularized ? json{{"eps_max", s.smoothing.eps_max}, {"eps_f", s.smoothing.eps_f}}
                                        : json(nullptr)},
            {"picard_iterations_max", max_it},
            {"picard_iterations_total", total_it},
            {"contraction_estimate", s.contraction_estimate},
            {"max_elliptic_residual", s.max_elliptic_residual},
            {"irreversibility_violations", decreases},
            {"q_max", s.q.max_abs()},
            {"q_final_l2", l2_norm(s.q[g.time.steps], g.space)}};
}

json problem_json(const Problem& p) {
    return {{"model", {{"alpha", p.params.alpha}, {"beta", p.params.beta}, {"viscosity", p.params.viscosity}}},
            {"law", {{"c0", p.law.c0}, {"n_f", p.law.n_f}, {"slope", p.law.slope_m}, {"floor", p.law.floor}}},
            {"kernel", {{"sup", p.kernel.sup_abs()}, {"min", p.kernel.min_value()}}},
            {"tolerances",
             {{"picard_tol", p.tol.picard_tol},
              {"max_picard", p.tol.max_picard},
              {"elliptic_tol", p.tol.elliptic_tol},
              {"tol_z", p.tol.tol_z},
              {"tol_f", p.tol.tol_f}}}};
}

json condition_json(const ConditionReport& c) {
    json nodes = json::array();
    for (const auto& [k, i] : c.violating_nodes) nodes.push_back({k, i});
    return {{"graded", c.graded},       {"residual", c.residual},   {"relative", c.relative},
            {"tolerance", c.tolerance}, {"violating", c.violating}, {"max_violation", c.max_violation},
            {"pass", c.pass},           {"violating_nodes", nodes}};
}

json stationarity_json(const StationarityReport& r) {
    json conds = json::object();
    for (const auto& c : r.conditions) conds[c.name] = condition_json(c);
    return {{"mode", mode_name(r.mode)},
            {"tolerance", r.tolerance},
            {"pass", r.pass},
            {"strong_stationarity_applicable", r.strong_stationarity_applicable},
            {"active_sets",
             {{"z_positive", r.z_positive},
              {"z_zero", r.z_zero},
              {"z_negative", r.z_negative},
              {"f_kink", r.kink_points},
              {"tol_z", r.tol_z},
              {"tol_f", r.tol_f}}},
            {"conditions", conds}};
}

Trajectory pick_direction(const Scenario& sc, std::uint64_t salt) {
    if (sc.direction) return *sc.direction;
    return scenario_directions(sc, 1, salt).front();
}

std::vector<Trajectory> pick_directions(const Scenario& sc, int count, std::uint64_t salt) {
    std::vector<Trajectory> dirs;
    if (sc.direction) dirs.push_back(*sc.direction);
    for (auto& d : scenario_directions(sc, count - static_cast<int>(dirs.size()), salt)) dirs.push_back(std::move(d));
    return dirs;
}

json fd_json(const FdDirectionalReport& r) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
        rows.push_back({{"tau", r.taus[i]},
                        {"error", r.errors[i]},
                        {"ratio", number_or_null(r.ratios[i])},
                        {"floor", r.floors[i]},
                        {"at_floor", static_cast<bool>(r.at_floor[i])}});
    }
    return {{"rows", rows},
            {"monotone", r.monotone},
            {"floor_reached", r.floor_reached},
            {"slope", r.slope ? json(*r.slope) : json(nullptr)},
            {"derivative_h1_norm", r.derivative_norm},
            {"kink_hits", r.kink_hits},
            {"z_zero_hits", r.z_zero_hits}};
}

void append_fd_csv(std::string& csv, const std::string& map, int dir, const FdDirectionalReport& r) {
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
        csv += map + "," + std::to_string(dir) + "," + format_double(r.taus[i]) + "," + format_double(r.errors[i]) +
               "," + (std::isfinite(r.ratios[i]) ? format_double(r.ratios[i]) : std::string()) + "\n";
    }
}

json cmd_solve(RunContext& ctx, const Scenario& sc, bool regularized) {
    const Grids& g = sc.problem.grids;
    const StateSolution s = regularized ? solve_state_regularized(sc.problem, sc.control, sc.smoothing)
                                        : solve_state(sc.problem, sc.control);
    ctx.write_trajectory("q", s.q, g);
    ctx.write_trajectory("phi", s.phi, g);
    ctx.write_trajectory("z", s.z, g);
    ctx.write_trajectory("Hq", s.Hq, g);
    json j = state_summary(s, g);
    j["problem"] = problem_json(sc.problem);
    j["trajectory_json"] = {{"q", trajectory_to_json(s.q, g)}};
    return j;
}

json cmd_linearize(RunContext& ctx, const Scenario& sc) {
    const Grids& g = sc.problem.grids;
    const Trajectory dir = pick_direction(sc, 11);
    const StateSolution s = solve_state(sc.problem, sc.control);
    const LinearizedSolution lin = solve_linearized(sc.problem, s, dir);
    ctx.write_trajectory("direction", dir, g);
    ctx.write_trajectory("dq", lin.dq, g);
    ctx.write_trajectory("dphi", lin.dphi, g);
    return {{"state", state_summary(s, g)},
            {"dq_h1_norm", h1_time_norm(lin.dq, g)},
            {"dphi_l2l2_norm", l2_time_norm(lin.dphi, g)},
            {"kink_hits", lin.kink_hits},
            {"z_zero_hits", lin.z_zero_hits}};
}

json cmd_fd_check(RunContext& ctx, const Scenario& sc) {
    const auto dirs = pick_directions(sc, sc.fd_directions, 23);
    json nonsmooth = json::array();
    json smooth = json::array();
    std::string csv = "map,direction,tau,error,ratio\n";
    bool monotone = true;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const auto a = fd_directional_check(sc.problem, sc.control, dirs[d], sc.fd_taus);
        const auto b = fd_directional_check(sc.problem, sc.control, dirs[d], sc.fd_taus, sc.smoothing);
        monotone = monotone && a.monotone && b.monotone;
        nonsmooth.push_back(fd_json(a));
        smooth.push_back(fd_json(b));
        append_fd_csv(csv, "nonsmooth", static_cast<int>(d), a);
        append_fd_csv(csv, "regularized", static_cast<int>(d), b);
    }
    ctx.write_csv("fd_check.csv", csv);
    return {{"verdict", monotone ? "decreasing to floor" : "non-monotone"},
            {"monotone", monotone},
            {"nonsmooth", nonsmooth},
            {"regularized", smooth},
            {"smoothing", {{"eps_max", sc.smoothing.eps_max}, {"eps_f", sc.smoothing.eps_f}}}};
}

json cmd_grad_check(RunContext& ctx, const Scenario& sc) {
    const auto dirs = pick_directions(sc, sc.fd_directions, 37);
    const auto rep = fd_gradient_check(sc.problem, sc.objective, sc.control, dirs, sc.grad_taus, sc.smoothing);
    std::string csv = "direction,tau,central,analytic,relative_error\n";
    json per = json::array();
    for (std::size_t d = 0; d < rep.directions.size(); ++d) {
        const auto& r = rep.directions[d];
        for (std::size_t i = 0; i < rep.taus.size(); ++i) {
            csv += std::to_string(d) + "," + format_double(rep.taus[i]) + "," + format_double(r.central[i]) + "," +
                   format_double(r.analytic) + "," + format_double(r.relative_errors[i]) + "\n";
        }
        per.push_back({{"analytic", r.analytic},
                       {"min_relative_error", r.min_relative_error},
                       {"best_tau", r.best_tau},
                       {"relative_errors", r.relative_errors}});
    }
    ctx.write_csv("grad_check.csv", csv);
    return {{"directions", per},
            {"worst_min_relative_error", rep.worst_min_relative_error},
            {"smoothing", {{"eps_max", sc.smoothing.eps_max}, {"eps_f", sc.smoothing.eps_f}}}};
}

json cmd_optimize(RunContext& ctx, const Scenario& sc) {
    const Grids& g = sc.problem.grids;
    const OptimizeResult r = optimize(sc.problem, sc.objective, sc.control, sc.path);
    ctx.write_trajectory("ell_star", r.ell_star, g);
    ctx.write_trajectory("q", r.final_state.q, g);
    ctx.write_trajectory("phi", r.final_state.phi, g);
    ctx.write_trajectory("xi", r.final_adjoint.xi, g);
    ctx.write_trajectory("w", r.final_adjoint.w, g);
    ctx.write_trajectory("lambda", r.final_adjoint.lambda, g);
    ctx.write_trajectory("mu", r.final_adjoint.mu, g);
    json stages = json::array();
    for (const auto& s : r.stages) {
        stages.push_back({{"eps_max", s.smoothing.eps_max},
                          {"eps_f", s.smoothing.eps_f},
                          {"tolerance", s.tolerance},
                          {"iterations", s.iterations},
                          {"converged", s.converged},
                          {"aborted", s.aborted},
                          {"diagnostic", s.diagnostic},
                          {"final_objective", s.final_objective},
                          {"final_grad_norm", s.final_grad_norm},
                          {"distance_to_previous", s.distance_to_previous}});
    }
    const StateSolution s0 = solve_state(sc.problem, sc.control);
    const StateSolution s1 = solve_state(sc.problem, r.ell_star);
    return {{"stages", stages},
            {"objective_history", r.objective_history},
            {"grad_norm_history", r.grad_norm_history},
            {"history_stage", r.history_stage},
            {"armijo_violations", r.armijo_violations},
            {"ell_star_h1_norm", h1_time_norm(r.ell_star, g)},
            {"tracking_residual_initial", l2_time_norm(s0.q - sc.objective.q_d, g)},
            {"tracking_residual_final", l2_time_norm(s1.q - sc.objective.q_d, g)},
            {"final_smoothing", {{"eps_max", r.final_smoothing.eps_max}, {"eps_f", r.final_smoothing.eps_f}}},
            {"final_tolerance", r.final_tolerance}};
}

json cmd_check_stationarity(RunContext& ctx, const Scenario& sc) {
    const Grids& g = sc.problem.grids;
    const Trajectory ell = sc.candidate_file ? read_trajectory_csv(*sc.candidate_file, g) : sc.control;
    const int last = sc.path.stages - 1;
    const SmoothingParams sm = sc.path.smoothing(last);
    const double disc_tol = std::max(sm.eps_max, sc.path.tolerance(last));
    const double tol = sc.stationarity_tolerance > 0.0 ? sc.stationarity_tolerance : 10.0 * disc_tol;

    const StateSolution reg = solve_state_regularized(sc.problem, ell, sm);
    const AdjointSolution adj = solve_adjoint_regularized(sc.problem, sc.objective, reg);
    Candidate cand = candidate_from(sc.problem, ell, adj);
    const ActiveSets sets = classify_active_sets(cand.state, sc.problem.law, sc.problem.tol.tol_z, sc.problem.tol.tol_f);
    compute_G(sc.problem, sets, cand.bundle);

    json modes = json::object();
    for (auto mode : {StationarityMode::limit, StationarityMode::improved, StationarityMode::strong}) {
        modes[mode_name(mode)] = stationarity_json(check_system(sc.problem, sc.objective, cand, sets, mode, tol));
    }
    const BStatReport probe = b_stationarity_probe(sc.problem, sc.objective, ell, sc.probe_directions, sc.seed, tol);

    ctx.write_trajectory("lambda", cand.bundle.lambda, g);
    ctx.write_trajectory("mu", cand.bundle.mu, g);
    ctx.write_trajectory("Gplus", cand.bundle.Gplus, g);
    ctx.write_trajectory("Gminus", cand.bundle.Gminus, g);
    ctx.write_trajectory("z", cand.state.z, g);
    Trajectory zmask = Trajectory::zeros(g);
    Trajectory kmask = Trajectory::zeros(g);
    for (int k = 0; k <= g.time.steps; ++k) {
        for (int i = 0; i < g.space.node_count; ++i) {
            zmask[k][i] = static_cast<double>(static_cast<int>(sets.z_at(k, i))) - 1.0;
            kmask[k][i] = sets.kink_at(k, i) ? 1.0 : 0.0;
        }
    }
    ctx.write_trajectory("z_class", zmask, g);
    ctx.write_trajectory("kink_mask", kmask, g);

    return {{"candidate", sc.candidate_file ? sc.candidate_file->generic_string() : std::string("[control]")},
            {"smoothing", {{"eps_max", sm.eps_max}, {"eps_f", sm.eps_f}}},
            {"discretization_tolerance", disc_tol},
            {"grading_tolerance", tol},
            {"modes", modes},
            {"b_stationarity", {{"min", probe.min_value}, {"values", probe.values}, {"pass", probe.pass}}}};
}

json cmd_probe(RunContext&, const Scenario& sc) {
    const Grids& g = sc.problem.grids;
    const Trajectory ell = sc.candidate_file ? read_trajectory_csv(*sc.candidate_file, g) : sc.control;
    const int last = sc.path.stages - 1;
    const double disc_tol = std::max(sc.path.smoothing(last).eps_max, sc.path.tolerance(last));
    const double tol = sc.stationarity_tolerance > 0.0 ? sc.stationarity_tolerance : 10.0 * disc_tol;
    const BStatReport probe = b_stationarity_probe(sc.problem, sc.objective, ell, sc.probe_directions, sc.seed, tol);
    return {{"min", probe.min_value}, {"values", probe.values}, {"tolerance", tol}, {"pass", probe.pass}};
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

const std::vector<std::string>& cli_subcommands() {
    static const std::vector<std::string> names = {"solve-state", "solve-state-eps",    "linearize",
                                                   "fd-check",    "grad-check",         "optimize",
                                                   "check-stationarity", "probe-bstat", "validate"};
    return names;
}

int run_command(const CliOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    RunContext ctx{options, options.out, {}, {}};
    json manifest = {{"tool", "fatigue-ctl"},
                     {"version", kVersion},
                     {"subcommand", options.subcommand},
                     {"config_path", options.config.generic_string()},
                     {"overrides", options.overrides},
                     {"threads", options.threads}};
    auto finish = [&](const std::string& status) {
        manifest["status"] = status;
        manifest["outputs"] = ctx.outputs;
        manifest["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest["timestamp"] = utc_timestamp();
        manifest["config_hash"] = ctx.config_hash;
        std::ofstream f(options.out / "manifest.json");
        f << manifest.dump(2) << "\n";
    };

    try {
        std::filesystem::create_directories(options.out);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot create output directory: " << e.what() << "\n";
        return exit_validation;
    }

    try {
        Config config = Config::load(options.config);
        std::string hashed = config.source();
        for (const auto& o : options.overrides) {
            config.apply_override(o, "tolerances");
            hashed += "\n#override " + o;
        }
        if (options.seed) {
            config.apply_override("run.seed=" + std::to_string(*options.seed), "run");
            hashed += "\n#seed " + std::to_string(*options.seed);
        }
        ctx.config_hash = fnv1a_hex(hashed);
        const bool known = std::find(cli_subcommands().begin(), cli_subcommands().end(), options.subcommand) !=
                           cli_subcommands().end();
        if (!known) throw ValidationError("unknown subcommand '" + options.subcommand + "'");

        Scenario sc = scenario_from_config(std::move(config));
        manifest["config"] = sc.config.to_json();
        manifest["seed"] = sc.seed;
        manifest["scenario"] = sc.name;
        for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";

        json report;
        const std::string& cmd = options.subcommand;
        if (cmd == "solve-state") {
            report = cmd_solve(ctx, sc, false);
        } else if (cmd == "solve-state-eps") {
            report = cmd_solve(ctx, sc, true);
        } else if (cmd == "linearize") {
            report = cmd_linearize(ctx, sc);
        } else if (cmd == "fd-check") {
            report = cmd_fd_check(ctx, sc);
        } else if (cmd == "grad-check") {
            report = cmd_grad_check(ctx, sc);
        } else if (cmd == "optimize") {
            report = cmd_optimize(ctx, sc);
        } else if (cmd == "check-stationarity") {
            report = cmd_check_stationarity(ctx, sc);
        } else if (cmd == "probe-bstat") {
            report = cmd_probe(ctx, sc);
        } else {
            report = {{"valid", true}};
        }
        report["subcommand"] = cmd;
        report["warnings"] = sc.warnings;
        ctx.write_json("report.json", report);
        finish("ok");
        return exit_ok;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        manifest["error"] = e.what();
        finish("validation_error");
        return exit_validation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        json diag = {{"error", e.what()}, {"step", e.step()}, {"residual", number_or_null(e.residual())}};
        ctx.write_json("diagnostics.json", diag);
        manifest["error"] = e.what();
        finish("solver_error");
        return exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        manifest["error"] = e.what();
        finish("internal_error");
        return exit_internal;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Damage-with-fatigue state solver, sensitivities and optimality audits"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    CliOptions opts;
    std::uint64_t seed = 0;
    for (const auto& name : cli_subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out, "output directory");
        sub->add_option("--seed", seed, "override [run] seed");
        sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--tol-overrides", opts.overrides, "key=value (section defaults to tolerances)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }
    for (const auto* sub : app.get_subcommands()) opts.subcommand = sub->get_name();
    for (const auto* sub : app.get_subcommands()) {
        if (sub->count("--seed") > 0) opts.seed = seed;
    }
    return run_command(opts);
}

}  // namespace fatigue
