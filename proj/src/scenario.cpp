#include "fatigue/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "fatigue/errors.hpp"
#include "fatigue/trajectory_io.hpp"

namespace fatigue {

namespace {

double time_profile(const std::string& kind, double t, double final_time) {
    const double s = t / final_time;
    if (kind == "constant") return 1.0;
    if (kind == "linear") return s;
    if (kind == "quadratic") return s * s;
    if (kind == "sine") return std::sin(std::numbers::pi * s);
    throw ValidationError("unknown time_profile '" + kind + "' (constant, linear, quadratic, sine)");
}

Grids grids_from(const Config& c) {
    const int dim = c.integer("space", "dimension");
    const auto extents = c.numbers("space", "extents");
    const auto nodes = c.integers("space", "nodes");
    Grids g;
    g.space = build_space_grid(dim, extents, nodes);
    g.time = build_time_grid(c.number("time", "T"), c.integer("time", "steps"));
    return g;
}

HistoryKernel kernel_from(const Config& c, const Grids& g) {
    const std::string type = c.string_or("kernel", "type", "constant");
    const ScalarField q0 = ScalarField::Constant(g.space.node_count, c.number_or("kernel", "q0", 0.0));
    if (type == "constant") return HistoryKernel::constant(g, c.number_or("kernel", "amplitude", 0.0), q0);
    if (type == "exponential") {
        return HistoryKernel::exponential(g, c.number("kernel", "amplitude"), c.number("kernel", "decay_time"), q0);
    }
    if (type == "samples") return HistoryKernel::sampled(g, c.numbers("kernel", "samples"), q0);
    throw ValidationError("[kernel] type: unknown kernel type '" + type + "' (constant, exponential, samples)");
}

}  // namespace

Trajectory trajectory_from_section(const Config& c, const std::string& section, const Grids& g) {
    const std::string type = c.string_or(section, "type", "constant");
    if (type == "constant") return Trajectory::constant(g, c.number_or(section, "value", 0.0));
    if (type == "csv") {
        const std::filesystem::path file = c.base_directory() / c.string(section, "file");
        return read_trajectory_csv(file, g);
    }
    if (type == "separable") {
        const double offset = c.number_or(section, "value", 0.0);
        const double amp = c.number_or(section, "amplitude", 1.0);
        const std::string tp = c.string_or(section, "time_profile", "constant");
        const std::string sp = c.string_or(section, "space_profile", "constant");
        const double center = c.number_or(section, "space_center", 0.5 * g.space.extents[0]);
        const double width = c.number_or(section, "space_width", 0.1 * g.space.extents[0]);
        if (!(width > 0.0)) throw ValidationError("[" + section + "] space_width must be > 0");
        time_profile(tp, 0.0, g.time.final_time);
        if (sp != "constant" && sp != "cosine" && sp != "bump") {
            throw ValidationError("[" + section + "] unknown space_profile '" + sp + "' (constant, cosine, bump)");
        }
        const double lx = g.space.extents[0];
        const double ly = g.space.extents[1];
        const bool two_d = g.space.dimension == 2;
        return sample_trajectory(g, [&](double t, double x, double y) {
            double h = 1.0;
            if (sp == "cosine") {
                h = std::cos(std::numbers::pi * x / lx) * (two_d ? std::cos(std::numbers::pi * y / ly) : 1.0);
            } else if (sp == "bump") {
                const double dx = x - center;
                h = std::exp(-dx * dx / (2.0 * width * width));
            }
            return offset + amp * time_profile(tp, t, g.time.final_time) * h;
        });
    }
    throw ValidationError("[" + section + "] type: unknown trajectory type '" + type + "' (constant, separable, csv)");
}

Scenario scenario_from_config(Config c) {
    Scenario s;
    s.name = c.string_or("run", "name", std::filesystem::path(c.origin()).stem().string());
    Problem& p = s.problem;
    p.grids = grids_from(c);
    const Grids& g = p.grids;

    p.params.alpha = c.number("model", "alpha");
    p.params.beta = c.number("model", "beta");
    p.params.viscosity = c.number("model", "viscosity");
    p.params.validate();

    p.law.c0 = c.number("law", "c0");
    p.law.n_f = c.number("law", "n_f");
    p.law.slope_m = c.number_or("law", "slope", 0.0);
    p.law.floor = c.number_or("law", "floor", 0.0);
    p.law.validate();

    p.kernel = kernel_from(c, g);
    s.monotone_required = c.boolean_or("kernel", "monotone_required", false);
    if (p.kernel.min_value() < 0.0) {
        const std::string msg =
            "history kernel takes negative values (min " + std::to_string(p.kernel.min_value()) +
            "): the history operator is not monotone";
        if (s.monotone_required) {
            s.warnings.push_back(msg + ", but monotonicity checks are requested");
        } else {
            s.warnings.push_back(msg);
        }
    }

    p.tol.picard_tol = c.number_or("tolerances", "picard_tol", p.tol.picard_tol);
    p.tol.max_picard = c.integer_or("tolerances", "max_picard", p.tol.max_picard);
    p.tol.elliptic_tol = c.number_or("tolerances", "elliptic_tol", p.tol.elliptic_tol);
    p.tol.tol_z = c.number_or("tolerances", "tol_z", p.tol.tol_z);
    p.tol.tol_f = c.number_or("tolerances", "tol_f", p.tol.tol_f);
    p.tol.validate();
    s.stationarity_tolerance = c.number_or("tolerances", "stationarity", 0.0);

    s.control = trajectory_from_section(c, "control", g);

    s.objective.kappa = c.number_or("objective", "kappa", 0.0);
    const std::string target = c.string_or("objective", "target", "zero");
    if (target == "zero") {
        s.objective.q_d = Trajectory::zeros(g);
    } else if (target == "constant") {
        s.objective.q_d = Trajectory::constant(g, c.number("objective", "target_value"));
    } else if (target == "from_control") {
        const Trajectory gen = trajectory_from_section(c, "target_control", g);
        p.validate();
        s.objective.q_d = solve_state(p, gen).q;
    } else if (target == "csv") {
        s.objective.q_d = read_trajectory_csv(c.base_directory() / c.string("objective", "target_file"), g);
    } else {
        throw ValidationError("[objective] target: unknown target '" + target +
                              "' (zero, constant, from_control, csv)");
    }
    s.objective.validate(g);

    if (c.has_section("direction")) s.direction = trajectory_from_section(c, "direction", g);

    s.smoothing.eps_max = c.number_or("smoothing", "eps_max", 0.1);
    s.smoothing.eps_f = c.number_or("smoothing", "eps_f", s.smoothing.eps_max);
    s.smoothing.validate();

    s.path.eps0 = c.number_or("path", "eps0", s.path.eps0);
    s.path.gamma = c.number_or("path", "gamma", s.path.gamma);
    s.path.stages = c.integer_or("path", "stages", s.path.stages);
    s.path.tol0 = c.number_or("path", "tol0", s.path.tol0);
    s.path.eps_f_ratio = c.number_or("path", "eps_f_ratio", s.path.eps_f_ratio);
    s.path.max_iterations = c.integer_or("path", "max_iterations", s.path.max_iterations);
    s.path.armijo = c.number_or("path", "armijo", s.path.armijo);
    s.path.anchor_previous_stage = c.boolean_or("path", "anchor", s.path.anchor_previous_stage);
    s.path.validate();

    s.fd_taus = c.has("fd", "taus") ? c.numbers("fd", "taus") : default_tau_schedule();
    s.grad_taus = c.has("fd", "gradient_taus") ? c.numbers("fd", "gradient_taus") : default_gradient_taus();
    s.fd_directions = c.integer_or("fd", "directions", s.fd_directions);
    s.probe_directions = c.integer_or("probe", "directions", s.probe_directions);
    if (s.fd_directions < 1 || s.probe_directions < 1) throw ValidationError("direction counts must be >= 1");

    if (c.has("candidate", "file")) s.candidate_file = c.base_directory() / c.string("candidate", "file");
    s.seed = static_cast<std::uint64_t>(c.integer_or("run", "seed", 0));

    p.validate();
    for (const auto& k : c.unused_keys()) s.warnings.push_back("unused config key '" + k + "'");
    s.config = std::move(c);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    Config c = Config::load(path);
    for (const auto& o : overrides) c.apply_override(o, "tolerances");
    return scenario_from_config(std::move(c));
}

std::vector<Trajectory> scenario_directions(const Scenario& scenario, int count, std::uint64_t salt) {
    std::mt19937_64 rng(scenario.seed * 0x9E3779B97F4A7C15ULL + salt);
    std::vector<Trajectory> out;
    for (int i = 0; i < count; ++i) {
        Trajectory d = random_smooth_trajectory(scenario.problem.grids, rng);
        d *= 1.0 / h1_time_norm(d, scenario.problem.grids);
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace fatigue
