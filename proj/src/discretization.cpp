#include "fatigue/discretization.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

std::vector<double> trapezoid_weights(int n, double h) {
    std::vector<double> w(static_cast<std::size_t>(n), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

// 1D P1 stiffness on a uniform grid with natural boundary conditions.
std::vector<Eigen::Triplet<double>> stiffness_1d(int n, double h) {
    std::vector<Eigen::Triplet<double>> t;
    for (int e = 0; e + 1 < n; ++e) {
        t.emplace_back(e, e, 1.0 / h);
        t.emplace_back(e + 1, e + 1, 1.0 / h);
        t.emplace_back(e, e + 1, -1.0 / h);
        t.emplace_back(e + 1, e, -1.0 / h);
    }
    return t;
}

}  // namespace

double SpaceGrid::measure() const {
    return dimension == 1 ? extents[0] : extents[0] * extents[1];
}

std::array<double, 2> SpaceGrid::coordinate(int node) const {
    const int nx = nodes_per_axis[0];
    const int i = node % nx;
    const int j = node / nx;
    return {i * h[0], dimension == 2 ? j * h[1] : 0.0};
}

bool SpaceGrid::same_as(const SpaceGrid& other) const {
    return dimension == other.dimension && nodes_per_axis == other.nodes_per_axis &&
           extents == other.extents;
}

bool TimeGrid::same_as(const TimeGrid& other) const {
    return steps == other.steps && final_time == other.final_time;
}

SpaceGrid build_space_grid(int dimension, std::span<const double> extents,
                           std::span<const int> nodes_per_axis) {
    if (dimension != 1 && dimension != 2) {
        throw ValidationError("space dimension must be 1 or 2, got " + std::to_string(dimension));
    }
    const auto d = static_cast<std::size_t>(dimension);
    if (extents.size() < d || nodes_per_axis.size() < d) {
        throw ValidationError("space grid needs one extent and one node count per axis");
    }
    SpaceGrid g;
    g.dimension = dimension;
    g.extents = {1.0, 1.0};
    g.nodes_per_axis = {1, 1};
    g.h = {0.0, 0.0};
    for (std::size_t a = 0; a < d; ++a) {
        if (!(extents[a] > 0.0) || !std::isfinite(extents[a])) {
            throw ValidationError("space extents must be positive");
        }
        if (nodes_per_axis[a] < 2) {
            throw ValidationError("need at least 2 nodes per axis");
        }
        g.extents[a] = extents[a];
        g.nodes_per_axis[a] = nodes_per_axis[a];
        g.h[a] = extents[a] / (nodes_per_axis[a] - 1);
    }
    g.node_count = g.nodes_per_axis[0] * g.nodes_per_axis[1];

    const auto wx = trapezoid_weights(g.nodes_per_axis[0], g.h[0]);
    const auto wy = dimension == 2 ? trapezoid_weights(g.nodes_per_axis[1], g.h[1]) : std::vector<double>{1.0};
    g.quadrature_weights.resize(g.node_count);
    for (int j = 0; j < g.nodes_per_axis[1]; ++j) {
        for (int i = 0; i < g.nodes_per_axis[0]; ++i) {
            g.quadrature_weights[i + g.nodes_per_axis[0] * j] = wx[i] * wy[j];
        }
    }
    return g;
}

TimeGrid build_time_grid(double final_time, int steps) {
    if (!(final_time > 0.0) || !std::isfinite(final_time)) {
        throw ValidationError("final time T must be positive");
    }
    if (steps < 1) {
        throw ValidationError("time steps must be >= 1");
    }
    return TimeGrid{final_time, steps};
}

Trajectory::Trajectory(int steps, int node_count, double value)
    : slots_(static_cast<std::size_t>(steps + 1), ScalarField::Constant(node_count, value)) {}

Trajectory Trajectory::zeros(const Grids& grids) {
    return Trajectory(grids.time.steps, grids.space.node_count, 0.0);
}

Trajectory Trajectory::constant(const Grids& grids, double value) {
    return Trajectory(grids.time.steps, grids.space.node_count, value);
}

bool Trajectory::matches(const Grids& grids) const {
    return steps() == grids.time.steps && node_count() == grids.space.node_count;
}

double Trajectory::max_abs() const {
    double m = 0.0;
    for (const auto& s : slots_) {
        if (s.size() > 0) m = std::max(m, s.cwiseAbs().maxCoeff());
    }
    return m;
}

void Trajectory::require_same_shape(const Trajectory& other) const {
    if (other.slots_.size() != slots_.size() || other.node_count() != node_count()) {
        throw ValidationError("trajectory shape mismatch");
    }
}

Trajectory& Trajectory::operator+=(const Trajectory& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < slots_.size(); ++k) slots_[k] += other.slots_[k];
    return *this;
}

Trajectory& Trajectory::operator-=(const Trajectory& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < slots_.size(); ++k) slots_[k] -= other.slots_[k];
    return *this;
}

Trajectory& Trajectory::operator*=(double s) {
    for (auto& slot : slots_) slot *= s;
    return *this;
}

Trajectory& Trajectory::axpy(double s, const Trajectory& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < slots_.size(); ++k) slots_[k] += s * other.slots_[k];
    return *this;
}

void require_field(const ScalarField& u, const SpaceGrid& grid, const char* what) {
    if (u.size() != grid.node_count) {
        throw ValidationError(std::string(what) + ": field has " + std::to_string(u.size()) +
                              " values, grid has " + std::to_string(grid.node_count) + " nodes");
    }
}

void require_trajectory(const Trajectory& u, const Grids& grids, const char* what) {
    if (!u.matches(grids)) {
        throw ValidationError(std::string(what) + ": trajectory does not match the grids (" +
                              std::to_string(u.steps()) + " steps x " + std::to_string(u.node_count()) +
                              " nodes)");
    }
}

double l2_inner(const ScalarField& u, const ScalarField& v, const SpaceGrid& grid) {
    require_field(u, grid, "l2_inner");
    require_field(v, grid, "l2_inner");
    return (grid.quadrature_weights.array() * u.array() * v.array()).sum();
}

double l2_norm(const ScalarField& u, const SpaceGrid& grid) {
    return std::sqrt(std::max(0.0, l2_inner(u, u, grid)));
}

SparseMatrix stiffness_matrix(const SpaceGrid& grid) {
    const int nx = grid.nodes_per_axis[0];
    SparseMatrix k(grid.node_count, grid.node_count);
    if (grid.dimension == 1) {
        const auto t = stiffness_1d(nx, grid.h[0]);
        k.setFromTriplets(t.begin(), t.end());
        return k;
    }
    // K = Kx (x) My + Mx (x) Ky with lumped 1D masses.
    const int ny = grid.nodes_per_axis[1];
    const auto wx = trapezoid_weights(nx, grid.h[0]);
    const auto wy = trapezoid_weights(ny, grid.h[1]);
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : stiffness_1d(nx, grid.h[0])) {
        for (int j = 0; j < ny; ++j) {
            t.emplace_back(e.row() + nx * j, e.col() + nx * j, e.value() * wy[j]);
        }
    }
    for (const auto& e : stiffness_1d(ny, grid.h[1])) {
        for (int i = 0; i < nx; ++i) {
            t.emplace_back(i + nx * e.row(), i + nx * e.col(), e.value() * wx[i]);
        }
    }
    k.setFromTriplets(t.begin(), t.end());
    return k;
}

ScalarField apply_neumann_laplacian(const ScalarField& u, const SpaceGrid& grid) {
    require_field(u, grid, "apply_neumann_laplacian");
    const SparseMatrix k = stiffness_matrix(grid);
    ScalarField r = k * u;
    return r.cwiseQuotient(grid.quadrature_weights);
}

double stiffness_pairing(const ScalarField& u, const ScalarField& v, const SpaceGrid& grid) {
    require_field(u, grid, "stiffness_pairing");
    require_field(v, grid, "stiffness_pairing");
    return u.dot(stiffness_matrix(grid) * v);
}

double l2_time_inner(const Trajectory& u, const Trajectory& v, const Grids& grids) {
    require_trajectory(u, grids, "l2_time_inner");
    require_trajectory(v, grids, "l2_time_inner");
    double s = 0.0;
    for (int k = 0; k < grids.time.steps; ++k) s += l2_inner(u[k], v[k], grids.space);
    return grids.time.dt() * s;
}

double l2_time_norm(const Trajectory& u, const Grids& grids) {
    return std::sqrt(std::max(0.0, l2_time_inner(u, u, grids)));
}

Trajectory time_derivative(const Trajectory& u, const TimeGrid& time) {
    if (u.steps() != time.steps) throw ValidationError("time_derivative: step count mismatch");
    if (time.steps < 1) throw ValidationError("time_derivative needs M >= 1");
    Trajectory d(time.steps, u.node_count());
    const double inv = 1.0 / time.dt();
    for (int k = 1; k <= time.steps; ++k) d[k] = (u[k] - u[k - 1]) * inv;
    d[0] = d[1];
    return d;
}

double h1_time_inner(const Trajectory& u, const Trajectory& v, const Grids& grids) {
    require_trajectory(u, grids, "h1_time_inner");
    require_trajectory(v, grids, "h1_time_inner");
    const double dt = grids.time.dt();
    double mass = 0.0;
    double deriv = 0.0;
    for (int k = 0; k < grids.time.steps; ++k) mass += l2_inner(u[k], v[k], grids.space);
    for (int k = 1; k <= grids.time.steps; ++k) {
        deriv += l2_inner(u[k] - u[k - 1], v[k] - v[k - 1], grids.space);
    }
    return dt * mass + deriv / dt;
}

double h1_time_norm(const Trajectory& u, const Grids& grids) {
    return std::sqrt(std::max(0.0, h1_time_inner(u, u, grids)));
}

double linf_l2_norm(const Trajectory& u, const SpaceGrid& grid) {
    double m = 0.0;
    for (int k = 0; k <= u.steps(); ++k) m = std::max(m, l2_norm(u[k], grid));
    return m;
}

RieszH1Time::RieszH1Time(const Grids& grids) : grids_(grids) {
    const int m = grids.time.steps;
    const double dt = grids.time.dt();
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < m; ++k) t.emplace_back(k, k, dt);
    for (int k = 1; k <= m; ++k) {
        t.emplace_back(k, k, 1.0 / dt);
        t.emplace_back(k - 1, k - 1, 1.0 / dt);
        t.emplace_back(k, k - 1, -1.0 / dt);
        t.emplace_back(k - 1, k, -1.0 / dt);
    }
    SparseMatrix op(m + 1, m + 1);
    op.setFromTriplets(t.begin(), t.end());
    factor_.compute(op);
    if (factor_.info() != Eigen::Success) {
        throw SolverError("H1-in-time Riesz operator factorization failed", -1, 0.0);
    }
}

Trajectory RieszH1Time::apply(const Trajectory& w) const {
    require_trajectory(w, grids_, "riesz_h1_time");
    const int m = grids_.time.steps;
    const int n = grids_.space.node_count;
    const double dt = grids_.time.dt();
    Eigen::MatrixXd rhs(m + 1, n);
    for (int k = 0; k < m; ++k) rhs.row(k) = dt * w[k].transpose();
    rhs.row(m).setZero();
    const Eigen::MatrixXd g = factor_.solve(rhs);
    Trajectory out(m, n);
    for (int k = 0; k <= m; ++k) out[k] = g.row(k).transpose();
    return out;
}

Trajectory riesz_h1_time(const Trajectory& w, const Grids& grids) {
    return RieszH1Time(grids).apply(w);
}

Trajectory random_smooth_trajectory(const Grids& grids, std::mt19937_64& rng, int modes) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int ymodes = grids.space.dimension == 2 ? modes : 1;
    const double pi = std::numbers::pi;
    std::vector<double> coef;
    for (int a = 0; a < modes; ++a) {
        for (int b = 0; b < ymodes; ++b) {
            for (int c = 0; c < modes; ++c) coef.push_back(normal(rng) / (1.0 + a + b + c));
        }
    }
    const double lx = grids.space.extents[0];
    const double ly = grids.space.extents[1];
    const double tt = grids.time.final_time;
    return sample_trajectory(grids, [&](double t, double x, double y) {
        double s = 0.0;
        std::size_t idx = 0;
        for (int a = 0; a < modes; ++a) {
            for (int b = 0; b < ymodes; ++b) {
                for (int c = 0; c < modes; ++c) {
                    s += coef[idx++] * std::cos(a * pi * x / lx) * std::cos(b * pi * y / ly) *
                         std::cos(c * pi * t / tt);
                }
            }
        }
        return s;
    });
}

}  // namespace fatigue
