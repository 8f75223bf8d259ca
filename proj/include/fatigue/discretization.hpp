#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace fatigue {

using ScalarField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/**
 * Tensor-product grid on a rectangle (1D interval or 2D box) with
 * trapezoidal quadrature weights. Node numbering is x-fastest:
 * node = i + nx * j.
 */
struct SpaceGrid {
    int dimension = 1;
    std::array<double, 2> extents{1.0, 1.0};
    std::array<int, 2> nodes_per_axis{2, 1};
    std::array<double, 2> h{1.0, 0.0};
    int node_count = 0;
    ScalarField quadrature_weights;

    [[nodiscard]] double measure() const;
    [[nodiscard]] std::array<double, 2> coordinate(int node) const;
    [[nodiscard]] bool same_as(const SpaceGrid& other) const;
};

/// Uniform partition t_k = k * dt of [0, T].
struct TimeGrid {
    double final_time = 1.0;
    int steps = 1;

    [[nodiscard]] double dt() const { return final_time / steps; }
    [[nodiscard]] double t(int k) const { return k == steps ? final_time : k * dt(); }
    [[nodiscard]] bool same_as(const TimeGrid& other) const;
};

struct Grids {
    SpaceGrid space;
    TimeGrid time;
};

SpaceGrid build_space_grid(int dimension, std::span<const double> extents,
                           std::span<const int> nodes_per_axis);
TimeGrid build_time_grid(double final_time, int steps);

/// One ScalarField per time node t_0..t_M.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int steps, int node_count, double value = 0.0);

    static Trajectory zeros(const Grids& grids);
    static Trajectory constant(const Grids& grids, double value);

    [[nodiscard]] int steps() const { return static_cast<int>(slots_.size()) - 1; }
    [[nodiscard]] int node_count() const { return slots_.empty() ? 0 : static_cast<int>(slots_.front().size()); }
    [[nodiscard]] bool matches(const Grids& grids) const;

    ScalarField& operator[](int k) { return slots_[static_cast<std::size_t>(k)]; }
    const ScalarField& operator[](int k) const { return slots_[static_cast<std::size_t>(k)]; }

    [[nodiscard]] double max_abs() const;

    Trajectory& operator+=(const Trajectory& other);
    Trajectory& operator-=(const Trajectory& other);
    Trajectory& operator*=(double s);
    /// this += s * other
    Trajectory& axpy(double s, const Trajectory& other);

    friend Trajectory operator+(Trajectory a, const Trajectory& b) { return a += b; }
    friend Trajectory operator-(Trajectory a, const Trajectory& b) { return a -= b; }
    friend Trajectory operator*(double s, Trajectory a) { return a *= s; }

private:
    void require_same_shape(const Trajectory& other) const;

    std::vector<ScalarField> slots_;
};

void require_field(const ScalarField& u, const SpaceGrid& grid, const char* what);
void require_trajectory(const Trajectory& u, const Grids& grids, const char* what);

/// Quadrature approximation of (u, v)_{L2(Omega)}.
double l2_inner(const ScalarField& u, const ScalarField& v, const SpaceGrid& grid);
double l2_norm(const ScalarField& u, const SpaceGrid& grid);

/// Stiffness matrix K with v^T K u ~ int grad u . grad v (homogeneous Neumann).
SparseMatrix stiffness_matrix(const SpaceGrid& grid);

/// Field r with l2_inner(r, psi) = psi^T K u for every psi, i.e. r = M^{-1} K u.
ScalarField apply_neumann_laplacian(const ScalarField& u, const SpaceGrid& grid);

/// u^T K v.
double stiffness_pairing(const ScalarField& u, const ScalarField& v, const SpaceGrid& grid);

/// Left-rectangle pairing sum_{k<M} dt (U_k, V_k)_{L2}.
double l2_time_inner(const Trajectory& u, const Trajectory& v, const Grids& grids);
double l2_time_norm(const Trajectory& u, const Grids& grids);

/// Backward differences on t_1..t_M; slot 0 copies slot 1.
Trajectory time_derivative(const Trajectory& u, const TimeGrid& time);

/// Discrete H1(0,T;L2) inner product: left-rectangle mass term plus the
/// backward-difference derivative term over the M cells.
double h1_time_inner(const Trajectory& u, const Trajectory& v, const Grids& grids);
double h1_time_norm(const Trajectory& u, const Grids& grids);

/// Max over time nodes of the L2(Omega) norm.
double linf_l2_norm(const Trajectory& u, const SpaceGrid& grid);

/**
 * Riesz map of the left-rectangle L2 pairing in the discrete H1(0,T;L2)
 * metric: apply(W) = g with h1_time_inner(g, d) = l2_time_inner(W, d) for all d.
 * The time operator is tridiagonal and factorized once.
 */
class RieszH1Time {
public:
    explicit RieszH1Time(const Grids& grids);

    [[nodiscard]] Trajectory apply(const Trajectory& w) const;

private:
    Grids grids_;
    Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

Trajectory riesz_h1_time(const Trajectory& w, const Grids& grids);

/**
 * Smooth pseudo-random trajectory: sum of cosine modes in x (and y) times
 * cosine modes in t with standard normal coefficients.
 */
Trajectory random_smooth_trajectory(const Grids& grids, std::mt19937_64& rng, int modes = 3);

/// Sample a function (t, x, y) -> value onto the grids.
template <typename Fn>
Trajectory sample_trajectory(const Grids& grids, Fn&& fn) {
    Trajectory out = Trajectory::zeros(grids);
    for (int k = 0; k <= grids.time.steps; ++k) {
        const double t = grids.time.t(k);
        for (int n = 0; n < grids.space.node_count; ++n) {
            const auto xy = grids.space.coordinate(n);
            out[k][n] = fn(t, xy[0], xy[1]);
        }
    }
    return out;
}

template <typename Fn>
ScalarField sample_field(const SpaceGrid& grid, Fn&& fn) {
    ScalarField out(grid.node_count);
    for (int n = 0; n < grid.node_count; ++n) {
        const auto xy = grid.coordinate(n);
        out[n] = fn(xy[0], xy[1]);
    }
    return out;
}

}  // namespace fatigue
