#pragma once

#include <utility>
#include <vector>

#include "fatigue/discretization.hpp"

namespace fatigue {

struct ModelParams {
    double alpha = 1.0;      // gradient regularization
    double beta = 1.0;       // coupling penalty between q and phi
    double viscosity = 1.0;  // rate coefficient of the dissipation

    void validate() const;
};

/**
 * Plateau-then-linear-decay toughness law:
 * f(v) = c0 for v <= n_f, max(c0 - slope_m (v - n_f), floor) beyond.
 */
struct FatigueLaw {
    double c0 = 1.0;
    double n_f = 1.0;
    double slope_m = 0.0;
    double floor = 0.0;

    void validate() const;

    /// Abscissae where f is not differentiable (0, 1 or 2 of them).
    [[nodiscard]] std::vector<double> kinks() const;
};

struct SmoothingParams {
    double eps_max = 0.1;
    double eps_f = 0.1;

    void validate() const;
};

enum class KernelShape { constant, exponential, sampled };

/**
 * Scalar Volterra kernel a(tau) sampled at tau = k dt, k = 0..M, plus the
 * offset q0. H(q)_k = dt sum_{j<k} a[k-j] q_j + q0.
 */
struct HistoryKernel {
    KernelShape shape = KernelShape::constant;
    double amplitude = 0.0;
    double decay_time = 1.0;
    std::vector<double> a;
    ScalarField q0;

    static HistoryKernel constant(const Grids& grids, double amplitude, ScalarField q0);
    static HistoryKernel exponential(const Grids& grids, double amplitude, double decay_time, ScalarField q0);
    static HistoryKernel sampled(const Grids& grids, std::vector<double> a, ScalarField q0);

    void validate(const Grids& grids) const;

    [[nodiscard]] double sup_abs() const;
    [[nodiscard]] double min_value() const;
};

// ---- scalar primitives ----

double max_plus(double x);
/// Directional derivative of max(., 0) at v in direction h.
double max_dir(double v, double h);
double max_eps(double eps, double x);
double max_eps_prime(double eps, double x);

double f_eval(const FatigueLaw& law, double v);
/// (f'_+(v), f'_-(v)): right and left slopes.
std::pair<double, double> f_onesided(const FatigueLaw& law, double v);
double f_dir(const FatigueLaw& law, double v, double h);
double f_eps_eval(const FatigueLaw& law, double eps_f, double v);
double f_eps_prime(const FatigueLaw& law, double eps_f, double v);

// ---- history operator ----

/**
 * Running evaluation of dt * sum_p a[n - p] y_p over a pushed sequence
 * y_0..y_{n-1}. Constant and exponential kernels use O(N) recurrences;
 * sampled kernels keep the whole sequence.
 */
class HistoryAccumulator {
public:
    HistoryAccumulator(const HistoryKernel& kernel, const Grids& grids);

    void push(const ScalarField& y);
    /// Convolution for the next index (without q0).
    [[nodiscard]] ScalarField value() const;

private:
    const HistoryKernel* kernel_;
    double dt_;
    double ratio_ = 1.0;
    ScalarField running_;
    std::vector<ScalarField> pushed_;
};

Trajectory history_apply(const HistoryKernel& kernel, const Trajectory& q, const Grids& grids);
/// Linear part H'(q) dq (independent of q).
Trajectory history_linear_apply(const HistoryKernel& kernel, const Trajectory& dq, const Grids& grids);
/// Exact transpose of history_linear_apply under the left-rectangle pairing.
Trajectory history_adjoint_apply(const HistoryKernel& kernel, const Trajectory& mu, const Grids& grids);

/// alpha/2 phi^T K phi + beta/2 |phi - q|^2 - (ell, phi).
double energy_eval(const ModelParams& params, const ScalarField& ell, const ScalarField& phi,
                   const ScalarField& q, const SpaceGrid& grid);

}  // namespace fatigue
