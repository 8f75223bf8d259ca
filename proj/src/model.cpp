#include "fatigue/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

struct Kink {
    double at;
    double left_slope;
    double right_slope;
};

std::vector<Kink> kink_list(const FatigueLaw& law) {
    std::vector<Kink> out;
    if (law.slope_m <= 0.0 || law.floor >= law.c0) return out;
    out.push_back({law.n_f, 0.0, -law.slope_m});
    out.push_back({law.n_f + (law.c0 - law.floor) / law.slope_m, -law.slope_m, 0.0});
    return out;
}

void require_blend_fits(const FatigueLaw& law, double eps_f) {
    if (!positive_finite(eps_f)) throw ValidationError("eps_f must be positive");
    const auto k = kink_list(law);
    if (k.size() == 2 && k[1].at - k[0].at < 2.0 * eps_f) {
        throw ValidationError("eps_f too large: the smoothing intervals of the two kinks of f overlap");
    }
}

}  // namespace

void ModelParams::validate() const {
    if (!positive_finite(alpha)) throw ValidationError("model.alpha must be > 0");
    if (!positive_finite(beta)) throw ValidationError("model.beta must be > 0");
    if (!positive_finite(viscosity)) throw ValidationError("model.viscosity must be > 0");
}

void FatigueLaw::validate() const {
    if (!(c0 >= 0.0) || !std::isfinite(c0)) throw ValidationError("law.c0 must be >= 0");
    if (!std::isfinite(n_f)) throw ValidationError("law.n_f must be finite");
    if (!(slope_m >= 0.0) || !std::isfinite(slope_m)) throw ValidationError("law.slope must be >= 0");
    if (!(floor >= 0.0) || floor > c0) throw ValidationError("law.floor must satisfy 0 <= floor <= c0");
}

std::vector<double> FatigueLaw::kinks() const {
    std::vector<double> out;
    for (const auto& k : kink_list(*this)) out.push_back(k.at);
    return out;
}

void SmoothingParams::validate() const {
    if (!positive_finite(eps_max)) throw ValidationError("smoothing.eps_max must be > 0");
    if (!positive_finite(eps_f)) throw ValidationError("smoothing.eps_f must be > 0");
}

HistoryKernel HistoryKernel::constant(const Grids& grids, double amplitude, ScalarField q0) {
    HistoryKernel k;
    k.shape = KernelShape::constant;
    k.amplitude = amplitude;
    k.a.assign(static_cast<std::size_t>(grids.time.steps + 1), amplitude);
    k.q0 = std::move(q0);
    return k;
}

HistoryKernel HistoryKernel::exponential(const Grids& grids, double amplitude, double decay_time,
                                         ScalarField q0) {
    if (!positive_finite(decay_time)) throw ValidationError("kernel.decay_time must be > 0");
    HistoryKernel k;
    k.shape = KernelShape::exponential;
    k.amplitude = amplitude;
    k.decay_time = decay_time;
    k.a.resize(static_cast<std::size_t>(grids.time.steps + 1));
    for (int j = 0; j <= grids.time.steps; ++j) {
        k.a[static_cast<std::size_t>(j)] = amplitude * std::exp(-grids.time.t(j) / decay_time);
    }
    k.q0 = std::move(q0);
    return k;
}

HistoryKernel HistoryKernel::sampled(const Grids& grids, std::vector<double> a, ScalarField q0) {
    if (static_cast<int>(a.size()) != grids.time.steps + 1) {
        throw ValidationError("kernel.samples needs exactly steps+1 = " + std::to_string(grids.time.steps + 1) +
                              " values, got " + std::to_string(a.size()));
    }
    HistoryKernel k;
    k.shape = KernelShape::sampled;
    k.a = std::move(a);
    k.q0 = std::move(q0);
    return k;
}

void HistoryKernel::validate(const Grids& grids) const {
    if (static_cast<int>(a.size()) != grids.time.steps + 1) {
        throw ValidationError("history kernel length does not match the time grid");
    }
    for (double v : a) {
        if (!std::isfinite(v)) throw ValidationError("history kernel has non-finite samples");
    }
    require_field(q0, grids.space, "kernel.q0");
}

double HistoryKernel::sup_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double HistoryKernel::min_value() const {
    return a.empty() ? 0.0 : *std::min_element(a.begin(), a.end());
}

double max_plus(double x) { return x > 0.0 ? x : 0.0; }

double max_dir(double v, double h) {
    if (v > 0.0) return h;
    if (v < 0.0) return 0.0;
    return max_plus(h);
}

double max_eps(double eps, double x) {
    if (!(eps > 0.0)) throw ValidationError("max_eps: eps must be > 0");
    if (x <= 0.0) return 0.0;
    if (x < eps) return x * x / (2.0 * eps);
    return x - 0.5 * eps;
}

double max_eps_prime(double eps, double x) {
    if (!(eps > 0.0)) throw ValidationError("max_eps_prime: eps must be > 0");
    if (x <= 0.0) return 0.0;
    if (x < eps) return x / eps;
    return 1.0;
}

double f_eval(const FatigueLaw& law, double v) {
    if (v <= law.n_f) return law.c0;
    return std::max(law.c0 - law.slope_m * (v - law.n_f), law.floor);
}

std::pair<double, double> f_onesided(const FatigueLaw& law, double v) {
    const auto k = kink_list(law);
    if (k.empty()) return {0.0, 0.0};
    const double m = law.slope_m;
    if (v < k[0].at) return {0.0, 0.0};
    if (v == k[0].at) return {-m, 0.0};
    if (v < k[1].at) return {-m, -m};
    if (v == k[1].at) return {0.0, -m};
    return {0.0, 0.0};
}

double f_dir(const FatigueLaw& law, double v, double h) {
    const auto [right, left] = f_onesided(law, v);
    return h >= 0.0 ? right * h : left * h;
}

double f_eps_eval(const FatigueLaw& law, double eps_f, double v) {
    require_blend_fits(law, eps_f);
    for (const auto& k : kink_list(law)) {
        if (v > k.at - eps_f && v < k.at + eps_f) {
            const double s = v - k.at + eps_f;
            return f_eval(law, k.at - eps_f) + k.left_slope * s +
                   (k.right_slope - k.left_slope) * s * s / (4.0 * eps_f);
        }
    }
    return f_eval(law, v);
}

double f_eps_prime(const FatigueLaw& law, double eps_f, double v) {
    require_blend_fits(law, eps_f);
    for (const auto& k : kink_list(law)) {
        if (v > k.at - eps_f && v < k.at + eps_f) {
            const double s = v - k.at + eps_f;
            return k.left_slope + (k.right_slope - k.left_slope) * s / (2.0 * eps_f);
        }
    }
    // Off the blend intervals f is differentiable, so both one-sided slopes agree.
    return f_onesided(law, v).first;
}

HistoryAccumulator::HistoryAccumulator(const HistoryKernel& kernel, const Grids& grids)
    : kernel_(&kernel), dt_(grids.time.dt()), running_(ScalarField::Zero(grids.space.node_count)) {
    if (kernel.shape == KernelShape::exponential) ratio_ = std::exp(-dt_ / kernel.decay_time);
}

void HistoryAccumulator::push(const ScalarField& y) {
    switch (kernel_->shape) {
        case KernelShape::constant:
            running_ += y;
            break;
        case KernelShape::exponential:
            running_ = ratio_ * (running_ + y);
            break;
        case KernelShape::sampled:
            pushed_.push_back(y);
            break;
    }
}

ScalarField HistoryAccumulator::value() const {
    if (kernel_->shape != KernelShape::sampled) return (dt_ * kernel_->amplitude) * running_;
    ScalarField out = ScalarField::Zero(running_.size());
    const std::size_t n = pushed_.size();
    for (std::size_t p = 0; p < n; ++p) out += kernel_->a[n - p] * pushed_[p];
    return dt_ * out;
}

Trajectory history_linear_apply(const HistoryKernel& kernel, const Trajectory& dq, const Grids& grids) {
    require_trajectory(dq, grids, "history_apply");
    kernel.validate(grids);
    Trajectory out = Trajectory::zeros(grids);
    HistoryAccumulator acc(kernel, grids);
    for (int k = 1; k <= grids.time.steps; ++k) {
        acc.push(dq[k - 1]);
        out[k] = acc.value();
    }
    return out;
}

Trajectory history_apply(const HistoryKernel& kernel, const Trajectory& q, const Grids& grids) {
    Trajectory out = history_linear_apply(kernel, q, grids);
    for (int k = 0; k <= grids.time.steps; ++k) out[k] += kernel.q0;
    return out;
}

Trajectory history_adjoint_apply(const HistoryKernel& kernel, const Trajectory& mu, const Grids& grids) {
    require_trajectory(mu, grids, "history_adjoint_apply");
    kernel.validate(grids);
    const int m = grids.time.steps;
    Trajectory out = Trajectory::zeros(grids);
    // (H'* mu)_j = dt sum_{i=j+1}^{M-1} a[i-j] mu_i; mu_M carries no weight.
    HistoryAccumulator acc(kernel, grids);
    acc.push(ScalarField::Zero(grids.space.node_count));
    for (int j = m - 1; j >= 0; --j) {
        out[j] = acc.value();
        acc.push(mu[j]);
    }
    return out;
}

double energy_eval(const ModelParams& params, const ScalarField& ell, const ScalarField& phi,
                   const ScalarField& q, const SpaceGrid& grid) {
    require_field(ell, grid, "energy_eval");
    require_field(phi, grid, "energy_eval");
    require_field(q, grid, "energy_eval");
    const ScalarField diff = phi - q;
    return 0.5 * params.alpha * stiffness_pairing(phi, phi, grid) +
           0.5 * params.beta * l2_inner(diff, diff, grid) - l2_inner(ell, phi, grid);
}

}  // namespace fatigue
