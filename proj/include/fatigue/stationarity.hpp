#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fatigue/adjoint.hpp"
#include "fatigue/state_solver.hpp"

namespace fatigue {

enum class ZClass : std::uint8_t { negative = 0, zero = 1, positive = 2 };

/// Node-time masks over the (M+1) x N lattice, index k * N + i.
struct ActiveSets {
    int steps = 0;
    int nodes = 0;
    double tol_z = 0.0;
    double tol_f = 0.0;
    std::vector<ZClass> z;
    /// Index into law.kinks() of the kink H(q) sits on, or -1.
    std::vector<std::int8_t> kink;

    [[nodiscard]] std::size_t index(int k, int i) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(i);
    }
    [[nodiscard]] ZClass z_at(int k, int i) const { return z[index(k, i)]; }
    [[nodiscard]] bool kink_at(int k, int i) const { return kink[index(k, i)] >= 0; }
    [[nodiscard]] int count(ZClass c) const;
    [[nodiscard]] int kink_count() const;
};

ActiveSets classify_active_sets(const StateSolution& state, const FatigueLaw& law, double tol_z, double tol_f);

struct MultiplierBundle {
    Trajectory lambda;
    Trajectory mu;
    Trajectory Gplus;
    Trajectory Gminus;
};

/// lambda_eps and mu_eps of the smallest smoothing stage; G fields zeroed.
MultiplierBundle extract_multipliers(const AdjointSolution& adjoint);

/**
 * G+-(t_k) = dt sum_{s=k}^{M-1} (H'* eta+-)_s with
 * eta+- = chi_kink (-lambda f'_+-(kink) + mu).
 */
void compute_G(const Problem& problem, const ActiveSets& sets, MultiplierBundle& bundle);

enum class StationarityMode { limit, improved, strong };

const char* mode_name(StationarityMode mode);
StationarityMode parse_mode(const std::string& name);

struct ConditionReport {
    std::string name;
    bool graded = true;
    double residual = 0.0;   // absolute measure
    double relative = 0.0;   // residual / scale
    double tolerance = 0.0;  // applies to `relative`
    int violating = 0;
    double max_violation = 0.0;
    std::vector<std::pair<int, int>> violating_nodes;  // (k, i), capped
    bool pass = true;
};

struct Candidate {
    Trajectory ell;
    StateSolution state;  // non-smooth state of ell
    Trajectory xi;
    Trajectory w;
    MultiplierBundle bundle;
};

struct StationarityReport {
    StationarityMode mode = StationarityMode::limit;
    double tolerance = 0.0;
    double tol_z = 0.0;
    double tol_f = 0.0;
    int z_positive = 0;
    int z_zero = 0;
    int z_negative = 0;
    int kink_points = 0;
    bool strong_stationarity_applicable = false;
    std::vector<ConditionReport> conditions;
    bool pass = true;

    [[nodiscard]] const ConditionReport& condition(const std::string& name) const;
    [[nodiscard]] bool has_condition(const std::string& name) const;
};

/// Condition names appearing in reports.
namespace condition {
inline constexpr const char* adjoint_q = "adjoint_residual_q";
inline constexpr const char* adjoint_phi = "adjoint_residual_phi";
inline constexpr const char* kkt_inactive = "kkt_inactive_residual";
inline constexpr const char* gradient = "gradient_residual";
inline constexpr const char* sign_weak = "sign_violations_weak";
inline constexpr const char* sign_strong = "sign_violations_strong";
inline constexpr const char* conc_lambda = "diagnostic_lambda_in_subdifferential";
inline constexpr const char* conc_mu = "diagnostic_mu_in_subdifferential";
}  // namespace condition

/**
 * Grade a candidate against one of the optimality systems. Pointwise
 * conditions are graded at dynamic slots 1..M; slot 0 carries no dynamics.
 * `tolerance` bounds relative residuals and the sign-violation magnitudes
 * (scaled by max(1, |xi|_inf / viscosity)).
 */
StationarityReport check_system(const Problem& problem, const ObjectiveSpec& objective, const Candidate& candidate,
                                const ActiveSets& sets, StationarityMode mode, double tolerance);

/// Candidate from an optimizer result: non-smooth state at ell_star plus final-stage adjoint data.
Candidate candidate_from(const Problem& problem, const Trajectory& ell, const AdjointSolution& adjoint);

struct BStatReport {
    std::vector<double> values;
    double min_value = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

/// j'(S(ell)) S'(ell; d) + (ell, d)_{H1} for each given direction.
std::vector<double> b_stationarity_values(const Problem& problem, const ObjectiveSpec& objective,
                                          const Trajectory& ell, const std::vector<Trajectory>& directions);

/// Random smooth unit directions and their negatives.
BStatReport b_stationarity_probe(const Problem& problem, const ObjectiveSpec& objective, const Trajectory& ell,
                                 int n_directions, std::uint64_t seed, double tolerance);

}  // namespace fatigue
