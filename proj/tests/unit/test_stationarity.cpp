#include <gtest/gtest.h>

#include <cmath>

#include "fatigue/errors.hpp"
#include "fatigue/stationarity.hpp"
#include "helpers.hpp"

using namespace fatigue;
using fatigue::test::grids_1d;

namespace {

StateSolution blank_state(const Grids& g) {
    StateSolution s;
    s.q = Trajectory::zeros(g);
    s.phi = Trajectory::zeros(g);
    s.z = Trajectory::zeros(g);
    s.Hq = Trajectory::zeros(g);
    return s;
}

ActiveSets blank_sets(const Grids& g, ZClass fill) {
    ActiveSets s;
    s.steps = g.time.steps;
    s.nodes = g.space.node_count;
    s.tol_z = 1e-6;
    s.tol_f = 1e-6;
    const auto size = static_cast<std::size_t>((s.steps + 1) * s.nodes);
    s.z.assign(size, fill);
    s.kink.assign(size, -1);
    return s;
}

Problem kink_problem(const Grids& g) {
    Problem p;
    p.grids = g;
    p.params = {1.0, 1.0, 0.5};
    p.law = {1.0, 2.0, 0.5, 0.0};
    p.kernel = HistoryKernel::constant(g, 1.0, ScalarField::Zero(g.space.node_count));
    return p;
}

Candidate zero_candidate(const Grids& g) {
    Candidate c;
    c.ell = Trajectory::zeros(g);
    c.state = blank_state(g);
    c.xi = Trajectory::zeros(g);
    c.w = Trajectory::zeros(g);
    c.bundle = {Trajectory::zeros(g), Trajectory::zeros(g), Trajectory::zeros(g), Trajectory::zeros(g)};
    return c;
}

}  // namespace

TEST(ActiveSets, ThresholdSemantics) {
    const auto g = grids_1d(3, 1);
    StateSolution s = blank_state(g);
    s.z[1] << 1.0, 0.0, -1e-12;
    s.z[0] << -1.0, -1.0, -1.0;
    s.Hq[1] << 2.0, 2.0 + 1e-7, 1.0;
    const ActiveSets sets = classify_active_sets(s, FatigueLaw{1.0, 2.0, 0.5, 0.0}, 1e-9, 1e-6);
    EXPECT_EQ(sets.z_at(1, 0), ZClass::positive);
    EXPECT_EQ(sets.z_at(1, 1), ZClass::zero);
    EXPECT_EQ(sets.z_at(1, 2), ZClass::zero);
    EXPECT_EQ(sets.z_at(0, 0), ZClass::negative);
    EXPECT_TRUE(sets.kink_at(1, 0));
    EXPECT_TRUE(sets.kink_at(1, 1));
    EXPECT_FALSE(sets.kink_at(1, 2));
    EXPECT_EQ(sets.count(ZClass::positive) + sets.count(ZClass::zero) + sets.count(ZClass::negative), 6);
    EXPECT_THROW(classify_active_sets(s, FatigueLaw{}, 0.0, 1e-6), ValidationError);
}

TEST(ActiveSets, AllElasticAndAllKink) {
    const auto g = grids_1d(4, 5);
    StateSolution s = blank_state(g);
    s.z = Trajectory::constant(g, -0.3);
    s.Hq = Trajectory::constant(g, 2.0);
    const ActiveSets sets = classify_active_sets(s, FatigueLaw{1.0, 2.0, 0.5, 0.0}, 1e-6, 1e-6);
    EXPECT_EQ(sets.count(ZClass::zero), 0);
    EXPECT_EQ(sets.count(ZClass::negative), 24);
    EXPECT_EQ(sets.kink_count(), 24);
}

TEST(Multipliers, ExtractCopiesLambdaMu) {
    const auto g = grids_1d(3, 4);
    AdjointSolution a;
    a.xi = Trajectory::zeros(g);
    a.w = Trajectory::zeros(g);
    a.lambda = Trajectory::zeros(g);
    a.mu = Trajectory::zeros(g);
    const MultiplierBundle b = extract_multipliers(a);
    EXPECT_EQ(b.lambda.max_abs(), 0.0);
    EXPECT_EQ(b.mu.max_abs(), 0.0);
    EXPECT_EQ(b.Gplus.max_abs(), 0.0);
}

TEST(ComputeG, EmptyKinkSetGivesZero) {
    const auto g = grids_1d(4, 6);
    const Problem p = kink_problem(g);
    std::mt19937_64 rng(1);
    MultiplierBundle b{test::random_trajectory(g, rng), test::random_trajectory(g, rng), {}, {}};
    compute_G(p, blank_sets(g, ZClass::positive), b);
    EXPECT_EQ(b.Gplus.max_abs(), 0.0);
    EXPECT_EQ(b.Gminus.max_abs(), 0.0);
}

TEST(ComputeG, ThreeStepHandValue) {
    // Kink at (k=2, i=0), a = 1, lambda = 0, mu = 1:
    // (H'* eta)_s = dt for s in {0, 1}; G(t_k) = dt * sum_{s=k}^{2} (H'* eta)_s.
    const auto g = grids_1d(2, 3);
    const Problem p = kink_problem(g);
    ActiveSets sets = blank_sets(g, ZClass::positive);
    sets.kink[sets.index(2, 0)] = 0;
    MultiplierBundle b{Trajectory::zeros(g), Trajectory::zeros(g), {}, {}};
    b.mu[2][0] = 1.0;
    compute_G(p, sets, b);
    const double dt = 1.0 / 3.0;
    const double expect[] = {2.0 * dt * dt, dt * dt, 0.0, 0.0};
    for (int k = 0; k <= 3; ++k) {
        EXPECT_NEAR(b.Gplus[k][0], expect[k], 1e-15);
        EXPECT_NEAR(b.Gminus[k][0], expect[k], 1e-15);
        EXPECT_EQ(b.Gplus[k][1], 0.0);
    }
}

TEST(ComputeG, RightSlopeEntersOnlyGplus) {
    const auto g = grids_1d(2, 3);
    const Problem p = kink_problem(g);
    ActiveSets sets = blank_sets(g, ZClass::positive);
    sets.kink[sets.index(2, 1)] = 0;
    MultiplierBundle b{Trajectory::zeros(g), Trajectory::zeros(g), {}, {}};
    b.lambda[2][1] = 2.0;
    compute_G(p, sets, b);
    // eta+ = -lambda f'_+(n_f) = 1, eta- = -lambda f'_-(n_f) = 0
    const double dt = 1.0 / 3.0;
    EXPECT_NEAR(b.Gplus[0][1], 2.0 * dt * dt, 1e-15);
    EXPECT_EQ(b.Gminus.max_abs(), 0.0);
}

TEST(CheckSystem, ZeroCandidateForZeroProblem) {
    const auto g = grids_1d(5, 8);
    const Problem p = kink_problem(g);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    Candidate c = zero_candidate(g);
    c.state = solve_state(p, c.ell);
    const ActiveSets sets = classify_active_sets(c.state, p.law, 1e-6, 1e-6);
    EXPECT_EQ(sets.count(ZClass::negative), 5 * 9);
    for (auto mode : {StationarityMode::limit, StationarityMode::improved, StationarityMode::strong}) {
        const auto rep = check_system(p, obj, c, sets, mode, 1e-8);
        EXPECT_TRUE(rep.pass) << mode_name(mode);
        for (const auto& cr : rep.conditions) EXPECT_EQ(cr.residual, 0.0) << cr.name;
    }
}

TEST(CheckSystem, SingleSignViolationReported) {
    const auto g = grids_1d(5, 8);
    const Problem p = kink_problem(g);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    Candidate c = zero_candidate(g);
    ActiveSets sets = blank_sets(g, ZClass::negative);
    sets.z[sets.index(4, 2)] = ZClass::zero;
    c.bundle.lambda[4][2] = -1.0;
    const auto rep = check_system(p, obj, c, sets, StationarityMode::improved, 1e-8);
    const auto& cr = rep.condition(condition::sign_weak);
    EXPECT_EQ(cr.violating, 1);
    ASSERT_EQ(cr.violating_nodes.size(), 1u);
    EXPECT_EQ(cr.violating_nodes[0], std::make_pair(4, 2));
    EXPECT_DOUBLE_EQ(cr.max_violation, 1.0);
    EXPECT_FALSE(cr.pass);
    EXPECT_FALSE(rep.has_condition(condition::sign_strong));
    EXPECT_TRUE(check_system(p, obj, c, sets, StationarityMode::strong, 1e-8).has_condition(condition::sign_strong));
}

TEST(CheckSystem, ConcDiagnosticsAreUngraded) {
    const auto g = grids_1d(5, 8);
    const Problem p = kink_problem(g);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    Candidate c = zero_candidate(g);
    ActiveSets sets = blank_sets(g, ZClass::negative);
    sets.z[sets.index(3, 1)] = ZClass::zero;
    c.bundle.lambda[3][1] = 5.0;  // outside [0, xi/visc] = {0}
    const auto rep = check_system(p, obj, c, sets, StationarityMode::limit, 1e-8);
    const auto& d = rep.condition(condition::conc_lambda);
    EXPECT_FALSE(d.graded);
    EXPECT_EQ(d.violating, 1);
    EXPECT_FALSE(d.pass);
    bool graded_ok = true;
    for (const auto& cr : rep.conditions) graded_ok = graded_ok && (!cr.graded || cr.pass);
    EXPECT_EQ(rep.pass, graded_ok);
}

TEST(CheckSystem, StrongFeasibleBundlesPassImproved) {
    const auto g = grids_1d(6, 10);
    const Problem p = kink_problem(g);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    const double m = p.law.slope_m;
    const double visc = p.params.viscosity;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep_i = 0; rep_i < 20; ++rep_i) {
        Candidate c = zero_candidate(g);
        ActiveSets sets = blank_sets(g, ZClass::negative);
        c.xi = test::random_trajectory(g, rng);
        for (int k = 1; k <= g.time.steps; ++k) {
            for (int i = 0; i < g.space.node_count; ++i) {
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
                // f'_+(n_f) lam <= mu <= f'_-(n_f) lam, i.e. -m lam <= mu <= 0
                c.bundle.mu[k][i] = kink ? -m * lam * u(rng) : 0.0;
            }
        }
        compute_G(p, sets, c.bundle);
        const auto strong = check_system(p, obj, c, sets, StationarityMode::strong, 1e-12);
        EXPECT_EQ(strong.condition(condition::sign_strong).violating, 0);
        const auto improved = check_system(p, obj, c, sets, StationarityMode::improved, 1e-12);
        EXPECT_EQ(improved.condition(condition::sign_weak).violating, 0);
        for (int k = 0; k <= g.time.steps; ++k) {
            EXPECT_GE(c.bundle.Gplus[k].minCoeff(), 0.0);
            EXPECT_LE(c.bundle.Gminus[k].maxCoeff(), 0.0);
        }
    }
}

TEST(CheckSystem, RejectsMismatchedCandidate) {
    const auto g = grids_1d(5, 8);
    const Problem p = kink_problem(g);
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    Candidate c = zero_candidate(grids_1d(4, 8));
    EXPECT_THROW(check_system(p, obj, c, blank_sets(g, ZClass::negative), StationarityMode::limit, 1e-8),
                 ValidationError);
    EXPECT_THROW(parse_mode("weak"), ValidationError);
    EXPECT_EQ(parse_mode("strong"), StationarityMode::strong);
}

TEST(BProbe, ConvexFrozenProblemAtZero) {
    const auto g = grids_1d(11, 20);
    Problem p = kink_problem(g);
    p.law.c0 = 100.0;
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    const auto rep = b_stationarity_probe(p, obj, Trajectory::zeros(g), 10, 3, 1e-12);
    EXPECT_EQ(rep.values.size(), 20u);
    EXPECT_NEAR(rep.min_value, 0.0, 1e-12);
    EXPECT_TRUE(rep.pass);
}

TEST(BProbe, NonOptimalPointHasDescentDirection) {
    const auto g = grids_1d(11, 20);
    Problem p = kink_problem(g);
    p.law.c0 = 100.0;
    const ObjectiveSpec obj{Trajectory::zeros(g), 0.0, std::nullopt};
    const Trajectory ell = Trajectory::constant(g, 0.4);
    const auto rep = b_stationarity_probe(p, obj, ell, 5, 3, 1e-6);
    EXPECT_LT(rep.min_value, 0.0);
    EXPECT_FALSE(rep.pass);
    // -ell is the negative gradient of 1/2 |ell|^2.
    const auto v = b_stationarity_values(p, obj, ell, {-1.0 * ell});
    EXPECT_NEAR(v[0], -h1_time_inner(ell, ell, g), 1e-12);
}
