#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bicurt/asymptotic.hpp"
#include "bicurt/exact.hpp"

using namespace bicurt;

namespace {

const BivariateDesign kReference = design_from_boundaries(121, 19, 18);

BivariateDesign table4_design(double delta) {
    return combine(design_marginal(0.025, 0.1, 0.05, 0.05 * (1 + delta)),
                   design_marginal(0.025, 0.1, 0.1, 0.1 * (1 + delta)));
}

}  // namespace

TEST(GutParams, MeanAndCovariance) {
    const auto p = make_params(0.1, 0.2, 0.1);
    const auto g = gut_params(p, 18, Boundary::x);
    EXPECT_NEAR(g.mean()[0], 38.0, 1e-12);
    EXPECT_NEAR(g.mean()[1], 190.0, 1e-12);
    EXPECT_NEAR(g.cov()[1][1], 19 * 0.9 / 0.01, 1e-9);
    EXPECT_NEAR(g.cov()[0][1], g.cov()[1][0], 0.0);
    // The Y-boundary law of p equals the X-boundary law of the swapped pair.
    const auto gy = gut_params(p, 18, Boundary::y);
    const auto gs = gut_params(p.swapped(), 18, Boundary::x);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(gy.mean()[i], gs.mean()[i], 1e-12);
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(gy.cov()[i][j], gs.cov()[i][j], 1e-9);
    }
}

// theta_x + theta_y - 2 p11 vanishes only at rho = 1 with equal margins,
// which make_params already refuses; what remains is argument checking.
TEST(GutParams, RejectsBadArguments) {
    EXPECT_THROW(gut_params(make_params(0.3, 0.3, 0.0), 10, Boundary::none), DomainError);
    EXPECT_THROW(gut_params(make_params(0.3, 0.3, 0.0), 10, Boundary::corner), DomainError);
    EXPECT_THROW(gut_params(make_params(0.3, 0.3, 0.0), -1, Boundary::x), DomainError);
    EXPECT_NO_THROW(gut_params(make_params(0.3, 0.3, 0.999), 10, Boundary::x));
}

// Walk until S^x reaches k + 1 with no truncation and compare moments of
// (S^y at that time, time) with the limit law.
TEST(GutParams, MatchesSimulatedWalk) {
    const auto p = make_params(0.1, 0.2, 0.3);
    const int k = 60;
    const auto g = gut_params(p, k, Boundary::x);
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int reps = 20000;
    double s1 = 0, s2 = 0, w1 = 0, w2 = 0, sw = 0;
    for (int r = 0; r < reps; ++r) {
        int sx = 0, sy = 0, m = 0;
        while (sx <= k) {
            const double v = u(rng);
            ++m;
            if (v < p.p11()) {
                ++sx;
                ++sy;
            } else if (v < p.p11() + p.p10()) {
                ++sx;
            } else if (v < p.p11() + p.p10() + p.p01()) {
                ++sy;
            }
        }
        s1 += sy;
        s2 += double(sy) * sy;
        w1 += m;
        w2 += double(m) * m;
        sw += double(sy) * m;
    }
    const double ms = s1 / reps, mw = w1 / reps;
    EXPECT_NEAR(ms / g.mean()[0], 1.0, 0.02);
    EXPECT_NEAR(mw / g.mean()[1], 1.0, 0.02);
    EXPECT_NEAR((s2 / reps - ms * ms) / g.cov()[0][0], 1.0, 0.05);
    EXPECT_NEAR((w2 / reps - mw * mw) / g.cov()[1][1], 1.0, 0.05);
    EXPECT_NEAR((sw / reps - ms * mw) / g.cov()[0][1], 1.0, 0.05);
}

TEST(AsymptoticPower, CloseToExactOnReferenceDesign) {
    for (auto [tx, ty] : {std::pair{0.05, 0.1}, {0.1, 0.2}}) {
        const auto p = make_params(tx, ty, 0.1);
        const double exact = power_exact(kReference, p);
        EXPECT_NEAR(power_asymptotic(kReference, p, AsymptoticPowerForm::curtailed_normal), exact, 0.01);
    }
    // The boundary-law form is looser at the null and is regression-locked.
    EXPECT_NEAR(power_asymptotic(kReference, make_params(0.05, 0.1, 0.1), AsymptoticPowerForm::gut), 0.0494, 5e-4);
    EXPECT_NEAR(power_asymptotic(kReference, make_params(0.1, 0.2, 0.1), AsymptoticPowerForm::gut), 0.9211, 5e-4);
}

TEST(BoundaryHitProbs, SymmetricUnderSwap) {
    const auto p = make_params(0.12, 0.18, 0.2);
    const auto d = design_from_boundaries(150, 20, 25);
    const auto h = boundary_hit_probs(d, p);
    const auto s = boundary_hit_probs(design_from_boundaries(150, 25, 20), p.swapped());
    EXPECT_NEAR(h.x_first, s.y_first, 1e-12);
    EXPECT_NEAR(h.y_first, s.x_first, 1e-12);
}

TEST(BoundaryHitProbs, DominantMarginTakesTheMass) {
    const auto h = boundary_hit_probs(kReference, make_params(0.02, 0.3, 0.0));
    EXPECT_GT(h.y_first, 0.99);
    EXPECT_LT(h.x_first, 1e-4);
}

TEST(AsymptoticPmf, RegressionAtReferenceAlternative) {
    const auto p = make_params(0.1, 0.2, 0.1);
    const double tv = total_variation(stopping_pmf_asymptotic(kReference, p), stopping_pmf_exact(kReference, p));
    EXPECT_NEAR(tv, 0.0540, 1e-3);
}

TEST(AsymptoticPmf, DistanceShrinksWithDelta) {
    const auto p1 = [](double delta) { return make_params(0.05 * (1 + delta), 0.1 * (1 + delta), 0.1); };
    double prev = 1.0;
    for (double delta : {0.5, 0.3, 0.2}) {
        const auto d = table4_design(delta);
        const double tv = total_variation(stopping_pmf_asymptotic(d, p1(delta)), lattice_forward_dp(d, p1(delta)));
        EXPECT_LT(tv, prev) << delta;
        prev = tv;
    }
    EXPECT_LE(prev, 0.05);
}

TEST(AsymptoticEstimator, CloseToExact) {
    for (auto [tx, ty] : {std::pair{0.05, 0.1}, {0.1, 0.2}, {0.15, 0.1}}) {
        const auto p = make_params(tx, ty, 0.1);
        for (Margin mg : {Margin::x, Margin::y})
            EXPECT_NEAR(estimator_expectation_asymptotic(kReference, p, mg), estimator_expectation_exact(kReference, p, mg),
                        0.01)
                << tx << ' ' << ty;
    }
}

// Where both boundaries compete at N* = 121 the normal form is visibly off;
// locked so changes show up.
TEST(AsymptoticEstimator, CompetingBoundariesRegression) {
    const auto p = make_params(0.25, 0.25, 0.1);
    EXPECT_NEAR(estimator_expectation_asymptotic(kReference, p, Margin::x), 0.237396, 1e-5);
    EXPECT_NEAR(estimator_expectation_exact(kReference, p, Margin::x), 0.255063, 1e-5);
}

TEST(FinalCountLaw, Moments) {
    const auto p = make_params(0.2, 0.3, 0.25);
    const auto law = final_count_law(100, p);
    EXPECT_NEAR(law.mean[0], 20.0, 1e-12);
    EXPECT_NEAR(law.cov[0][0], 100 * 0.2 * 0.8, 1e-12);
    EXPECT_NEAR(law.cov[0][1], 100 * (p.p11() - 0.06), 1e-12);
}
