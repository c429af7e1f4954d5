#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bicurt/bivariate_normal.hpp"
#include "bicurt/special_functions.hpp"
#include "oracles.hpp"

using namespace bicurt;

TEST(LogGamma, SmallIntegers) {
    EXPECT_NEAR(log_gamma(1.0), 0.0, 1e-15);
    EXPECT_NEAR(log_gamma(2.0), 0.0, 1e-15);
    EXPECT_NEAR(log_gamma(11.0), std::log(3628800.0), 1e-12);
}

TEST(LogGamma, AgreesWithStdLgamma) {
    for (double x : {1e-3, 0.1, 0.5, 1.5, 3.7, 10.25, 57.0, 324.5, 1e4, 2.5e5}) {
        const double ref = std::lgamma(x);
        EXPECT_NEAR(log_gamma(x), ref, 1e-12 * std::max(1.0, std::fabs(ref))) << x;
    }
}

TEST(LogGamma, RejectsNonPositive) {
    EXPECT_THROW(log_gamma(0.0), DomainError);
    EXPECT_THROW(log_gamma(-2.5), DomainError);
}

TEST(LogFactorial, MatchesLogGammaBeyondTable) {
    for (int n : {0, 1, 5, 170, 171, 500, 3000}) EXPECT_NEAR(log_factorial(n), std::lgamma(n + 1.0), 1e-9) << n;
}

TEST(RegIncBeta, Examples) {
    for (double x : {0.0, 0.1, 0.37, 0.9, 1.0}) EXPECT_NEAR(reg_inc_beta(x, 1, 1), x, 1e-14);
    EXPECT_NEAR(reg_inc_beta(0.5, 2, 2), 0.5, 1e-14);
    EXPECT_NEAR(reg_inc_beta(0.3, 4, 7), oracle::binomial_upper_sum(10, 4, 0.3), 1e-12);
}

TEST(RegIncBeta, BinomialTailGrid) {
    for (int n = 1; n <= 30; ++n)
        for (int k = 0; k < n; ++k)
            for (double t : {0.05, 0.1, 0.3, 0.5})
                EXPECT_NEAR(reg_inc_beta(t, k + 1.0, n - k), oracle::binomial_upper_sum(n, k + 1, t), 1e-10)
                    << n << ' ' << k << ' ' << t;
}

TEST(RegIncBeta, ReflectionIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0.0, 1.0), ua(0.05, 400.0);
    for (int i = 0; i < 500; ++i) {
        const double x = ux(rng), a = ua(rng), b = ua(rng);
        EXPECT_NEAR(reg_inc_beta(x, a, b) + reg_inc_beta(1 - x, b, a), 1.0, 1e-10) << x << ' ' << a << ' ' << b;
    }
}

TEST(RegIncBeta, DomainErrors) {
    EXPECT_THROW(reg_inc_beta(-0.1, 1, 1), DomainError);
    EXPECT_THROW(reg_inc_beta(1.1, 1, 1), DomainError);
    EXPECT_THROW(reg_inc_beta(0.5, 0, 1), DomainError);
    EXPECT_THROW(reg_inc_beta(0.5, 1, -1), DomainError);
}

TEST(Normal, CdfAndQuantile) {
    EXPECT_DOUBLE_EQ(norm_cdf(0.0), 0.5);
    const double q = oracle::bisection([](double z) { return oracle::Phi(z); }, 0.975, -10, 10);
    EXPECT_NEAR(norm_quantile(0.975), q, 1e-10);
    EXPECT_NEAR(norm_quantile(0.975), 1.959964, 1e-6);
    EXPECT_NEAR(norm_quantile(norm_cdf(1.3)), 1.3, 1e-10);
    for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-9}) {
        const double ref = oracle::bisection([](double z) { return oracle::Phi(z); }, p, -40, 40);
        // the reference loses digits near 1 because Phi does
        const double tol = p > 0.999 ? 1e-7 : 1e-9;
        EXPECT_NEAR(norm_quantile(p), ref, tol * std::max(1.0, std::fabs(ref))) << p;
        EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-10 * std::max(p, 1e-3)) << p;
    }
    EXPECT_THROW(norm_quantile(0.0), DomainError);
    EXPECT_THROW(norm_quantile(1.0), DomainError);
}

TEST(Bvn, SheppardIdentity) {
    for (double r : {-0.95, -0.5, -0.1, 0.0, 0.3, 0.7, 0.99})
        EXPECT_NEAR(bvn_cdf(0, 0, r), 0.25 + std::asin(r) / (2 * std::numbers::pi), 1e-14) << r;
}

TEST(Bvn, IndependenceFactorizes) {
    for (double h : {-2.0, -0.3, 0.0, 1.1})
        for (double k : {-1.5, 0.4, 2.5}) EXPECT_NEAR(bvn_cdf(h, k, 0.0), norm_cdf(h) * norm_cdf(k), 1e-14);
}

TEST(Bvn, AgreesWithQuadrature) {
    EXPECT_NEAR(bvn_cdf(0.5, -0.3, 0.4), oracle::bvn_quadrature(0.5, -0.3, 0.4), 1e-10);
    for (double h : {-3.0, -1.2, -0.4})
        for (double k : {-2.5, -0.7, -0.1})
            for (double r : {-0.8, -0.3, 0.2, 0.6, 0.9})
                EXPECT_NEAR(bvn_cdf(h, k, r), oracle::bvn_quadrature(h, k, r), 1e-8) << h << ' ' << k << ' ' << r;
}

TEST(Bvn, MonotoneInEachLimit) {
    for (double r : {-0.7, 0.0, 0.5}) {
        double prev = 0.0;
        for (double h = -5; h <= 5; h += 0.25) {
            const double v = bvn_cdf(h, 0.3, r);
            EXPECT_GE(v, prev - 1e-15);
            prev = v;
        }
        prev = 0.0;
        for (double k = -5; k <= 5; k += 0.25) {
            const double v = bvn_cdf(-0.2, k, r);
            EXPECT_GE(v, prev - 1e-15);
            prev = v;
        }
    }
}

TEST(Bvn, RejectsUnitCorrelation) {
    EXPECT_THROW(bvn_cdf(0, 0, 1.0), DomainError);
    EXPECT_THROW(bvn_cdf(0, 0, -1.0), DomainError);
}

TEST(BvnRect, FullPlaneAndReduction) {
    const BivariateNormalParams p{{1.0, -2.0}, {{{4.0, 1.2}, {1.2, 9.0}}}};
    EXPECT_NEAR(bvn_rect(p, {-kInf, -kInf}, {kInf, kInf}), 1.0, 1e-14);
    EXPECT_NEAR(bvn_rect(standard_bvn(0.1), {-kInf, -kInf}, {0, 0}), bvn_cdf(0, 0, 0.1), 1e-15);
}

TEST(BvnRect, PartitionAdds) {
    const BivariateNormalParams p{{0.5, 1.0}, {{{2.0, -0.9}, {-0.9, 1.5}}}};
    const double box = bvn_rect(p, {-4, -3}, {5, 6});
    double parts = 0.0;
    const double xs[] = {-4, -1, 0.2, 2, 5};
    const double ys[] = {-3, 0, 1.3, 6};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) parts += bvn_rect(p, {xs[i], ys[j]}, {xs[i + 1], ys[j + 1]});
    EXPECT_NEAR(parts, box, 1e-9);
    // rectangle plus its complement
    const double inside = bvn_rect(p, {-kInf, -kInf}, {0.3, 0.8});
    const double outside = bvn_rect(p, {0.3, -kInf}, {kInf, kInf}) + bvn_rect(p, {-kInf, 0.8}, {0.3, kInf});
    EXPECT_NEAR(inside + outside, 1.0, 1e-9);
}

TEST(BvnRect, RejectsDegenerate) {
    const BivariateNormalParams p{{0, 0}, {{{1.0, 1.0}, {1.0, 1.0}}}};
    EXPECT_THROW(bvn_rect(p, {-1, -1}, {1, 1}), DomainError);
}

TEST(BvnRectMoment, AgreesWithQuadrature) {
    const BivariateNormalParams p{{2.0, 10.0}, {{{3.0, 2.1}, {2.1, 8.0}}}};
    const Vec2 lo{-kInf, 7.5}, hi{3.5, 12.5};
    const auto rm = bvn_rect_moment(p, lo, hi);
    // E[U 1{rect}] = int u f_U(u) P(W in [lo,hi] | U = u) du
    const double su = std::sqrt(3.0), sw = std::sqrt(8.0), r = 2.1 / (su * sw);
    auto cond = [&](double u) {
        const double mw = 10.0 + r * sw * (u - 2.0) / su;
        const double sd = sw * std::sqrt(1 - r * r);
        return oracle::Phi((hi[1] - mw) / sd) - oracle::Phi((lo[1] - mw) / sd);
    };
    auto dens = [&](double u) { return oracle::phi((u - 2.0) / su) / su; };
    const double prob = oracle::integrate([&](double u) { return dens(u) * cond(u); }, 2.0 - 12 * su, hi[0]);
    const double mom = oracle::integrate([&](double u) { return u * dens(u) * cond(u); }, 2.0 - 12 * su, hi[0]);
    EXPECT_NEAR(rm.prob, prob, 1e-10);
    EXPECT_NEAR(rm.first_moment, mom, 1e-9);
}
