#pragma once

// Estimation after the test stops: plug-in proportions, the Wald ellipse for
// (theta_x, theta_y), interval projections and the relative risk.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "bicurt/bivariate_normal.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/params.hpp"
#include "bicurt/special_functions.hpp"

namespace bicurt {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return lo <= v && v <= hi; }
    double width() const { return hi - lo; }
};

struct PostTestEstimate {
    double theta_hat_x = 0.0;
    double theta_hat_y = 0.0;
    double p11_hat = 0.0;
    double rho_hat = 0.0;  // NaN when a margin estimate is 0 or 1
    std::int64_t m_star = 0;
    Mat2 sigma_hat{};
    bool singular = false;
};

inline PostTestEstimate post_test_estimate(const LatticeCounts& counts, std::int64_t m_star) {
    if (m_star < 1) throw DomainError("post_test_estimate: m_star must be >= 1");
    if (counts.n00 < 0 || counts.n10 < 0 || counts.n01 < 0 || counts.n11 < 0)
        throw DomainError("post_test_estimate: counts must be nonnegative");
    if (counts.total() != m_star) throw DomainError("post_test_estimate: counts must sum to m_star");
    PostTestEstimate e;
    const double m = static_cast<double>(m_star);
    e.m_star = m_star;
    e.theta_hat_x = counts.sx() / m;
    e.theta_hat_y = counts.sy() / m;
    e.p11_hat = counts.n11 / m;
    const double c = e.p11_hat - e.theta_hat_x * e.theta_hat_y;
    e.sigma_hat = {{{e.theta_hat_x * (1.0 - e.theta_hat_x), c}, {c, e.theta_hat_y * (1.0 - e.theta_hat_y)}}};
    const auto interior = [](double t) { return t > 0.0 && t < 1.0; };
    if (interior(e.theta_hat_x) && interior(e.theta_hat_y)) {
        e.rho_hat = rho_from_p11(e.theta_hat_x, e.theta_hat_y, e.p11_hat);
        const double det = e.sigma_hat[0][0] * e.sigma_hat[1][1] - c * c;
        e.singular = !(det > 1e-14 * e.sigma_hat[0][0] * e.sigma_hat[1][1]);
    } else {
        e.rho_hat = std::numeric_limits<double>::quiet_NaN();
        e.singular = true;
    }
    return e;
}

// Chi-square quantile with two degrees of freedom.
inline double chi2_2_quantile(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("chi2 quantile: level must lie in (0, 1)");
    return -2.0 * std::log1p(-level);
}

struct ConfidenceRegion {
    double level = 0.0;
    Vec2 center{};
    double major = 0.0;
    double minor = 0.0;
    Vec2 orientation{1.0, 0.0};  // unit eigenvector of the major axis
    std::array<Interval, 2> simultaneous{};
    std::array<Interval, 2> bonferroni{};
    double chi2 = 0.0;
    bool singular = false;

    // n points on the ellipse boundary, evenly spaced in the angle of the
    // principal-axis parameterization.
    std::vector<Vec2> boundary_points(int n) const {
        std::vector<Vec2> pts;
        if (n <= 0) return pts;
        pts.reserve(static_cast<std::size_t>(n));
        const Vec2 minor_dir{-orientation[1], orientation[0]};
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * std::numbers::pi * i / n;
            const double a = major * std::cos(t);
            const double b = minor * std::sin(t);
            pts.push_back({center[0] + a * orientation[0] + b * minor_dir[0],
                           center[1] + a * orientation[1] + b * minor_dir[1]});
        }
        return pts;
    }
};

namespace detail {

// Eigen-decomposition of a symmetric 2x2 matrix: (larger, smaller, unit
// eigenvector of the larger).
inline std::tuple<double, double, Vec2> sym_eigen(const Mat2& s) {
    const double a = s[0][0], b = s[0][1], d = s[1][1];
    const double half_tr = 0.5 * (a + d);
    const double disc = std::hypot(0.5 * (a - d), b);
    const double l1 = half_tr + disc;
    const double l2 = half_tr - disc;
    Vec2 v;
    if (std::fabs(b) > 1e-300) {
        v = {b, l1 - a};
    } else {
        v = a >= d ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    const double norm = std::hypot(v[0], v[1]);
    v = {v[0] / norm, v[1] / norm};
    if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v = {-v[0], -v[1]};
    return {l1, l2, v};
}

}  // namespace detail

// Wald region {theta : M (theta_hat - theta)' Sigma^-1 (theta_hat - theta) <= chi2}.
// A singular Sigma is not an error: intervals collapse to what the plug-in
// variances give and the flag is set.
inline ConfidenceRegion confidence_region(const PostTestEstimate& est, double level) {
    const double c = chi2_2_quantile(level);
    ConfidenceRegion r;
    r.level = level;
    r.chi2 = c;
    r.center = {est.theta_hat_x, est.theta_hat_y};
    r.singular = est.singular;
    const double m = static_cast<double>(est.m_star);
    auto [l1, l2, v] = detail::sym_eigen(est.sigma_hat);
    r.major = std::sqrt(std::max(l1, 0.0) * c / m);
    r.minor = std::sqrt(std::max(l2, 0.0) * c / m);
    r.orientation = v;
    const double zb = norm_quantile(1.0 - (1.0 - level) / 4.0);
    for (int i = 0; i < 2; ++i) {
        const double var = std::max(est.sigma_hat[i][i], 0.0) / m;
        const double hs = std::sqrt(c * var);
        const double hb = zb * std::sqrt(var);
        r.simultaneous[i] = {r.center[i] - hs, r.center[i] + hs};
        r.bonferroni[i] = {r.center[i] - hb, r.center[i] + hb};
    }
    return r;
}

// Whether theta lies in the Wald region with critical value chi2. A singular
// estimate covers nothing but its own center.
inline bool wald_region_contains(const PostTestEstimate& est, const Vec2& theta, double chi2) {
    const double dx = est.theta_hat_x - theta[0];
    const double dy = est.theta_hat_y - theta[1];
    if (est.singular) return dx == 0.0 && dy == 0.0;
    const Mat2& s = est.sigma_hat;
    const double det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    const double q = (s[1][1] * dx * dx - 2.0 * s[0][1] * dx * dy + s[0][0] * dy * dy) / det;
    return static_cast<double>(est.m_star) * q <= chi2;
}

struct RelativeRiskEstimate {
    double gamma_hat = 0.0;
    double variance = 0.0;
    Interval ci;
    double level = 0.0;
};

namespace detail {

// Ratio num/den of the margins with its delta-method variance
// g((g + 1)/den - 2 p11/den^2).
inline RelativeRiskEstimate ratio_estimate(double num, double den, double p11, std::int64_t m_star, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("relative risk: level must lie in (0, 1)");
    const double g = num / den;
    RelativeRiskEstimate r;
    r.gamma_hat = g;
    r.level = level;
    r.variance = g * ((g + 1.0) / den - 2.0 * p11 / (den * den));
    const double z = norm_quantile(0.5 * (1.0 + level));
    const double h = z * std::sqrt(std::max(r.variance, 0.0) / static_cast<double>(m_star));
    r.ci = {g - h, g + h};
    return r;
}

}  // namespace detail

inline RelativeRiskEstimate relative_risk(const PostTestEstimate& est, double level) {
    if (!(est.theta_hat_y > 0.0)) throw DomainError("relative_risk: theta_hat_y is zero");
    return detail::ratio_estimate(est.theta_hat_x, est.theta_hat_y, est.p11_hat, est.m_star, level);
}

inline RelativeRiskEstimate inverse_relative_risk(const PostTestEstimate& est, double level) {
    if (!(est.theta_hat_x > 0.0)) throw DomainError("inverse_relative_risk: theta_hat_x is zero");
    return detail::ratio_estimate(est.theta_hat_y, est.theta_hat_x, est.p11_hat, est.m_star, level);
}

}  // namespace bicurt
