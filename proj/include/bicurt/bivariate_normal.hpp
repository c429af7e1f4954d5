#pragma once

// Rectangle probabilities (and first moments over rectangles) for a general
// bivariate normal law, reduced to the standard case.

#include <array>
#include <cmath>

#include "bicurt/errors.hpp"
#include "bicurt/special_functions.hpp"

namespace bicurt {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

struct BivariateNormalParams {
    Vec2 mean{0.0, 0.0};
    Mat2 cov{{{1.0, 0.0}, {0.0, 1.0}}};

    double determinant() const { return cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0]; }
    double sd(int i) const { return std::sqrt(cov[i][i]); }
    double correlation() const { return cov[0][1] / (sd(0) * sd(1)); }

    // Throws DomainError unless cov is symmetric with positive diagonal and
    // a strictly positive determinant.
    void require_positive_definite() const {
        if (!(cov[0][0] > 0.0) || !(cov[1][1] > 0.0))
            throw DomainError("bivariate normal: variances must be positive");
        const double scale = cov[0][0] * cov[1][1];
        if (std::fabs(cov[0][1] - cov[1][0]) > 1e-12 * std::sqrt(scale))
            throw DomainError("bivariate normal: covariance must be symmetric");
        if (!(determinant() > 1e-14 * scale))
            throw DomainError("bivariate normal: covariance is degenerate");
    }
};

inline BivariateNormalParams standard_bvn(double rho) {
    return {{0.0, 0.0}, {{{1.0, rho}, {rho, 1.0}}}};
}

// Probability that a draw falls in [lo[0], hi[0]] x [lo[1], hi[1]].
// Infinite bounds are accepted on either side.
inline double bvn_rect(const BivariateNormalParams& p, const Vec2& lo, const Vec2& hi) {
    p.require_positive_definite();
    if (lo[0] > hi[0] || lo[1] > hi[1]) throw DomainError("bvn_rect: lo must not exceed hi");
    const double s0 = p.sd(0);
    const double s1 = p.sd(1);
    const double r = p.correlation();
    const double a1 = (lo[0] - p.mean[0]) / s0;
    const double a2 = (hi[0] - p.mean[0]) / s0;
    const double b1 = (lo[1] - p.mean[1]) / s1;
    const double b2 = (hi[1] - p.mean[1]) / s1;
    const double prob = bvn_cdf(a2, b2, r) - bvn_cdf(a1, b2, r) - bvn_cdf(a2, b1, r) + bvn_cdf(a1, b1, r);
    return std::max(prob, 0.0);
}

struct RectMoment {
    double prob = 0.0;          // P(rectangle)
    double first_moment = 0.0;  // E[U 1{rectangle}], U the first coordinate
};

namespace detail {

// phi(z) * P(lo <= Z' <= hi | Z = z) for standard normals with correlation r.
inline double edge_term(double z, double lo, double hi, double r) {
    if (std::isinf(z)) return 0.0;
    const double s = std::sqrt(1.0 - r * r);
    return norm_pdf(z) * (norm_cdf((hi - r * z) / s) - norm_cdf((lo - r * z) / s));
}

}  // namespace detail

// Rectangle probability together with the first moment of the first
// coordinate over the rectangle. Uses Stein's identity
//   E[Z1 g] = E[d1 g] + r E[d2 g]
// for the standardized pair, so both pieces are closed-form.
inline RectMoment bvn_rect_moment(const BivariateNormalParams& p, const Vec2& lo, const Vec2& hi) {
    const double prob = bvn_rect(p, lo, hi);
    const double s0 = p.sd(0);
    const double s1 = p.sd(1);
    const double r = p.correlation();
    const double a1 = (lo[0] - p.mean[0]) / s0;
    const double a2 = (hi[0] - p.mean[0]) / s0;
    const double b1 = (lo[1] - p.mean[1]) / s1;
    const double b2 = (hi[1] - p.mean[1]) / s1;
    const double std_moment = detail::edge_term(a1, b1, b2, r) - detail::edge_term(a2, b1, b2, r) +
                              r * (detail::edge_term(b1, a1, a2, r) - detail::edge_term(b2, a1, a2, r));
    return {prob, p.mean[0] * prob + s0 * std_moment};
}

}  // namespace bicurt
