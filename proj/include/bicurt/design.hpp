#pragma once

// Per-margin fixed-sample (N*, k*) design and the pooled bivariate
// curtailed design built from two margins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "bicurt/errors.hpp"
#include "bicurt/special_functions.hpp"

namespace bicurt {

enum class Rounding { nearest, floor };
enum class DesignMethod { approx, exact_refine };

inline const char* to_string(Rounding r) { return r == Rounding::nearest ? "nearest" : "floor"; }
inline const char* to_string(DesignMethod m) { return m == DesignMethod::approx ? "approx" : "exact-refine"; }

struct MarginalDesign {
    double alpha_tilde = 0.0;
    double beta = 0.0;
    double theta0 = 0.0;
    double theta1 = 0.0;
    int n_star = 0;
    int k_star = 0;

    friend bool operator==(const MarginalDesign&, const MarginalDesign&) = default;
};

struct BivariateDesign {
    MarginalDesign x;
    MarginalDesign y;
    int n_star = 0;   // min(x.n_star, y.n_star)
    int k_lower = 0;  // min(x.k_star, y.k_star)

    int kx() const { return x.k_star; }
    int ky() const { return y.k_star; }

    friend bool operator==(const BivariateDesign&, const BivariateDesign&) = default;
};

// Upper binomial tail P(S_n > k) for S_n ~ Bin(n, theta).
inline double binomial_upper_tail(int n, int k, double theta) {
    if (k < 0) return 1.0;
    if (k >= n) return 0.0;
    return reg_inc_beta(theta, k + 1.0, static_cast<double>(n - k));
}

inline double round_with(double v, Rounding r) {
    return r == Rounding::nearest ? std::nearbyint(v) : std::floor(v);
}

// k = [n (z_{1-alpha} sqrt(theta0 (1 - theta0) / n) + theta0) - 1/2]
inline int critical_value_for_n(double alpha_tilde, double theta0, int n, Rounding rounding = Rounding::nearest) {
    if (n < 1) throw DomainError("critical_value_for_n: n must be >= 1");
    if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) throw DomainError("critical_value_for_n: alpha must lie in (0, 1)");
    if (!(theta0 > 0.0 && theta0 < 1.0)) throw DomainError("critical_value_for_n: theta0 must lie in (0, 1)");
    const double z = norm_quantile(1.0 - alpha_tilde);
    const double v = n * (z * std::sqrt(theta0 * (1.0 - theta0) / n) + theta0) - 0.5;
    return static_cast<int>(round_with(v, rounding));
}

// Normal-approximation sample size, before rounding.
inline double approx_sample_size(double alpha_tilde, double beta, double theta0, double theta1) {
    const double za = norm_quantile(1.0 - alpha_tilde);
    const double zb = norm_quantile(1.0 - beta);
    const double num = za * std::sqrt(theta0 * (1.0 - theta0)) + zb * std::sqrt(theta1 * (1.0 - theta1));
    const double ratio = num / (theta1 - theta0);
    return ratio * ratio;
}

namespace detail {

inline void check_marginal_inputs(double alpha_tilde, double beta, double theta0, double theta1) {
    if (!(alpha_tilde > 0.0 && alpha_tilde < 0.5)) throw DomainError("design: alpha_tilde must lie in (0, 0.5)");
    if (!(beta > 0.0 && beta < 0.5)) throw DomainError("design: beta must lie in (0, 0.5)");
    if (!(theta0 > 0.0 && theta1 < 1.0 && theta0 < theta1))
        throw DomainError("design: require 0 < theta0 < theta1 < 1");
}

}  // namespace detail

// Smallest k with P_{theta0}(S_n > k) <= alpha_tilde.
inline int exact_critical_value(double alpha_tilde, double theta0, int n) {
    int k = 0;
    while (k < n && binomial_upper_tail(n, k, theta0) > alpha_tilde) ++k;
    return k;
}

inline MarginalDesign design_marginal(double alpha_tilde, double beta, double theta0, double theta1,
                                      DesignMethod method = DesignMethod::approx,
                                      Rounding rounding = Rounding::nearest) {
    detail::check_marginal_inputs(alpha_tilde, beta, theta0, theta1);
    MarginalDesign d{alpha_tilde, beta, theta0, theta1, 0, 0};
    const int n_approx = std::max(1, static_cast<int>(std::nearbyint(approx_sample_size(alpha_tilde, beta, theta0, theta1))));
    if (method == DesignMethod::approx) {
        d.n_star = n_approx;
        d.k_star = std::clamp(critical_value_for_n(alpha_tilde, theta0, n_approx, rounding), 0, n_approx - 1);
        return d;
    }
    const int n_max = 4 * n_approx + 1000;
    for (int n = std::max(1, n_approx - 5); n <= n_max; ++n) {
        const int k = exact_critical_value(alpha_tilde, theta0, n);
        if (k >= n) continue;
        if (1.0 - binomial_upper_tail(n, k, theta1) <= beta) {
            d.n_star = n;
            d.k_star = k;
            return d;
        }
    }
    throw NumericalError("design_marginal: exact refinement found no admissible sample size");
}

inline BivariateDesign combine(const MarginalDesign& x, const MarginalDesign& y) {
    return {x, y, std::min(x.n_star, y.n_star), std::min(x.k_star, y.k_star)};
}

// A design given directly by its boundaries; the marginal error targets are
// left unspecified (zero).
inline BivariateDesign design_from_boundaries(int n_star, int kx, int ky) {
    if (n_star < 1) throw DomainError("design: n_star must be >= 1");
    if (kx < 0 || ky < 0) throw DomainError("design: critical values must be nonnegative");
    MarginalDesign x{};
    x.n_star = n_star;
    x.k_star = kx;
    MarginalDesign y{};
    y.n_star = n_star;
    y.k_star = ky;
    return combine(x, y);
}

// FNV-1a over the fields that determine the test's behaviour; embedded in
// saved monitor state so a stream cannot be resumed under another design.
inline std::uint64_t design_fingerprint(const BivariateDesign& d) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::int64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<std::uint64_t>((v >> (8 * i)) & 0xff);
            h *= 1099511628211ULL;
        }
    };
    mix(d.n_star);
    mix(d.x.k_star);
    mix(d.y.k_star);
    mix(d.x.n_star);
    mix(d.y.n_star);
    return h;
}

}  // namespace bicurt
