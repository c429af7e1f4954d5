#pragma once

// Exact finite-sample operating characteristics of the curtailed bivariate
// test. Two independent routes are provided:
//   * closed-form negative-multinomial sums over the lattice paths that end
//     on each boundary (stopping_pmf_exact, non_rejection_prob, ...);
//   * a forward dynamic program over the alive lattice states
//     (lattice_forward_dp), used as an oracle and as the fast path for
//     large designs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/params.hpp"
#include "bicurt/special_functions.hpp"
#include "bicurt/summation.hpp"

namespace bicurt {

enum class Boundary { none, x, y, corner };
enum class Margin { x, y };

inline const char* to_string(Boundary b) {
    switch (b) {
        case Boundary::none: return "none";
        case Boundary::x: return "X";
        case Boundary::y: return "Y";
        case Boundary::corner: return "corner";
    }
    return "unknown";
}

struct LatticeCounts {
    std::int64_t n00 = 0;
    std::int64_t n10 = 0;
    std::int64_t n01 = 0;
    std::int64_t n11 = 0;

    std::int64_t sx() const { return n10 + n11; }
    std::int64_t sy() const { return n01 + n11; }
    std::int64_t total() const { return n00 + n10 + n01 + n11; }

    void add(int x, int y) {
        if (x && y) {
            ++n11;
        } else if (x) {
            ++n10;
        } else if (y) {
            ++n01;
        } else {
            ++n00;
        }
    }

    friend bool operator==(const LatticeCounts&, const LatticeCounts&) = default;
};

// Distribution of the stopping time M over {k_lower+1, ..., N*}, split by
// the boundary that triggered the stop, plus the non-rejection mass.
struct StoppingPmf {
    int first_m = 1;
    int n_star = 0;
    std::vector<double> hit_x;
    std::vector<double> hit_y;
    std::vector<double> hit_corner;
    double continue_mass = 0.0;

    static StoppingPmf empty_for(const BivariateDesign& d) {
        StoppingPmf p;
        p.first_m = d.k_lower + 1;
        p.n_star = d.n_star;
        const std::size_t len = static_cast<std::size_t>(std::max(0, d.n_star - d.k_lower));
        p.hit_x.assign(len, 0.0);
        p.hit_y.assign(len, 0.0);
        p.hit_corner.assign(len, 0.0);
        return p;
    }

    bool in_support(int m) const { return m >= first_m && m <= n_star; }
    double x_at(int m) const { return in_support(m) ? hit_x[m - first_m] : 0.0; }
    double y_at(int m) const { return in_support(m) ? hit_y[m - first_m] : 0.0; }
    double corner_at(int m) const { return in_support(m) ? hit_corner[m - first_m] : 0.0; }
    // P(M = m), all boundaries.
    double mass(int m) const { return x_at(m) + y_at(m) + corner_at(m); }

    double rejection_mass() const {
        CompensatedSum s;
        for (std::size_t i = 0; i < hit_x.size(); ++i) s += hit_x[i] + hit_y[i] + hit_corner[i];
        return s.value();
    }
    double total_mass() const { return rejection_mass() + continue_mass; }

    // P(M >= m) for 1 <= m <= N*+1; the value at N*+1 is the continue mass.
    double survival(int m) const {
        CompensatedSum s;
        s += continue_mass;
        for (int j = std::max(m, first_m); j <= n_star; ++j) s += mass(j);
        return s.value();
    }
};

// Total variation distance between two stopping distributions of the same
// design, including the continue mass.
inline double total_variation(const StoppingPmf& a, const StoppingPmf& b) {
    CompensatedSum s;
    const int lo = std::min(a.first_m, b.first_m);
    const int hi = std::max(a.n_star, b.n_star);
    for (int m = lo; m <= hi; ++m) s += std::fabs(a.mass(m) - b.mass(m));
    s += std::fabs(a.continue_mass - b.continue_mass);
    return 0.5 * s.value();
}

namespace detail {

// Log-probabilities of the four cells and a log-factorial table.
struct LogCells {
    double l00, l10, l01, l11;
    explicit LogCells(const JointBernoulliParams& p)
        : l00(p.p00() > 0 ? std::log(p.p00()) : -kInf),
          l10(p.p10() > 0 ? std::log(p.p10()) : -kInf),
          l01(p.p01() > 0 ? std::log(p.p01()) : -kInf),
          l11(p.p11() > 0 ? std::log(p.p11()) : -kInf) {}
};

inline double pow_term(int count, double log_p) { return count == 0 ? 0.0 : count * log_p; }

// exp of a multinomial log-term with counts (c11, c10, c01, c00); the
// coefficient's log-numerator is supplied by the caller.
inline double cell_term(double log_coef, int c11, int c10, int c01, int c00, const LogCells& lc) {
    const double l = log_coef + pow_term(c11, lc.l11) + pow_term(c10, lc.l10) + pow_term(c01, lc.l01) +
                     pow_term(c00, lc.l00);
    return l == -kInf ? 0.0 : std::exp(l);
}

class LogFactorials {
public:
    explicit LogFactorials(int n) : table_(static_cast<std::size_t>(n) + 1) {
        for (int i = 0; i <= n; ++i) table_[i] = log_factorial(i);
    }
    double operator()(int i) const { return table_[i]; }

private:
    std::vector<double> table_;
};

// Calls f(sx, sy, prob) for every lattice point (S^x_{N*}, S^y_{N*}) inside
// the continuation region, via the triple multinomial sum over
// z = n11, i = n10, j = n01.
template <class F>
void for_each_continue_term(const BivariateDesign& d, const JointBernoulliParams& p, F&& f) {
    const int n = d.n_star;
    const LogFactorials lf(n);
    const LogCells lc(p);
    const int kx = d.kx();
    const int ky = d.ky();
    for (int z = 0; z <= std::min(d.k_lower, n); ++z) {
        for (int i = 0; i <= std::min(kx - z, n - z); ++i) {
            for (int j = 0; j <= std::min(ky - z, n - z - i); ++j) {
                const int rest = n - z - i - j;
                const double coef = lf(n) - lf(z) - lf(i) - lf(j) - lf(rest);
                f(z + i, z + j, cell_term(coef, z, i, j, rest, lc));
            }
        }
    }
}

// Paths reaching (kx, ky) after m-1 observations and finishing with (1,1).
template <class F>
void for_each_corner_term(const BivariateDesign& d, const LogFactorials& lf, const LogCells& lc, int m, F&& f) {
    const int kx = d.kx();
    const int ky = d.ky();
    for (int i = 1; i <= d.k_lower + 1; ++i) {
        if (m < kx + ky + 2 - i) continue;
        const int rest = m - kx - ky - 2 + i;
        const double coef = lf(m - 1) - lf(i - 1) - lf(kx + 1 - i) - lf(ky + 1 - i) - lf(rest);
        f(cell_term(coef, i, kx + 1 - i, ky + 1 - i, rest, lc));
    }
}

// Calls f(boundary, sx, sy, prob) for every path class that stops at
// exactly m observations. The five families are:
//   X boundary, last observation (1,1) or (1,0) with S^y staying <= ky;
//   Y boundary, last observation (1,1) or (0,1) with S^x staying <= kx;
//   corner, last observation (1,1) from (kx, ky).
template <class F>
void for_each_stop_term(const BivariateDesign& d, const LogFactorials& lf, const LogCells& lc, int m, F&& f) {
    const int kx = d.kx();
    const int ky = d.ky();
    const int kl = d.k_lower;
    const double top = lf(m - 1);
    if (m >= kx + 1) {
        // Last observation (1,1): i-1 joint events before it, kx+1-i X-only.
        for (int i = 1; i <= std::min(kx + 1, ky); ++i) {
            for (int j = 0; j <= std::min(ky - i, m - kx - 1); ++j) {
                const int rest = m - kx - 1 - j;
                const double coef = top - lf(i - 1) - lf(kx + 1 - i) - lf(j) - lf(rest);
                f(Boundary::x, kx + 1, i + j, cell_term(coef, i, kx + 1 - i, j, rest, lc));
            }
        }
        // Last observation (1,0): i joint events, kx-i X-only before it.
        for (int i = 0; i <= kl; ++i) {
            for (int j = 0; j <= std::min(ky - i, m - kx - 1); ++j) {
                const int rest = m - kx - 1 - j;
                const double coef = top - lf(i) - lf(kx - i) - lf(j) - lf(rest);
                f(Boundary::x, kx + 1, i + j, cell_term(coef, i, kx + 1 - i, j, rest, lc));
            }
        }
    }
    if (m >= ky + 1) {
        for (int i = 1; i <= std::min(kx, ky + 1); ++i) {
            for (int j = 0; j <= std::min(kx - i, m - ky - 1); ++j) {
                const int rest = m - ky - 1 - j;
                const double coef = top - lf(i - 1) - lf(j) - lf(ky + 1 - i) - lf(rest);
                f(Boundary::y, i + j, ky + 1, cell_term(coef, i, j, ky + 1 - i, rest, lc));
            }
        }
        for (int i = 0; i <= kl; ++i) {
            for (int j = 0; j <= std::min(kx - i, m - ky - 1); ++j) {
                const int rest = m - ky - 1 - j;
                const double coef = top - lf(i) - lf(j) - lf(ky - i) - lf(rest);
                f(Boundary::y, i + j, ky + 1, cell_term(coef, i, j, ky + 1 - i, rest, lc));
            }
        }
    }
    for_each_corner_term(d, lf, lc, m, [&f, kx, ky](double prob) { f(Boundary::corner, kx + 1, ky + 1, prob); });
}

}  // namespace detail

// P(S^x_{N*} <= kx and S^y_{N*} <= ky).
inline double non_rejection_prob(const BivariateDesign& d, const JointBernoulliParams& p) {
    CompensatedSum s;
    detail::for_each_continue_term(d, p, [&s](int, int, double prob) { s += prob; });
    return std::clamp(s.value(), 0.0, 1.0);
}

inline double power_exact(const BivariateDesign& d, const JointBernoulliParams& p) {
    return std::clamp(1.0 - non_rejection_prob(d, p), 0.0, 1.0);
}

inline StoppingPmf stopping_pmf_exact(const BivariateDesign& d, const JointBernoulliParams& p) {
    StoppingPmf pmf = StoppingPmf::empty_for(d);
    const detail::LogFactorials lf(std::max(d.n_star, 1));
    const detail::LogCells lc(p);
    for (int m = pmf.first_m; m <= d.n_star; ++m) {
        CompensatedSum sx, sy, sc;
        detail::for_each_stop_term(d, lf, lc, m, [&](Boundary b, int, int, double prob) {
            if (b == Boundary::x) {
                sx += prob;
            } else if (b == Boundary::y) {
                sy += prob;
            } else {
                sc += prob;
            }
        });
        pmf.hit_x[m - pmf.first_m] = sx.value();
        pmf.hit_y[m - pmf.first_m] = sy.value();
        pmf.hit_corner[m - pmf.first_m] = sc.value();
    }
    pmf.continue_mass = non_rejection_prob(d, p);
    return pmf;
}

// Total probability of stopping through the corner. Needs only the
// single corner sum, so it stays cheap for designs where the full pmf is not.
inline double corner_mass_exact(const BivariateDesign& d, const JointBernoulliParams& p) {
    const detail::LogFactorials lf(std::max(d.n_star, 1));
    const detail::LogCells lc(p);
    CompensatedSum s;
    for (int m = d.k_lower + 1; m <= d.n_star; ++m) detail::for_each_corner_term(d, lf, lc, m, [&s](double v) { s += v; });
    return s.value();
}

// Forward recursion over alive states (sx <= kx, sy <= ky). One dense layer
// is updated in place per observation; mass leaving the region is recorded
// against the boundary it crossed.
struct LatticeDpResult {
    StoppingPmf pmf;
    double expected_theta_hat_x = 0.0;
    double expected_theta_hat_y = 0.0;
};

inline LatticeDpResult lattice_forward_dp_full(const BivariateDesign& d, const JointBernoulliParams& p) {
    const int n = d.n_star;
    const int kx = d.kx();
    const int ky = d.ky();
    const int nx = std::min(kx, n) + 1;
    const int ny = std::min(ky, n) + 1;
    const bool x_reachable = kx < n;
    const bool y_reachable = ky < n;
    const double p00 = p.p00(), p10 = p.p10(), p01 = p.p01(), p11 = p.p11();

    LatticeDpResult out;
    out.pmf = StoppingPmf::empty_for(d);
    std::vector<double> layer(static_cast<std::size_t>(nx) * ny, 0.0);
    auto at = [&](int sx, int sy) -> double& { return layer[static_cast<std::size_t>(sx) * ny + sy]; };
    at(0, 0) = 1.0;

    CompensatedSum ex, ey;
    for (int step = 1; step <= n; ++step) {
        CompensatedSum hx, hy, hc, hx_sy, hy_sx;
        if (x_reachable) {
            for (int sy = 0; sy < ny; ++sy) {
                const double v = at(kx, sy);
                if (v == 0.0) continue;
                hx += v * p10;
                hx_sy += v * p10 * sy;
                if (sy < ky) {
                    hx += v * p11;
                    hx_sy += v * p11 * (sy + 1);
                }
            }
        }
        if (y_reachable) {
            for (int sx = 0; sx < nx; ++sx) {
                const double v = at(sx, ky);
                if (v == 0.0) continue;
                hy += v * p01;
                hy_sx += v * p01 * sx;
                if (sx < kx) {
                    hy += v * p11;
                    hy_sx += v * p11 * (sx + 1);
                }
            }
        }
        if (x_reachable && y_reachable) hc += at(kx, ky) * p11;

        if (step >= out.pmf.first_m) {
            const int idx = step - out.pmf.first_m;
            out.pmf.hit_x[idx] = hx.value();
            out.pmf.hit_y[idx] = hy.value();
            out.pmf.hit_corner[idx] = hc.value();
        }
        ex += (kx + 1.0) / step * (hx.value() + hc.value()) + hy_sx.value() / step;
        ey += (ky + 1.0) / step * (hy.value() + hc.value()) + hx_sy.value() / step;

        // In-place update, high indices first so each cell reads old values.
        const int sx_hi = std::min(nx - 1, step);
        const int sy_hi = std::min(ny - 1, step);
        for (int sx = sx_hi; sx >= 0; --sx) {
            for (int sy = sy_hi; sy >= 0; --sy) {
                double v = at(sx, sy) * p00;
                if (sx > 0) v += at(sx - 1, sy) * p10;
                if (sy > 0) v += at(sx, sy - 1) * p01;
                if (sx > 0 && sy > 0) v += at(sx - 1, sy - 1) * p11;
                at(sx, sy) = v;
            }
        }
    }
    CompensatedSum cont;
    for (int sx = 0; sx < nx; ++sx) {
        for (int sy = 0; sy < ny; ++sy) {
            const double v = at(sx, sy);
            cont += v;
            ex += v * sx / n;
            ey += v * sy / n;
        }
    }
    out.pmf.continue_mass = cont.value();
    out.expected_theta_hat_x = ex.value();
    out.expected_theta_hat_y = ey.value();
    return out;
}

inline StoppingPmf lattice_forward_dp(const BivariateDesign& d, const JointBernoulliParams& p) {
    return lattice_forward_dp_full(d, p).pmf;
}

// ASN via I1 = N* - sum_{m=k_lower+1}^{N*-1} (N* - m) P(M = m).
inline double asn_from_pmf(const StoppingPmf& pmf) {
    CompensatedSum s;
    const int n = pmf.n_star;
    for (int m = pmf.first_m; m <= n - 1; ++m) s += (n - m) * pmf.mass(m);
    return n - s.value();
}

// E[M*^2] via I2 = N*^2 - sum (N*^2 - m^2) P(M = m).
inline double second_moment_from_pmf(const StoppingPmf& pmf) {
    CompensatedSum s;
    const double n = pmf.n_star;
    for (int m = pmf.first_m; m <= pmf.n_star - 1; ++m) s += (n * n - double(m) * m) * pmf.mass(m);
    return n * n - s.value();
}

inline double asn_exact(const BivariateDesign& d, const JointBernoulliParams& p) {
    return asn_from_pmf(stopping_pmf_exact(d, p));
}

inline double second_moment_exact(const BivariateDesign& d, const JointBernoulliParams& p) {
    return second_moment_from_pmf(stopping_pmf_exact(d, p));
}

struct VarianceCv {
    double variance = 0.0;
    double cv = 0.0;
};

inline VarianceCv variance_cv_from_pmf(const StoppingPmf& pmf) {
    const double m1 = asn_from_pmf(pmf);
    const double m2 = second_moment_from_pmf(pmf);
    double var = m2 - m1 * m1;
    // Cancellation in m2 - m1^2 grows with N*^2.
    const double tol = 1e-9 * std::max(1.0, m2 * 1e-3);
    if (var < -tol) throw NumericalError("variance_cv: negative variance");
    var = std::max(var, 0.0);
    return {var, std::sqrt(var) / m1};
}

inline VarianceCv variance_cv(const BivariateDesign& d, const JointBernoulliParams& p) {
    return variance_cv_from_pmf(stopping_pmf_exact(d, p));
}

// Curtailed single-margin ASN E[min(M_x, N*)], closed form in incomplete
// beta functions.
inline double marginal_curtailed_asn(int n, int k, double theta) {
    if (k >= n) return n;
    return n * reg_inc_beta(1.0 - theta, n - k, k + 1.0) +
           (k + 1.0) / theta * reg_inc_beta(theta, k + 2.0, n - k);
}

struct AsnBounds {
    double lower = 0.0;
    double upper = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double l1 = 0.0;
};

namespace detail {

// sum_{m=1}^{N} P(M_a >= m) P(M_b >= m) for independent single-margin
// stopping times, with ka >= kb; `ua` is the curtailed ASN of margin a.
inline double product_survival_sum(int n, int ka, double theta_a, int kb, double theta_b, double ua) {
    CompensatedSum s;
    // P(M_b <= i) = I_{theta_b}(kb + 1, i - kb); P(M_a > i) = I_{1-theta_a}(i - ka, ka + 1).
    for (int i = kb + 1; i <= std::min(ka, n - 1); ++i) s += reg_inc_beta(theta_b, kb + 1.0, i - kb);
    for (int i = ka + 1; i <= n - 1; ++i)
        s += reg_inc_beta(theta_b, kb + 1.0, i - kb) * reg_inc_beta(1.0 - theta_a, i - ka, ka + 1.0);
    return ua - s.value();
}

}  // namespace detail

// Bounds from the two marginal curtailed ASNs and their independent
// combination L1. Positive correlation makes M_x, M_y positively associated
// (L1 <= ASN <= min(U1, U2)); negative correlation reverses the L1 side.
inline AsnBounds asn_bounds(const BivariateDesign& d, const JointBernoulliParams& p) {
    const int n = d.n_star;
    AsnBounds b;
    b.u1 = marginal_curtailed_asn(n, d.kx(), p.theta_x());
    b.u2 = marginal_curtailed_asn(n, d.ky(), p.theta_y());
    if (d.kx() >= d.ky()) {
        b.l1 = detail::product_survival_sum(n, d.kx(), p.theta_x(), d.ky(), p.theta_y(), b.u1);
    } else {
        b.l1 = detail::product_survival_sum(n, d.ky(), p.theta_y(), d.kx(), p.theta_x(), b.u2);
    }
    if (p.rho() > 0.0) {
        b.lower = b.l1;
        b.upper = std::min(b.u1, b.u2);
    } else if (p.rho() < 0.0) {
        b.lower = std::min(d.k_lower + 1, n);
        b.upper = b.l1;
    } else {
        b.lower = b.upper = b.l1;
    }
    return b;
}

// E[theta_hat] as the curtailed (non-rejection) term plus the stopped terms
// over every boundary family.
inline double estimator_expectation_exact(const BivariateDesign& d, const JointBernoulliParams& p, Margin margin) {
    const bool want_x = margin == Margin::x;
    CompensatedSum total;
    const int n = d.n_star;
    detail::for_each_continue_term(d, p, [&](int sx, int sy, double prob) {
        total += (want_x ? sx : sy) * prob / n;
    });
    const detail::LogFactorials lf(std::max(n, 1));
    const detail::LogCells lc(p);
    for (int m = d.k_lower + 1; m <= n; ++m) {
        detail::for_each_stop_term(d, lf, lc, m, [&](Boundary, int sx, int sy, double prob) {
            total += (want_x ? sx : sy) * prob / m;
        });
    }
    return total.value();
}

}  // namespace bicurt
