#pragma once

// Normal approximations for large designs: the bivariate normal limit of
// (other-margin count, stopping time) at each boundary, and the curtailed
// normal law of the final counts at N*.

#include <algorithm>
#include <cmath>

#include "bicurt/bivariate_normal.hpp"
#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/params.hpp"
#include "bicurt/summation.hpp"

namespace bicurt {

// Limit law of (S^other_M, M) for the walk stopped at the first crossing of
// `which`'s boundary k+1.
struct GutLaw {
    Boundary which = Boundary::x;
    BivariateNormalParams law;

    const Vec2& mean() const { return law.mean; }
    const Mat2& cov() const { return law.cov; }
};

inline GutLaw gut_params(const JointBernoulliParams& p, int k, Boundary which) {
    if (which != Boundary::x && which != Boundary::y) throw DomainError("gut_params: boundary must be X or Y");
    if (k < 0) throw DomainError("gut_params: k must be nonnegative");
    const bool on_x = which == Boundary::x;
    const double t = on_x ? p.theta_x() : p.theta_y();  // margin that crosses
    const double o = on_x ? p.theta_y() : p.theta_x();  // the other margin
    const double p11 = p.p11();
    const double eta2 = p.theta_x() * p.theta_y() * (p.theta_x() + p.theta_y() - 2.0 * p11);
    if (!(eta2 > 0.0)) throw DomainError("gut_params: degenerate law (theta_x + theta_y - 2 p11 must be > 0)");
    const double c = (k + 1.0) / (t * t);
    GutLaw g;
    g.which = which;
    g.law.mean = {o / t * (k + 1.0), (k + 1.0) / t};
    g.law.cov = {{{c * o * (t + o - 2.0 * p11), c * (o - p11)}, {c * (o - p11), c * (1.0 - t)}}};
    return g;
}

// Normal law of (S^x_{N*}, S^y_{N*}) without stopping.
inline BivariateNormalParams final_count_law(int n, const JointBernoulliParams& p) {
    const double tx = p.theta_x();
    const double ty = p.theta_y();
    const double c = p.covariance();
    BivariateNormalParams law;
    law.mean = {n * tx, n * ty};
    law.cov = {{{n * tx * (1.0 - tx), n * c}, {n * c, n * ty * (1.0 - ty)}}};
    return law;
}

enum class AsymptoticPowerForm { curtailed_normal, gut };

namespace detail {

inline double curtailed_normal_non_rejection(const BivariateDesign& d, const JointBernoulliParams& p) {
    const BivariateNormalParams law = final_count_law(d.n_star, p);
    return bvn_rect(law, {-kInf, -kInf}, {d.kx() + 0.5, d.ky() + 0.5});
}

}  // namespace detail

struct BoundaryHitProbs {
    double x_first = 0.0;
    double y_first = 0.0;
};

// Probability of stopping through each boundary by N*, from the two limit
// laws integrated up to N* + 1/2.
inline BoundaryHitProbs boundary_hit_probs(const BivariateDesign& d, const JointBernoulliParams& p) {
    const GutLaw gx = gut_params(p, d.kx(), Boundary::x);
    const GutLaw gy = gut_params(p, d.ky(), Boundary::y);
    const double w_hi = d.n_star + 0.5;
    return {bvn_rect(gx.law, {-kInf, -kInf}, {d.ky() + 0.5, w_hi}),
            bvn_rect(gy.law, {-kInf, -kInf}, {d.kx() + 0.5, w_hi})};
}

inline double power_asymptotic(const BivariateDesign& d, const JointBernoulliParams& p,
                               AsymptoticPowerForm form = AsymptoticPowerForm::curtailed_normal) {
    if (form == AsymptoticPowerForm::curtailed_normal)
        return std::clamp(1.0 - detail::curtailed_normal_non_rejection(d, p), 0.0, 1.0);
    const BoundaryHitProbs h = boundary_hit_probs(d, p);
    return std::clamp(h.x_first + h.y_first, 0.0, 1.0);
}

// Per-m stopping masses from the two limit laws; the corner is folded into
// whichever law covers it and not tracked separately.
inline StoppingPmf stopping_pmf_asymptotic(const BivariateDesign& d, const JointBernoulliParams& p) {
    StoppingPmf pmf = StoppingPmf::empty_for(d);
    const GutLaw gx = gut_params(p, d.kx(), Boundary::x);
    const GutLaw gy = gut_params(p, d.ky(), Boundary::y);
    for (int m = pmf.first_m; m <= d.n_star; ++m) {
        const std::size_t i = static_cast<std::size_t>(m - pmf.first_m);
        pmf.hit_x[i] = bvn_rect(gx.law, {-kInf, m - 0.5}, {d.ky() + 0.5, m + 0.5});
        pmf.hit_y[i] = bvn_rect(gy.law, {-kInf, m - 0.5}, {d.kx() + 0.5, m + 0.5});
    }
    pmf.continue_mass = detail::curtailed_normal_non_rejection(d, p);
    return pmf;
}

// E[theta_hat] for one margin: the curtailed part S_{N*}/N* over the
// continuation rectangle, plus the stopped parts on the per-m grid.
inline double estimator_expectation_asymptotic(const BivariateDesign& d, const JointBernoulliParams& p,
                                               Margin margin) {
    const bool want_x = margin == Margin::x;
    const int n = d.n_star;
    const int k_own = want_x ? d.kx() : d.ky();
    const int k_other = want_x ? d.ky() : d.kx();
    const JointBernoulliParams q = want_x ? p : p.swapped();

    // Own-margin count first so the rectangle moment is of the right coordinate.
    const BivariateNormalParams final_law = final_count_law(n, q);
    CompensatedSum total;
    total += bvn_rect_moment(final_law, {-kInf, -kInf}, {k_own + 0.5, k_other + 0.5}).first_moment / n;

    const GutLaw own = gut_params(q, k_own, Boundary::x);
    const GutLaw other = gut_params(q, k_other, Boundary::y);
    for (int m = d.k_lower + 1; m <= n; ++m) {
        const double lo = m - 0.5;
        const double hi = m + 0.5;
        total += (k_own + 1.0) / m * bvn_rect(own.law, {-kInf, lo}, {k_other + 0.5, hi});
        total += bvn_rect_moment(other.law, {-kInf, lo}, {k_own + 0.5, hi}).first_moment / m;
    }
    return total.value();
}

}  // namespace bicurt
