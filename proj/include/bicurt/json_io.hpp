#pragma once

// JSON encodings of the library's value types. Requires nlohmann/json.

#include <cmath>
#include <string>

#include <json.hpp>

#include "bicurt/attained_errors.hpp"
#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/inference.hpp"
#include "bicurt/params.hpp"
#include "bicurt/simulator.hpp"

namespace bicurt {

using json = nlohmann::json;

namespace detail {

template <class T>
T required(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DocumentError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DocumentError(std::string("field '") + key + "': " + e.what());
    }
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json to_json(const MarginalDesign& m) {
    return {{"alpha_tilde", m.alpha_tilde}, {"beta", m.beta},       {"theta0", m.theta0},
            {"theta1", m.theta1},           {"n_star", m.n_star},   {"k_star", m.k_star}};
}

inline json to_json(const BivariateDesign& d) {
    return {{"n_star", d.n_star}, {"k_lower", d.k_lower}, {"x", to_json(d.x)}, {"y", to_json(d.y)}};
}

inline MarginalDesign marginal_design_from_json(const json& j) {
    MarginalDesign m;
    m.alpha_tilde = j.value("alpha_tilde", 0.0);
    m.beta = j.value("beta", 0.0);
    m.theta0 = j.value("theta0", 0.0);
    m.theta1 = j.value("theta1", 0.0);
    m.n_star = detail::required<int>(j, "n_star");
    m.k_star = detail::required<int>(j, "k_star");
    return m;
}

// Accepts either the full form written by to_json or the short form
// {"n_star": N, "kx": a, "ky": b}.
inline BivariateDesign design_from_json(const json& j) {
    if (!j.is_object()) throw DocumentError("design document must be a JSON object");
    BivariateDesign d;
    if (j.contains("x") && j.contains("y")) {
        d = combine(marginal_design_from_json(j.at("x")), marginal_design_from_json(j.at("y")));
        if (j.contains("n_star")) {
            const int n = detail::required<int>(j, "n_star");
            if (n > d.n_star) throw DocumentError("design n_star exceeds the smaller marginal n_star");
            d.n_star = n;
        }
    } else {
        d = design_from_boundaries(detail::required<int>(j, "n_star"), detail::required<int>(j, "kx"),
                                   detail::required<int>(j, "ky"));
    }
    if (j.contains("k_lower") && detail::required<int>(j, "k_lower") != d.k_lower)
        throw DocumentError("design k_lower is not min(kx, ky)");
    if (d.n_star < 1 || d.kx() < 0 || d.ky() < 0) throw DocumentError("design has invalid n_star or k");
    return d;
}

inline json to_json(const JointBernoulliParams& p) {
    return {{"theta_x", p.theta_x()}, {"theta_y", p.theta_y()}, {"rho", p.rho()},
            {"p00", p.p00()},         {"p10", p.p10()},         {"p01", p.p01()},
            {"p11", p.p11()}};
}

inline json to_json(const LatticeCounts& c) {
    return {{"n00", c.n00}, {"n10", c.n10}, {"n01", c.n01}, {"n11", c.n11}};
}

inline LatticeCounts counts_from_json(const json& j) {
    LatticeCounts c;
    c.n00 = detail::required<std::int64_t>(j, "n00");
    c.n10 = detail::required<std::int64_t>(j, "n10");
    c.n01 = detail::required<std::int64_t>(j, "n01");
    c.n11 = detail::required<std::int64_t>(j, "n11");
    return c;
}

inline json to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

inline json to_json(const PostTestEstimate& e) {
    return {{"theta_hat_x", e.theta_hat_x},
            {"theta_hat_y", e.theta_hat_y},
            {"p11_hat", e.p11_hat},
            {"rho_hat", detail::finite_or_null(e.rho_hat)},
            {"m_star", e.m_star},
            {"sigma_hat", {{e.sigma_hat[0][0], e.sigma_hat[0][1]}, {e.sigma_hat[1][0], e.sigma_hat[1][1]}}},
            {"singular", e.singular}};
}

inline json to_json(const ConfidenceRegion& r) {
    return {{"level", r.level},
            {"chi2", r.chi2},
            {"center", {r.center[0], r.center[1]}},
            {"half_lengths", {r.major, r.minor}},
            {"orientation", {r.orientation[0], r.orientation[1]}},
            {"simultaneous", {{"theta_x", to_json(r.simultaneous[0])}, {"theta_y", to_json(r.simultaneous[1])}}},
            {"bonferroni", {{"theta_x", to_json(r.bonferroni[0])}, {"theta_y", to_json(r.bonferroni[1])}}},
            {"singular", r.singular}};
}

inline json to_json(const RelativeRiskEstimate& r) {
    return {{"estimate", r.gamma_hat}, {"variance", r.variance}, {"ci", to_json(r.ci)}, {"level", r.level}};
}

inline json to_json(const MonteCarloSummary& s) {
    return {{"reps", s.reps},
            {"power", s.power},
            {"power_se", s.power_se},
            {"asn", s.asn},
            {"asn_se", s.asn_se},
            {"mean_theta_hat_x", s.mean_theta_hat_x},
            {"mean_theta_hat_y", s.mean_theta_hat_y},
            {"bias_x", s.bias_x},
            {"bias_y", s.bias_y},
            {"bias_x_se", s.bias_x_se},
            {"bias_y_se", s.bias_y_se},
            {"boundary_split", {{"X", s.frac_x}, {"Y", s.frac_y}, {"corner", s.frac_corner}, {"none", s.frac_none}}},
            {"coverage", {{"level", s.coverage_level}, {"rate", s.coverage}}}};
}

inline json to_json(const Event& e) { return {{"seq", e.seq}, {"x", e.x}, {"y", e.y}}; }

inline Event event_from_json(const json& j) {
    Event e;
    e.seq = detail::required<std::int64_t>(j, "seq");
    e.x = detail::required<int>(j, "x");
    e.y = detail::required<int>(j, "y");
    validate_event(e);
    return e;
}

}  // namespace bicurt
