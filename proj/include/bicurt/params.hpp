#pragma once

// Joint Bernoulli parameterization of a pair of binary side effects:
// marginal rates, their correlation, and the induced 2x2 cell probabilities.

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "bicurt/errors.hpp"

namespace bicurt {

inline constexpr double kFeasibilityTol = 1e-12;

// Cell order used throughout: (p00, p10, p01, p11), where the first digit is
// the X indicator and the second the Y indicator.
enum class Cell : int { c00 = 0, c10 = 1, c01 = 2, c11 = 3 };

struct CorrelationBounds {
    double lower;        // -sqrt(Omega_x Omega_y)
    double upper_x;      // sqrt(Omega_x / Omega_y)
    double upper_y;      // sqrt(Omega_y / Omega_x)
    double lower_00;     // -1 / sqrt(Omega_x Omega_y), binding only when theta_x + theta_y > 1
    double upper() const { return std::min(upper_x, upper_y); }
    double feasible_lower() const { return std::max(lower, lower_00); }
};

inline CorrelationBounds correlation_bounds(double theta_x, double theta_y) {
    const double omega_x = theta_x / (1.0 - theta_x);
    const double omega_y = theta_y / (1.0 - theta_y);
    return {-std::sqrt(omega_x * omega_y), std::sqrt(omega_x / omega_y), std::sqrt(omega_y / omega_x),
            -1.0 / std::sqrt(omega_x * omega_y)};
}

class JointBernoulliParams {
public:
    double theta_x() const { return theta_x_; }
    double theta_y() const { return theta_y_; }
    double rho() const { return rho_; }
    double p00() const { return cells_[0]; }
    double p10() const { return cells_[1]; }
    double p01() const { return cells_[2]; }
    double p11() const { return cells_[3]; }
    const std::array<double, 4>& cells() const { return cells_; }
    double cell(Cell c) const { return cells_[static_cast<int>(c)]; }
    double covariance() const { return p11() - theta_x_ * theta_y_; }

    // Same correlation, margins exchanged.
    JointBernoulliParams swapped() const {
        JointBernoulliParams s = *this;
        std::swap(s.theta_x_, s.theta_y_);
        std::swap(s.cells_[1], s.cells_[2]);
        return s;
    }

    friend JointBernoulliParams make_params(double theta_x, double theta_y, double rho);

private:
    JointBernoulliParams() = default;
    double theta_x_ = 0.0;
    double theta_y_ = 0.0;
    double rho_ = 0.0;
    std::array<double, 4> cells_{};
};

inline void require_probability_open(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
        std::ostringstream os;
        os << name << " must lie in (0, 1), got " << v;
        throw DomainError(os.str());
    }
}

// Builds the parameter triple, rejecting correlations outside the feasible
// region. Boundary values are accepted; cells that round to within the
// tolerance of zero are set to exactly zero.
inline JointBernoulliParams make_params(double theta_x, double theta_y, double rho) {
    require_probability_open(theta_x, "theta_x");
    require_probability_open(theta_y, "theta_y");
    if (!(std::fabs(rho) < 1.0)) throw DomainError("rho must satisfy |rho| < 1");

    const CorrelationBounds b = correlation_bounds(theta_x, theta_y);
    std::ostringstream detail;
    detail << "theta_x=" << theta_x << ", theta_y=" << theta_y << ", rho=" << rho;
    if (rho < b.lower - kFeasibilityTol) throw InfeasibleParams(FeasibilityViolation::p11_negative, detail.str());
    if (rho > b.upper_x + kFeasibilityTol) throw InfeasibleParams(FeasibilityViolation::p10_negative, detail.str());
    if (rho > b.upper_y + kFeasibilityTol) throw InfeasibleParams(FeasibilityViolation::p01_negative, detail.str());

    const double sd = std::sqrt(theta_x * (1.0 - theta_x) * theta_y * (1.0 - theta_y));
    double p11 = rho * sd + theta_x * theta_y;
    p11 = std::clamp(p11, 0.0, std::min(theta_x, theta_y));
    // Snap on the scale of the rho tolerance, so boundary inputs give exact zeros.
    const double snap = kFeasibilityTol * sd;
    if (p11 < snap) p11 = 0.0;
    if (theta_x - p11 < snap) p11 = theta_x;
    if (theta_y - p11 < snap) p11 = theta_y;
    double p00 = 1.0 - theta_x - theta_y + p11;
    // The three restrictions above leave p00 >= 0 implicit; it can only fail
    // when theta_x + theta_y > 1.
    if (p00 < -kFeasibilityTol) throw InfeasibleParams(FeasibilityViolation::p00_negative, detail.str());

    JointBernoulliParams p;
    p.theta_x_ = theta_x;
    p.theta_y_ = theta_y;
    p.rho_ = rho;
    if (p00 < snap) p00 = 0.0;
    p.cells_ = {p00, theta_x - p11, theta_y - p11, p11};
    return p;
}

inline double rho_from_p11(double theta_x, double theta_y, double p11) {
    require_probability_open(theta_x, "theta_x");
    require_probability_open(theta_y, "theta_y");
    const double lo = std::max(0.0, theta_x + theta_y - 1.0);
    const double hi = std::min(theta_x, theta_y);
    if (p11 < lo - kFeasibilityTol || p11 > hi + kFeasibilityTol) {
        std::ostringstream os;
        os << "p11=" << p11 << " incompatible with margins (" << theta_x << ", " << theta_y << ")";
        throw DomainError(os.str());
    }
    return (p11 - theta_x * theta_y) / std::sqrt(theta_x * (1.0 - theta_x) * theta_y * (1.0 - theta_y));
}

}  // namespace bicurt
