#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bicurt {

// Raised for arguments outside an operation's domain. The CLI maps every
// DomainError (and subclass) to exit code 2.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An internal consistency check failed (non-convergence, negative variance).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Which of the three correlation restrictions rejected a parameter triple.
enum class FeasibilityViolation {
    none,
    p11_negative,        // rho < -sqrt(Omega_x Omega_y)
    p10_negative,        // rho > sqrt(Omega_x / Omega_y)
    p01_negative,        // rho > sqrt(Omega_y / Omega_x)
    p00_negative,        // theta_x + theta_y - 1 > p11
};

inline const char* to_string(FeasibilityViolation v) {
    switch (v) {
        case FeasibilityViolation::none: return "none";
        case FeasibilityViolation::p11_negative: return "p11 >= 0 (rho >= -sqrt(Omega_x*Omega_y))";
        case FeasibilityViolation::p10_negative: return "theta_x - p11 >= 0 (rho <= sqrt(Omega_x/Omega_y))";
        case FeasibilityViolation::p01_negative: return "theta_y - p11 >= 0 (rho <= sqrt(Omega_y/Omega_x))";
        case FeasibilityViolation::p00_negative: return "p00 >= 0";
    }
    return "unknown";
}

class InfeasibleParams : public DomainError {
public:
    InfeasibleParams(FeasibilityViolation which, const std::string& detail)
        : DomainError("infeasible correlation: violates " + std::string(to_string(which)) + "; " + detail),
          which_(which) {}
    FeasibilityViolation which() const noexcept { return which_; }

private:
    FeasibilityViolation which_;
};

// The observation stream ended before the test reached a decision.
class StreamUnderflow : public DomainError {
public:
    explicit StreamUnderflow(std::int64_t consumed)
        : DomainError("stream exhausted after " + std::to_string(consumed) +
                      " events before the test reached a decision"),
          consumed_(consumed) {}
    std::int64_t consumed() const noexcept { return consumed_; }

private:
    std::int64_t consumed_;
};

// Monitor received an event out of sequence.
class SequenceError : public DomainError {
public:
    using DomainError::DomainError;
};

// Monitor received an event after the test closed.
class StateError : public DomainError {
public:
    using DomainError::DomainError;
};

// Saved state document is corrupt, version-mismatched or inconsistent.
class DocumentError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace bicurt
