#pragma once

// Retrospective type I / type II error probabilities of a fixed design.

#include "bicurt/asymptotic.hpp"
#include "bicurt/design.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/params.hpp"

namespace bicurt {

enum class PowerMethod { exact, curtailed_normal, gut };

inline const char* to_string(PowerMethod m) {
    switch (m) {
        case PowerMethod::exact: return "exact";
        case PowerMethod::curtailed_normal: return "curtailed-normal";
        case PowerMethod::gut: return "gut";
    }
    return "unknown";
}

inline double power_with(const BivariateDesign& d, const JointBernoulliParams& p, PowerMethod method) {
    switch (method) {
        case PowerMethod::exact: return power_exact(d, p);
        case PowerMethod::curtailed_normal: return power_asymptotic(d, p, AsymptoticPowerForm::curtailed_normal);
        case PowerMethod::gut: return power_asymptotic(d, p, AsymptoticPowerForm::gut);
    }
    return power_exact(d, p);
}

struct AttainedErrors {
    double type_i = 0.0;
    double type_ii = 0.0;
};

inline AttainedErrors attained_errors(const BivariateDesign& d, const JointBernoulliParams& null_params,
                                      const JointBernoulliParams& alt_params,
                                      PowerMethod method = PowerMethod::exact) {
    return {power_with(d, null_params, method), 1.0 - power_with(d, alt_params, method)};
}

}  // namespace bicurt
