#pragma once

#include <cmath>
#include <span>

namespace bicurt {

// Neumaier-compensated accumulator. Order-dependent but deterministic.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Pairwise summation with a fixed split, so the result depends only on the
// order of the input.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        CompensatedSum s;
        for (double x : v) s += x;
        return s.value();
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace bicurt
