#pragma once

// Running the sequential test on event streams, drawing synthetic streams,
// and Monte Carlo summaries over many replicates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/inference.hpp"
#include "bicurt/params.hpp"
#include "bicurt/summation.hpp"

namespace bicurt {

struct Event {
    std::int64_t seq = 0;
    int x = 0;
    int y = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

enum class Decision { reject, not_reject };

inline const char* to_string(Decision d) { return d == Decision::reject ? "reject" : "not_reject"; }

struct TestOutcome {
    Decision decision = Decision::not_reject;
    std::int64_t m_star = 0;
    Boundary boundary = Boundary::none;
    LatticeCounts counts;

    friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

// The stopping rule applied one observation at a time.
class SequentialTest {
public:
    explicit SequentialTest(const BivariateDesign& d) : design_(d) {}

    bool done() const { return done_; }
    const LatticeCounts& counts() const { return counts_; }
    Boundary boundary() const { return boundary_; }
    const BivariateDesign& design() const { return design_; }

    // Feeds one observation; returns true once a decision has been reached.
    bool observe(int x, int y) {
        if (done_) throw StateError("sequential test already decided");
        counts_.add(x, y);
        const bool over_x = counts_.sx() > design_.kx();
        const bool over_y = counts_.sy() > design_.ky();
        if (over_x && over_y) {
            boundary_ = Boundary::corner;
        } else if (over_x) {
            boundary_ = Boundary::x;
        } else if (over_y) {
            boundary_ = Boundary::y;
        }
        done_ = boundary_ != Boundary::none || counts_.total() >= design_.n_star;
        return done_;
    }

    TestOutcome outcome() const {
        if (!done_) throw StateError("sequential test has not reached a decision");
        return {boundary_ == Boundary::none ? Decision::not_reject : Decision::reject, counts_.total(), boundary_,
                counts_};
    }

private:
    BivariateDesign design_;
    LatticeCounts counts_;
    Boundary boundary_ = Boundary::none;
    bool done_ = false;
};

inline void validate_event(const Event& e) {
    if ((e.x != 0 && e.x != 1) || (e.y != 0 && e.y != 1)) throw DomainError("event indicators must be 0 or 1");
}

template <class Range>
TestOutcome run_test(const BivariateDesign& d, const Range& stream) {
    SequentialTest test(d);
    std::int64_t last_seq = 0;
    bool first = true;
    for (const Event& e : stream) {
        validate_event(e);
        if (!first && e.seq <= last_seq) throw SequenceError("event seq must be strictly increasing");
        first = false;
        last_seq = e.seq;
        if (test.observe(e.x, e.y)) return test.outcome();
    }
    throw StreamUnderflow(test.counts().total());
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Key for substream `stream` of `seed`: a pure function of both, so any
// replicate can be regenerated without touching the others.
inline std::uint64_t substream_key(std::uint64_t seed, std::uint64_t stream) {
    return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// i.i.d. draws of (X, Y) by inverse cdf over the cells in the fixed order
// 00, 10, 01, 11.
class EventSampler {
public:
    EventSampler(const JointBernoulliParams& p, std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(substream_key(seed, stream)) {
        c0_ = p.p00();
        c1_ = c0_ + p.p10();
        c2_ = c1_ + p.p01();
        // An empty cell has an empty interval, except possibly the last one
        // when the cumulative sums round below 1.
        has_[0] = p.p00() > 0;
        has_[1] = p.p10() > 0;
        has_[2] = p.p01() > 0;
        has_[3] = p.p11() > 0;
    }

    Event next() {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        int cell;
        if (u < c0_) {
            cell = 0;
        } else if (u < c1_) {
            cell = 1;
        } else if (u < c2_) {
            cell = 2;
        } else {
            cell = 3;
        }
        while (!has_[cell]) --cell;  // only reachable through rounding in the top cut
        ++seq_;
        return {seq_, cell == 1 || cell == 3 ? 1 : 0, cell == 2 || cell == 3 ? 1 : 0};
    }

private:
    std::mt19937_64 engine_;
    double c0_, c1_, c2_;
    bool has_[4];
    std::int64_t seq_ = 0;
};

inline std::vector<Event> sample_stream(const JointBernoulliParams& p, std::uint64_t seed, std::int64_t max_n,
                                        std::uint64_t stream = 0) {
    if (max_n < 0) throw DomainError("sample_stream: max_n must be nonnegative");
    EventSampler s(p, seed, stream);
    std::vector<Event> out;
    out.reserve(static_cast<std::size_t>(max_n));
    for (std::int64_t i = 0; i < max_n; ++i) out.push_back(s.next());
    return out;
}

struct ReplicateResult {
    TestOutcome outcome;
    double theta_hat_x = 0.0;
    double theta_hat_y = 0.0;
    bool covered = false;
};

struct MonteCarloSummary {
    std::int64_t reps = 0;
    double power = 0.0;
    double power_se = 0.0;
    double asn = 0.0;
    double asn_se = 0.0;
    double mean_theta_hat_x = 0.0;
    double mean_theta_hat_y = 0.0;
    double bias_x = 0.0;
    double bias_y = 0.0;
    double bias_x_se = 0.0;
    double bias_y_se = 0.0;
    double frac_x = 0.0;
    double frac_y = 0.0;
    double frac_corner = 0.0;
    double frac_none = 0.0;
    double coverage_level = 0.0;
    double coverage = 0.0;
};

inline ReplicateResult simulate_replicate(const BivariateDesign& d, const JointBernoulliParams& p, std::uint64_t seed,
                                          std::uint64_t replicate, double chi2) {
    EventSampler sampler(p, seed, replicate);
    SequentialTest test(d);
    while (true) {
        const Event e = sampler.next();
        if (test.observe(e.x, e.y)) break;
    }
    ReplicateResult r;
    r.outcome = test.outcome();
    const PostTestEstimate est = post_test_estimate(r.outcome.counts, r.outcome.m_star);
    r.theta_hat_x = est.theta_hat_x;
    r.theta_hat_y = est.theta_hat_y;
    r.covered = wald_region_contains(est, {p.theta_x(), p.theta_y()}, chi2);
    return r;
}

// Every replicate, in replicate order. Work is split into contiguous blocks,
// so the result does not depend on the thread count.
inline std::vector<ReplicateResult> monte_carlo_replicates(const BivariateDesign& d, const JointBernoulliParams& p,
                                                           std::int64_t reps, std::uint64_t seed, int threads = 1,
                                                           double level = 0.95) {
    if (reps < 1) throw DomainError("monte_carlo: reps must be >= 1");
    if (d.n_star < 1) throw DomainError("monte_carlo: design must have n_star >= 1");
    const double chi2 = chi2_2_quantile(level);
    std::vector<ReplicateResult> out(static_cast<std::size_t>(reps));
    const int t = std::clamp<std::int64_t>(threads, 1, reps);
    auto work = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r)
            out[static_cast<std::size_t>(r)] = simulate_replicate(d, p, seed, static_cast<std::uint64_t>(r), chi2);
    };
    if (t == 1) {
        work(0, reps);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) pool.emplace_back(work, reps * i / t, reps * (i + 1) / t);
    for (auto& th : pool) th.join();
    return out;
}

inline MonteCarloSummary summarize(const std::vector<ReplicateResult>& rs, const JointBernoulliParams& p,
                                   double level = 0.95) {
    MonteCarloSummary s;
    const double n = static_cast<double>(rs.size());
    s.reps = static_cast<std::int64_t>(rs.size());
    s.coverage_level = level;
    CompensatedSum rej, m1, m2, ex, ex2, ey, ey2, fx, fy, fc, cov;
    for (const auto& r : rs) {
        const double m = static_cast<double>(r.outcome.m_star);
        rej += r.outcome.decision == Decision::reject ? 1.0 : 0.0;
        m1 += m;
        m2 += m * m;
        ex += r.theta_hat_x;
        ex2 += r.theta_hat_x * r.theta_hat_x;
        ey += r.theta_hat_y;
        ey2 += r.theta_hat_y * r.theta_hat_y;
        fx += r.outcome.boundary == Boundary::x ? 1.0 : 0.0;
        fy += r.outcome.boundary == Boundary::y ? 1.0 : 0.0;
        fc += r.outcome.boundary == Boundary::corner ? 1.0 : 0.0;
        cov += r.covered ? 1.0 : 0.0;
    }
    auto se = [n](double sum, double sum_sq) {
        if (n < 2) return 0.0;
        const double mean = sum / n;
        return std::sqrt(std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0) / n);
    };
    s.power = rej.value() / n;
    s.power_se = std::sqrt(s.power * (1.0 - s.power) / n);
    s.asn = m1.value() / n;
    s.asn_se = se(m1.value(), m2.value());
    s.mean_theta_hat_x = ex.value() / n;
    s.mean_theta_hat_y = ey.value() / n;
    s.bias_x = s.mean_theta_hat_x - p.theta_x();
    s.bias_y = s.mean_theta_hat_y - p.theta_y();
    s.bias_x_se = se(ex.value(), ex2.value());
    s.bias_y_se = se(ey.value(), ey2.value());
    s.frac_x = fx.value() / n;
    s.frac_y = fy.value() / n;
    s.frac_corner = fc.value() / n;
    s.frac_none = 1.0 - s.frac_x - s.frac_y - s.frac_corner;
    s.coverage = cov.value() / n;
    return s;
}

inline MonteCarloSummary monte_carlo(const BivariateDesign& d, const JointBernoulliParams& p, std::int64_t reps,
                                     std::uint64_t seed, int threads = 1, double level = 0.95) {
    return summarize(monte_carlo_replicates(d, p, reps, seed, threads, level), p, level);
}

}  // namespace bicurt
