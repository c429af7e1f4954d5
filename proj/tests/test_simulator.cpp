#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "bicurt/exact.hpp"
#include "bicurt/simulator.hpp"

using namespace bicurt;

namespace {

const BivariateDesign kReference = design_from_boundaries(121, 19, 18);

std::vector<Event> constant_stream(int n, int x, int y) {
    std::vector<Event> s;
    for (int i = 1; i <= n; ++i) s.push_back({i, x, y});
    return s;
}

}  // namespace

TEST(RunTest, AllBothEventsStopAtLowerBoundary) {
    const auto o = run_test(kReference, constant_stream(200, 1, 1));
    EXPECT_EQ(o.decision, Decision::reject);
    EXPECT_EQ(o.m_star, 19);
    EXPECT_EQ(o.boundary, Boundary::y);
    EXPECT_EQ(o.counts.n11, 19);
}

TEST(RunTest, QuietStreamRunsToCurtailment) {
    const auto o = run_test(kReference, constant_stream(121, 0, 0));
    EXPECT_EQ(o.decision, Decision::not_reject);
    EXPECT_EQ(o.m_star, 121);
    EXPECT_EQ(o.boundary, Boundary::none);
}

TEST(RunTest, SimultaneousCrossingIsCorner) {
    const auto d = design_from_boundaries(20, 3, 3);
    std::vector<Event> s{{1, 1, 0}, {2, 1, 0}, {3, 1, 0}, {4, 0, 1}, {5, 0, 1}, {6, 0, 1}, {7, 1, 1}};
    const auto o = run_test(d, s);
    EXPECT_EQ(o.boundary, Boundary::corner);
    EXPECT_EQ(o.decision, Decision::reject);
    EXPECT_EQ(o.m_star, 7);
}

// Example counts (63, 18, 11, 25) fed one row at a time under the (117, 57, 57) design never
// reaches a boundary.
TEST(RunTest, NonRejectionReplay) {
    const auto d = design_from_boundaries(117, 57, 57);
    std::vector<Event> s;
    std::int64_t seq = 0;
    auto push = [&](int n, int x, int y) {
        for (int i = 0; i < n; ++i) s.push_back({++seq, x, y});
    };
    push(25, 1, 1);
    push(18, 1, 0);
    push(11, 0, 1);
    push(63, 0, 0);
    const auto o = run_test(d, s);
    EXPECT_EQ(o.decision, Decision::not_reject);
    EXPECT_EQ(o.m_star, 117);
    EXPECT_EQ(o.counts, (LatticeCounts{63, 18, 11, 25}));
}

TEST(RunTest, StreamErrors) {
    EXPECT_THROW(run_test(kReference, constant_stream(50, 0, 0)), StreamUnderflow);
    std::vector<Event> bad{{1, 0, 0}, {1, 0, 0}};
    EXPECT_THROW(run_test(kReference, bad), SequenceError);
    std::vector<Event> gap{{1, 0, 0}, {5, 0, 1}, {4, 0, 0}};
    EXPECT_THROW(run_test(kReference, gap), SequenceError);
    std::vector<Event> junk{{1, 2, 0}};
    EXPECT_THROW(run_test(kReference, junk), DomainError);
}

TEST(SequentialTest, RefusesInputAfterDecision) {
    SequentialTest t(design_from_boundaries(3, 0, 0));
    EXPECT_THROW(t.outcome(), StateError);
    EXPECT_TRUE(t.observe(1, 0));
    EXPECT_THROW(t.observe(0, 0), StateError);
}

// Every path of length N* weighted by its probability: the distribution of
// (m_star, boundary) from run_test is the closed-form pmf.
TEST(RunTest, EnumeratedPathsReproducePmf) {
    const auto p = make_params(0.3, 0.45, 0.25);
    const double cell[4] = {p.p00(), p.p10(), p.p01(), p.p11()};
    for (auto [n, kx, ky] : {std::tuple{6, 2, 2}, {6, 1, 2}, {7, 2, 3}, {5, 0, 0}}) {
        const auto d = design_from_boundaries(n, kx, ky);
        using Key = std::pair<std::int64_t, Boundary>;
        std::map<Key, double> mass;
        std::int64_t total = 1;
        for (int i = 0; i < n; ++i) total *= 4;
        for (std::int64_t code = 0; code < total; ++code) {
            std::vector<Event> s;
            double prob = 1.0;
            std::int64_t c = code;
            for (int i = 0; i < n; ++i, c /= 4) {
                const int k = static_cast<int>(c % 4);
                prob *= cell[k];
                s.push_back({i + 1, k & 1, k >> 1});
            }
            const auto o = run_test(d, s);
            mass[Key{o.m_star, o.boundary}] += prob;
        }
        const auto pmf = stopping_pmf_exact(d, p);
        auto at = [&](std::int64_t m, Boundary b) { return mass[Key(m, b)]; };
        for (int m = 1; m <= n; ++m) {
            EXPECT_NEAR(at(m, Boundary::x), pmf.x_at(m), 1e-12);
            EXPECT_NEAR(at(m, Boundary::y), pmf.y_at(m), 1e-12);
            EXPECT_NEAR(at(m, Boundary::corner), pmf.corner_at(m), 1e-12);
        }
        EXPECT_NEAR(at(n, Boundary::none), pmf.continue_mass, 1e-12);
    }
}

TEST(Sampler, CellFrequencies) {
    const auto p = make_params(0.2, 0.35, 0.3);
    const int n = 200000;
    const auto s = sample_stream(p, 99, n);
    double f[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].seq, static_cast<std::int64_t>(i) + 1);
        f[s[i].x + 2 * s[i].y] += 1.0;
    }
    const double ref[4] = {p.p00(), p.p10(), p.p01(), p.p11()};
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(f[c] / n, ref[c], 4.5 * std::sqrt(ref[c] * (1 - ref[c]) / n)) << c;
}

TEST(Sampler, EmptyCellsNeverDrawn) {
    const auto b = correlation_bounds(0.3, 0.4);
    for (double rho : {b.lower, b.upper()}) {
        const auto p = make_params(0.3, 0.4, rho);
        for (const auto& e : sample_stream(p, 5, 50000)) {
            const int c = e.x + 2 * e.y;
            const double cells[4] = {p.p00(), p.p10(), p.p01(), p.p11()};
            EXPECT_GT(cells[c], 0.0);
        }
    }
}

TEST(Sampler, StreamsArePureFunctionsOfSeedAndIndex) {
    const auto p = make_params(0.1, 0.2, 0.1);
    EXPECT_EQ(sample_stream(p, 7, 300, 3), sample_stream(p, 7, 300, 3));
    EXPECT_NE(sample_stream(p, 7, 300, 3), sample_stream(p, 7, 300, 4));
    EXPECT_NE(sample_stream(p, 8, 300, 3), sample_stream(p, 7, 300, 3));
    EXPECT_NE(substream_key(1, 0), substream_key(0, 1));
}

TEST(MonteCarlo, IdenticalAcrossThreadCounts) {
    const auto p = make_params(0.1, 0.2, 0.1);
    const auto a = monte_carlo_replicates(kReference, p, 3000, 11, 1);
    for (int t : {2, 3, 8}) {
        const auto b = monte_carlo_replicates(kReference, p, 3000, 11, t);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i].outcome, b[i].outcome) << t << ' ' << i;
        const auto sa = summarize(a, p), sb = summarize(b, p);
        EXPECT_EQ(sa.power, sb.power);
        EXPECT_EQ(sa.asn, sb.asn);
        EXPECT_EQ(sa.bias_x, sb.bias_x);
    }
}

TEST(MonteCarlo, ConvergesToExact) {
    const auto p = make_params(0.1, 0.2, 0.1);
    const double power = power_exact(kReference, p);
    const double asn = asn_exact(kReference, p);
    for (std::int64_t reps : {1000, 10000, 100000}) {
        const auto s = monte_carlo(kReference, p, reps, 2024, 4);
        EXPECT_NEAR(s.power, power, 4 * s.power_se + 1e-12) << reps;
        EXPECT_NEAR(s.asn, asn, 4 * s.asn_se) << reps;
        EXPECT_NEAR(s.frac_x + s.frac_y + s.frac_corner + s.frac_none, 1.0, 1e-12);
        EXPECT_NEAR(s.frac_x + s.frac_y + s.frac_corner, s.power, 1e-12);
    }
}

TEST(MonteCarlo, CornerNeedsBothMarginsAtTheirBoundary) {
    const auto d = design_from_boundaries(60, 6, 6);
    const auto p = make_params(0.2, 0.2, 0.8);
    int corners = 0;
    for (const auto& r : monte_carlo_replicates(d, p, 4000, 3, 2)) {
        if (r.outcome.boundary != Boundary::corner) continue;
        ++corners;
        EXPECT_EQ(r.outcome.counts.sx(), 7);
        EXPECT_EQ(r.outcome.counts.sy(), 7);
        EXPECT_GE(r.outcome.counts.n11, 1);
    }
    EXPECT_GT(corners, 0);
}

TEST(MonteCarlo, RejectsBadArguments) {
    EXPECT_THROW(monte_carlo(kReference, make_params(0.1, 0.2, 0.1), 0, 1), DomainError);
    EXPECT_THROW(sample_stream(make_params(0.1, 0.2, 0.1), 1, -1), DomainError);
}
