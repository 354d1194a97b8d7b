#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "agcfar/cfar.hpp"
#include "agcfar/random.hpp"

using namespace agcfar;

namespace {

TimeSeries exponential_power(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    RandomSource rng(seed);
    std::vector<double> v(n);
    for (auto& e : v) e = -scale * std::log(rng.uniform());
    return TimeSeries(std::move(v));
}

CfarConfig config(CfarKind kind, int t, int g, double pfa, int rank = 0) {
    CfarConfig c;
    c.kind = kind;
    c.half_window = t;
    c.guard = g;
    c.pfa = pfa;
    c.os_rank = rank;
    return c;
}

double alarm_rate(const DetectionTrace& tr) {
    std::size_t hits = 0, cells = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (!tr.decidable[i]) continue;
        ++cells;
        hits += tr.decision[i];
    }
    return static_cast<double>(hits) / static_cast<double>(cells);
}

} // namespace

TEST(CfarFactor, FrozenValues) {
    EXPECT_NEAR(ca_factor(16, 1e-2), 5.336342914613184, 1e-12);
    EXPECT_NEAR(ca_factor(32, 1e-2), 4.953023510062662, 1e-12);
    EXPECT_NEAR(os_factor(16, 12, 1e-2), 4.425092681827699, 1e-8);
    EXPECT_NEAR(os_factor(32, 24, 1e-2), 3.838276771607692, 1e-8);
    EXPECT_NEAR(os_factor(1, 1, 0.5), 1.0, 1e-9);
}

TEST(CfarFactor, CaRoundTripsClosedForm) {
    for (int n : {1, 4, 16, 64}) {
        for (double pfa : {1e-6, 1e-3, 0.1, 0.5}) {
            const double a = ca_factor(n, pfa);
            EXPECT_NEAR(std::pow(1.0 + a / n, -n), pfa, 1e-12 * std::max(1.0, pfa * 1e3));
        }
    }
}

TEST(CfarFactor, OsSolvesEquation) {
    for (int n : {8, 32}) {
        for (int r = 1; r <= n; r += 3) {
            for (double pfa : {1e-6, 1e-2, 0.3}) {
                EXPECT_NEAR(os_false_alarm(n, r, os_factor(n, r, pfa)), pfa, 1e-10);
            }
        }
    }
}

TEST(CfarFactor, OsTinyPfaWidensBracket) {
    const double a = os_factor(4, 1, 1e-30);
    EXPECT_GT(a, 1e6);
    EXPECT_NEAR(os_false_alarm(4, 1, a) / 1e-30, 1.0, 1e-6);
}

TEST(CfarFactor, MonotoneInPfa) {
    double prev_ca = ca_factor(32, 1e-6), prev_os = os_factor(32, 24, 1e-6);
    for (double pfa : {1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5}) {
        const double ca = ca_factor(32, pfa), os = os_factor(32, 24, pfa);
        EXPECT_LT(ca, prev_ca);
        EXPECT_LT(os, prev_os);
        prev_ca = ca;
        prev_os = os;
    }
}

TEST(CfarFactor, OsMonteCarloExceedance) {
    // Direct draws of (rank-th order statistic, CUT) pairs from Exp(1).
    const int n = 32, rank = 24;
    const double alpha = os_factor(n, rank, 1e-2);
    RandomSource rng(11);
    std::vector<double> ref(n);
    std::size_t hits = 0;
    const std::size_t trials = 1000000;
    for (std::size_t k = 0; k < trials; ++k) {
        for (auto& v : ref) v = -std::log(rng.uniform());
        std::nth_element(ref.begin(), ref.begin() + rank - 1, ref.end());
        hits += (-std::log(rng.uniform())) > alpha * ref[rank - 1] ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(hits) / trials, 1e-2, 1e-3);
}

TEST(CfarDetect, ConstantSeriesNeverAlarms) {
    for (double c : {0.0, 1.0, 7.5}) {
        for (auto kind : {CfarKind::CA, CfarKind::OS}) {
            const auto tr = cfar_detect(TimeSeries(std::vector<double>(200, c)), config(kind, 8, 2, 0.01));
            for (auto d : tr.decision) ASSERT_EQ(d, 0);
            EXPECT_TRUE(tr.intervals.empty());
        }
    }
}

TEST(CfarDetect, CalibratedOnExponentialNoise) {
    for (auto kind : {CfarKind::CA, CfarKind::OS}) {
        const auto tr = cfar_detect(exponential_power(200000, 12), config(kind, 16, 2, 1e-2));
        const double rate = alarm_rate(tr);
        EXPECT_GE(rate, 0.007) << to_string(kind);
        EXPECT_LE(rate, 0.013) << to_string(kind);
    }
}

TEST(CfarDetect, FlagsIsolatedSpike) {
    auto v = exponential_power(400, 13).vector();
    v[200] = 100.0;
    for (auto kind : {CfarKind::CA, CfarKind::OS}) {
        const auto tr = cfar_detect(TimeSeries(v), config(kind, 16, 2, 1e-3));
        EXPECT_EQ(tr.decision[200], 1);
    }
}

TEST(CfarDetect, ScaleInvariance) {
    const auto p = exponential_power(3000, 14);
    std::vector<double> scaled(p.begin(), p.end());
    for (auto& v : scaled) v *= 10.0;
    for (auto kind : {CfarKind::CA, CfarKind::OS}) {
        const auto a = cfar_detect(p, config(kind, 16, 2, 0.05));
        const auto b = cfar_detect(TimeSeries(scaled), config(kind, 16, 2, 0.05));
        EXPECT_EQ(a.decision, b.decision);
    }
}

TEST(CfarDetect, LargerPfaDetectsSuperset) {
    const auto p = exponential_power(3000, 15);
    for (auto kind : {CfarKind::CA, CfarKind::OS}) {
        const auto lo = cfar_detect(p, config(kind, 16, 2, 0.01));
        const auto hi = cfar_detect(p, config(kind, 16, 2, 0.5));
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (lo.decision[i]) {
                ASSERT_EQ(hi.decision[i], 1);
            }
        }
    }
}

TEST(CfarDetect, OsRobustToInterferingTargets) {
    // Two strong targets inside one reference window mask each other under CA
    // but not under OS.
    std::vector<double> v(300, 1.0);
    v[150] = 50.0;
    v[145] = 50.0;
    v[155] = 50.0;
    const auto ca = cfar_detect(TimeSeries(v), config(CfarKind::CA, 8, 1, 1e-3));
    const auto os = cfar_detect(TimeSeries(v), config(CfarKind::OS, 8, 1, 1e-3));
    EXPECT_EQ(os.decision[150], 1);
    EXPECT_EQ(ca.decision[150], 0);
}

TEST(CfarDetect, WindowPlacementAtEdges) {
    // n = 2(T+G)+1: only the centre cell is two-sided, cells 0..2 use the
    // leading side, 10..12 the lagging side, and 3..5, 7..9 cannot be placed.
    const auto small = cfar_detect(TimeSeries(std::vector<double>(13, 1.0)), config(CfarKind::CA, 4, 2, 0.1));
    const std::vector<std::uint8_t> expected{1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1};
    EXPECT_EQ(small.decidable, expected);
    for (std::size_t t = 0; t < 13; ++t) {
        if (!expected[t]) {
            EXPECT_TRUE(std::isinf(small.threshold[t]));
            EXPECT_EQ(small.decision[t], 0);
        }
    }

    const auto tr = cfar_detect(exponential_power(500, 16), config(CfarKind::OS, 16, 2, 0.01));
    for (auto d : tr.decidable) EXPECT_EQ(d, 1);
    EXPECT_EQ(tr.size(), 500u);
}

TEST(CfarDetect, Errors) {
    try {
        cfar_detect(TimeSeries(std::vector<double>(36, 1.0)), config(CfarKind::CA, 16, 2, 0.01));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SeriesTooShort);
    }
    std::vector<double> v(100, 1.0);
    v[42] = -1e-9;
    try {
        cfar_detect(TimeSeries(v), config(CfarKind::CA, 4, 1, 0.01));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NegativePower);
        EXPECT_EQ(e.index(), 42u);
    }
    const TimeSeries ok(std::vector<double>(100, 1.0));
    EXPECT_THROW(cfar_detect(ok, config(CfarKind::CA, 4, 1, 0.0)), Error);
    EXPECT_THROW(cfar_detect(ok, config(CfarKind::CA, 4, 1, 1.0)), Error);
    EXPECT_THROW(cfar_detect(ok, config(CfarKind::CA, 0, 1, 0.1)), Error);
    EXPECT_THROW(cfar_detect(ok, config(CfarKind::OS, 4, 1, 0.1, 9)), Error);
}

TEST(ExtractIntervals, Examples) {
    using V = std::vector<std::uint8_t>;
    EXPECT_TRUE(extract_intervals(V{}).empty());
    EXPECT_TRUE(extract_intervals(V{0, 0, 0}).empty());
    EXPECT_EQ(extract_intervals(V{1, 1, 0, 1}), (std::vector<Interval>{{0, 2}, {3, 4}}));
    EXPECT_EQ(extract_intervals(V{0, 1, 1, 1, 0}), (std::vector<Interval>{{1, 4}}));
}
