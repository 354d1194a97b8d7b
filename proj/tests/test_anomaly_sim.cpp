#include <cmath>
#include <numeric>
#include <algorithm>

#include <gtest/gtest.h>

#include "agcfar/anomaly_sim.hpp"

using namespace agcfar;

namespace {

double mean_of_bits(const std::vector<std::uint8_t>& a) {
    return static_cast<double>(std::accumulate(a.begin(), a.end(), std::size_t{0})) / static_cast<double>(a.size());
}

GatingProcess bernoulli(double p0) {
    GatingProcess g;
    g.kind = GatingKind::Bernoulli;
    g.p0 = p0;
    return g;
}

GatingProcess markov(double birth, double death) {
    GatingProcess g;
    g.kind = GatingKind::TwoStateMarkov;
    g.birth_rate = birth;
    g.death_rate = death;
    return g;
}

TimeSeries zeros(std::size_t n) { return TimeSeries(std::vector<double>(n, 0.0)); }

ArimaModel white(double sigma2) {
    ArimaModel m;
    m.sigma2 = sigma2;
    return m;
}

GarchModel constant_variance(double v) {
    GarchModel g;
    g.varsigma0 = v;
    return g;
}

} // namespace

TEST(SampleGating, BernoulliExtremes) {
    RandomSource rng(1);
    for (auto v : sample_gating(bernoulli(1.0), 1000, rng)) ASSERT_EQ(v, 0);
    for (auto v : sample_gating(bernoulli(0.0), 1000, rng)) ASSERT_EQ(v, 1);
    EXPECT_TRUE(sample_gating(bernoulli(0.5), 0, rng).empty());
}

TEST(SampleGating, BernoulliRate) {
    RandomSource rng(2);
    EXPECT_NEAR(mean_of_bits(sample_gating(bernoulli(0.7), 100000, rng)), 0.3, 0.01);
}

TEST(SampleGating, MarkovOccupancy) {
    for (auto [b, d] : {std::pair{0.03, 0.07}, std::pair{0.2, 0.2}, std::pair{0.01, 0.002}}) {
        RandomSource rng(3);
        const auto g = markov(b, d);
        EXPECT_NEAR(mean_of_bits(sample_gating(g, 100000, rng)), stationary_occupancy(g), 0.02);
    }
}

TEST(SampleGating, MarkovStartsAbsentAndWindowConfines) {
    RandomSource rng(4);
    auto g = markov(1.0, 0.0);
    const auto a = sample_gating(g, 10, rng);
    EXPECT_EQ(a, (std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1, 1, 1, 1, 1}));
    g.window = std::pair<std::size_t, std::size_t>{3, 6};
    EXPECT_EQ(sample_gating(g, 10, rng), (std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1, 0, 0, 0, 0}));
}

TEST(SampleGating, RejectsInvalidRates) {
    RandomSource rng(5);
    EXPECT_THROW(sample_gating(bernoulli(1.5), 10, rng), Error);
    EXPECT_THROW(sample_gating(markov(-0.1, 0.1), 10, rng), Error);
}

TEST(Synthesize, ComponentExact) {
    RandomSource gate(6);
    const auto a = sample_gating(bernoulli(0.5), 500, gate);
    ArimaModel arima;
    arima.p = 1;
    arima.d = 1;
    arima.phi = {0.5};
    GarchModel garch{.k = 1, .ell = 1, .varsigma0 = 0.2, .varsigma = {0.5}, .eta = {0.3}};
    const auto sig = synthesize(arima, garch, a, RandomSource(7));
    ASSERT_EQ(sig.s.size(), 500u);
    EXPECT_EQ(sig.truth, a);
    for (std::size_t t = 0; t < 500; ++t) ASSERT_EQ(sig.s[t], sig.x[t] + (a[t] ? sig.z[t] : 0.0));

    const auto off = synthesize(arima, garch, std::vector<std::uint8_t>(50, 0), RandomSource(8));
    EXPECT_EQ(off.s, off.x);
    const auto on = synthesize(arima, garch, std::vector<std::uint8_t>(50, 1), RandomSource(8));
    for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(on.s[t], on.x[t] + on.z[t]);
    EXPECT_EQ(on.x, off.x);  // X does not depend on the gating
}

TEST(Synthesize, VarianceAdditivity) {
    std::vector<std::uint8_t> a(20000, 0);
    std::fill(a.begin() + 10000, a.end(), 1);
    const auto sig = synthesize(white(1.0), constant_variance(9.0), a, RandomSource(9));
    const auto v = sig.s.values();
    EXPECT_NEAR(variance_of(v.subspan(0, 10000)), 1.0, 0.15);
    EXPECT_NEAR(variance_of(v.subspan(10000)), 10.0, 1.5);
}

TEST(Synthesize, Deterministic) {
    const std::vector<std::uint8_t> a(300, 1);
    const auto s1 = synthesize(white(1.0), constant_variance(2.0), a, RandomSource(10));
    const auto s2 = synthesize(white(1.0), constant_variance(2.0), a, RandomSource(10));
    EXPECT_EQ(s1.s, s2.s);
}

TEST(InjectAnomaly, HandExamples) {
    EXPECT_EQ(inject_anomaly(zeros(6), {AnomalyKind::AA, 3, 5.0, {}}).vector(), (std::vector<double>{0, 0, 0, 5, 0, 0}));
    EXPECT_EQ(inject_anomaly(zeros(5), {AnomalyKind::LSA, 2, 2.0, {}}).vector(), (std::vector<double>{0, 0, 2, 2, 2}));
    EXPECT_EQ(inject_anomaly(zeros(4), {AnomalyKind::TCA, 1, 4.0, 0.5}).vector(), (std::vector<double>{0, 4, 2, 1}));
    ArimaModel ar;
    ar.p = 1;
    ar.phi = {0.5};
    ar.mu = 3.0;  // the filter ignores the level
    EXPECT_EQ(inject_anomaly(zeros(4), {AnomalyKind::IA, 0, 1.0, {}}, ar).vector(),
              (std::vector<double>{1, 0.5, 0.25, 0.125}));
}

TEST(InjectAnomaly, IaWithoutDynamicsIsAa) {
    RandomSource rng(11);
    const auto base = standard_normal_draws(rng, 30);
    EXPECT_EQ(inject_anomaly(base, {AnomalyKind::IA, 7, -2.5, {}}), inject_anomaly(base, {AnomalyKind::AA, 7, -2.5, {}}));
}

TEST(InjectAnomaly, TransientPatterns) {
    const double omega = 3.0, delta = 0.8;
    const auto y = inject_anomaly(zeros(40), {AnomalyKind::TCA, 5, omega, delta});
    for (std::size_t m = 1; m + 5 < 40; ++m) EXPECT_LE(std::abs(y[5 + m]), omega * std::pow(delta, static_cast<double>(m)) * (1.0 + 1e-12));
    const auto aa = inject_anomaly(zeros(40), {AnomalyKind::AA, 9, omega, {}});
    EXPECT_EQ(std::count_if(aa.begin(), aa.end(), [](double v) { return v != 0.0; }), 1);
}

TEST(InjectAnomaly, Errors) {
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Parse;
    };
    EXPECT_EQ(kind_of([] { inject_anomaly(zeros(4), {AnomalyKind::AA, 4, 1.0, {}}); }), ErrorKind::InvalidOnset);
    EXPECT_EQ(kind_of([] { inject_anomaly(zeros(4), {AnomalyKind::TCA, 1, 1.0, {}}); }), ErrorKind::MissingDecay);
    EXPECT_EQ(kind_of([] { inject_anomaly(zeros(4), {AnomalyKind::TCA, 1, 1.0, 1.0}); }), ErrorKind::InvalidConfig);
}
