#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "agcfar/pipeline.hpp"

using namespace agcfar;

namespace {

Scenario small_scenario() {
    auto sc = default_scenario();
    sc.n = 900;
    sc.burn_in = 200;
    sc.gating.window = std::pair<std::size_t, std::size_t>{300, 600};
    return sc;
}

FitOptions quick_fit() {
    FitOptions f;
    f.max_p = 1;
    f.max_q = 0;
    return f;
}

DetectionTrace trace_of(std::vector<std::uint8_t> decision) {
    DetectionTrace tr;
    tr.decision = std::move(decision);
    tr.decidable.assign(tr.decision.size(), 1);
    tr.threshold.assign(tr.decision.size(), 1.0);
    tr.power.assign(tr.decision.size(), 0.0);
    tr.intervals = extract_intervals(tr.decision);
    return tr;
}

} // namespace

TEST(FitHybrid, ShapesAndPositivity) {
    const auto sig = simulate_scenario(small_scenario(), 3);
    const auto h = fit_hybrid(sig.s, quick_fit());
    EXPECT_EQ(h.residuals.size(), sig.s.size() - 1);
    EXPECT_EQ(h.volatility.size(), h.residuals.size());
    for (double v : h.volatility) ASSERT_GT(v, 0.0);
    EXPECT_EQ(h.arima_table.size(), 2u);
    EXPECT_EQ(h.garch_table.size(), 3u);
}

TEST(FitHybrid, ApplyReproducesFit) {
    const auto sig = simulate_scenario(small_scenario(), 4);
    const auto h = fit_hybrid(sig.s, quick_fit());
    const auto again = apply_hybrid(sig.s, h.arima, h.garch);
    EXPECT_EQ(again.residuals, h.residuals);
    EXPECT_EQ(again.volatility, h.volatility);
}

TEST(FitHybrid, ConstantInputIsDegenerate) {
    try {
        fit_hybrid(TimeSeries(std::vector<double>(500, 2.0)), quick_fit());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
    }
}

TEST(FitHybrid, PureArmaPrefersConstantVariance) {
    ArimaModel ar{.p = 1, .d = 0, .q = 0, .mu = 0.0, .phi = {0.5}, .theta = {}, .sigma2 = 1.0};
    FitOptions f;
    f.d = 0;
    f.max_p = 1;
    f.max_q = 0;
    int zero = 0, total = 100;
    for (int seed = 0; seed < total; ++seed) {
        RandomSource rng(1000 + static_cast<std::uint64_t>(seed));
        const auto h = fit_hybrid(simulate_arma(ar, 500, 100, rng), f);
        zero += (h.garch.k == 0 && h.garch.ell == 0) ? 1 : 0;
    }
    EXPECT_GT(zero, total - zero);
}

TEST(FitHybrid, VolatilityRisesOverBurst) {
    Scenario sc = small_scenario();
    sc.arima = ArimaModel{.p = 0, .d = 1, .q = 0, .mu = 0.0, .phi = {}, .theta = {}, .sigma2 = 1.0};
    sc.garch = GarchModel{.k = 1, .ell = 1, .varsigma0 = 9.0, .varsigma = {0.1}, .eta = {0.5}};
    sc.gating = GatingProcess{.kind = GatingKind::Bernoulli, .p0 = 0.0, .birth_rate = 0.0, .death_rate = 0.0,
                              .window = std::pair<std::size_t, std::size_t>{300, 600}};
    const auto sig = simulate_scenario(sc, 5);
    const auto h = fit_hybrid(sig.s, quick_fit());
    double in = 0.0, out = 0.0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t t = 0; t < h.volatility.size(); ++t) {
        if (sig.truth[t + 1]) {
            in += h.volatility[t];
            ++nin;
        } else {
            out += h.volatility[t];
            ++nout;
        }
    }
    EXPECT_GE(in / static_cast<double>(nin), 2.0 * out / static_cast<double>(nout));
}

TEST(Detect, LengthAndAlignment) {
    const auto sig = simulate_scenario(small_scenario(), 6);
    const auto h = fit_hybrid(sig.s, quick_fit());
    const auto tr = detect(sig.s, h);
    ASSERT_EQ(tr.size(), sig.s.size());
    EXPECT_EQ(tr.decidable[0], 0);
    EXPECT_EQ(tr.decision[0], 0);
    EXPECT_EQ(tr.power[0], 0.0);
    for (std::size_t t = 1; t < tr.size(); ++t) ASSERT_EQ(tr.power[t], h.volatility[t - 1]);
    for (const auto& iv : tr.intervals) EXPECT_LE(iv.end, tr.size());
    EXPECT_THROW(detect(TimeSeries(std::vector<double>(10, 1.0)), h), Error);
}

TEST(Detect, ScaleInvariance) {
    const auto sig = simulate_scenario(small_scenario(), 7);
    std::vector<double> big(sig.s.begin(), sig.s.end());
    for (auto& v : big) v *= 10.0;
    const auto a = detect(sig.s, fit_hybrid(sig.s, quick_fit()));
    const auto b = detect(TimeSeries(big), fit_hybrid(TimeSeries(big), quick_fit()));
    EXPECT_EQ(a.decision, b.decision);
}

TEST(Detect, HomoskedasticInputRarelyAlarms) {
    ArimaModel ar{.p = 1, .d = 1, .q = 0, .mu = 0.0, .phi = {0.5}, .theta = {}, .sigma2 = 1.0};
    RandomSource rng(8);
    const auto w = simulate_arma(ar, 2000, 200, rng);
    const auto s = undifference(w, TimeSeries{0.0}, 1);
    const auto tr = detect(s, fit_hybrid(s, quick_fit()));
    const auto alarms = std::count(tr.decision.begin(), tr.decision.end(), 1);
    EXPECT_LE(static_cast<double>(alarms) / static_cast<double>(tr.size()), 0.05);
}

TEST(Detect, StricterPfaNeverAddsAlarms) {
    const auto sig = simulate_scenario(small_scenario(), 9);
    const auto h = fit_hybrid(sig.s, quick_fit());
    double prev = 1.0;
    for (double pfa : {0.5, 0.1, 1e-2, 1e-3}) {
        DetectOptions opt;
        opt.cfar.pfa = pfa;
        const double rate = evaluate(detect(sig.s, h, opt), sig.truth).empirical_pfa;
        EXPECT_LE(rate, prev);
        prev = rate;
    }
}

TEST(Detect, StartupMaskAndSquaredResidualStatistic) {
    const auto sig = simulate_scenario(small_scenario(), 10);
    const auto h = fit_hybrid(sig.s, quick_fit());
    DetectOptions opt;
    opt.startup_mask = 100;
    const auto tr = detect(sig.s, h, opt);
    for (std::size_t t = 0; t <= 100; ++t) EXPECT_EQ(tr.decision[t], 0);
    opt.startup_mask = 0;
    opt.statistic = DetectionStatistic::SquaredResidual;
    const auto sq = detect(sig.s, h, opt);
    EXPECT_DOUBLE_EQ(sq.power[5], h.residuals[4] * h.residuals[4]);
}

TEST(Evaluate, Examples) {
    const std::vector<std::uint8_t> truth{0, 0, 1, 1, 1, 0, 0, 1, 1, 0};
    const auto perfect = evaluate(trace_of(truth), truth);
    EXPECT_EQ(perfect.empirical_pfa, 0.0);
    EXPECT_EQ(perfect.empirical_pd, 1.0);
    EXPECT_EQ(perfect.episode_pd, 1.0);
    ASSERT_EQ(perfect.delays.size(), 2u);
    EXPECT_EQ(perfect.delays[0], 0u);
    EXPECT_EQ(perfect.median_delay, 0.0);

    const auto silent = evaluate(trace_of(std::vector<std::uint8_t>(truth.size(), 0)), truth);
    EXPECT_EQ(silent.empirical_pd, 0.0);
    EXPECT_FALSE(silent.delays[0].has_value());
    EXPECT_FALSE(silent.median_delay.has_value());

    std::vector<std::uint8_t> comp(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) comp[i] = 1 - truth[i];
    const auto inverse = evaluate(trace_of(comp), truth);
    EXPECT_EQ(inverse.empirical_pfa, 1.0);
    EXPECT_EQ(inverse.empirical_pd, 0.0);

    const auto late = evaluate(trace_of({0, 0, 0, 0, 1, 0, 0, 0, 1, 0}), truth);
    EXPECT_EQ(late.delays[0], 2u);
    EXPECT_EQ(late.delays[1], 1u);
    EXPECT_EQ(late.median_delay, 1.5);

    EXPECT_THROW(evaluate(trace_of({0, 1}), truth), Error);
}

TEST(MonteCarlo, SingleRunMatchesRunOnce) {
    const auto sc = small_scenario();
    const auto mc = monte_carlo(sc, 1, 21, quick_fit(), {}, 1);
    const auto one = run_once(sc, 21, quick_fit(), {});
    ASSERT_TRUE(one.ok);
    for (std::size_t t = 0; t < sc.n; ++t) {
        if (one.trace.decidable[t]) ASSERT_EQ(mc.mean_threshold[t], one.trace.threshold[t]);
        else ASSERT_TRUE(std::isnan(mc.mean_threshold[t]));
        ASSERT_EQ(mc.detection_frequency[t], one.trace.decision[t]);
    }
    EXPECT_EQ(mc.pfa.mean, one.report.empirical_pfa);
    EXPECT_EQ(mc.pfa.stddev, 0.0);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
    const auto sc = small_scenario();
    const auto a = monte_carlo(sc, 6, 100, quick_fit(), {}, 1);
    const auto b = monte_carlo(sc, 6, 100, quick_fit(), {}, 3);
    EXPECT_EQ(a.detection_frequency, b.detection_frequency);
    for (std::size_t t = 0; t < sc.n; ++t) {
        if (std::isnan(a.mean_threshold[t])) ASSERT_TRUE(std::isnan(b.mean_threshold[t]));
        else ASSERT_EQ(a.mean_threshold[t], b.mean_threshold[t]);
    }
    EXPECT_EQ(a.pfa.mean, b.pfa.mean);
    EXPECT_EQ(a.pd.stddev, b.pd.stddev);
    for (double f : a.detection_frequency) {
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
    }
}

TEST(MonteCarlo, DisjointSeedRangesAgree) {
    const auto sc = small_scenario();
    const auto a = monte_carlo(sc, 20, 0, quick_fit());
    const auto b = monte_carlo(sc, 20, 1000, quick_fit());
    const double se = std::sqrt((a.pfa.stddev * a.pfa.stddev + b.pfa.stddev * b.pfa.stddev) / 20.0);
    EXPECT_LT(std::abs(a.pfa.mean - b.pfa.mean), 3.0 * se + 1e-12);
}

TEST(MonteCarlo, FailuresAreCountedAndAllFailedThrows) {
    auto sc = small_scenario();
    sc.n = 40;  // too short for any ARIMA fit
    try {
        monte_carlo(sc, 3, 0, quick_fit());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AllRunsFailed);
    }
    EXPECT_THROW(monte_carlo(small_scenario(), 0, 0), Error);
}

TEST(Summarize, SampleStatistics) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto s = summarize(v);
    EXPECT_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_EQ(s.count, 4u);
    EXPECT_EQ(summarize(std::vector<double>{}).count, 0u);
}
