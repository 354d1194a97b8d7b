#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "agcfar/anomaly_sim.hpp"
#include "agcfar/arima.hpp"
#include "agcfar/cfar.hpp"
#include "agcfar/garch.hpp"

namespace agcfar {

struct FitOptions {
    int d = 1;
    int max_p = 2;
    int max_q = 2;
    int max_k = 1;
    int max_ell = 1;
    ArmaFitOptions arma{};
    GarchFitOptions garch{};
};

/// ARIMA conditional mean plus GARCH volatility fitted to one series.
/// `residuals` and `volatility` are on the differenced scale (length n - d).
struct HybridModel {
    ArimaModel arima;
    GarchModel garch;
    TimeSeries residuals;
    TimeSeries volatility;
    std::vector<ArimaAicCell> arima_table;
    std::vector<GarchAicCell> garch_table;
};

/// Re-applies fitted ARIMA/GARCH models to a series: differences by
/// arima.d, filters residuals, and runs the variance recursion.
inline HybridModel apply_hybrid(const TimeSeries& series, const ArimaModel& arima, const GarchModel& garch) {
    HybridModel h;
    h.arima = arima;
    h.garch = garch;
    const auto w = difference(series, arima.d);
    h.residuals = arma_residuals(w, arima);
    h.volatility = variance_path(h.residuals, garch);
    return h;
}

/// Differences the series, selects ARIMA orders by AIC, filters residuals
/// with the winner, selects GARCH orders by AIC on those residuals, and
/// keeps the resulting conditional variance track.
inline HybridModel fit_hybrid(const TimeSeries& series, const FitOptions& opt = {}) {
    auto arima = select_arima_order(series, opt.d, opt.max_p, opt.max_q, opt.arma);
    const auto w = difference(series, opt.d);
    auto residuals = arma_residuals(w, arima.model);
    auto garch = select_garch_order(residuals, opt.max_k, opt.max_ell, opt.garch);
    HybridModel h;
    h.arima = std::move(arima.model);
    h.garch = std::move(garch.model);
    h.volatility = variance_path(residuals, h.garch);
    h.residuals = std::move(residuals);
    h.arima_table = std::move(arima.table);
    h.garch_table = std::move(garch.table);
    return h;
}

enum class DetectionStatistic { Volatility, SquaredResidual };

struct DetectOptions {
    CfarConfig cfar{};
    DetectionStatistic statistic = DetectionStatistic::Volatility;
    std::size_t startup_mask = 0;  // leading differenced-scale cells forced to no alarm
};

/// Runs CFAR on the hybrid model's volatility (or squared residuals) and maps
/// the trace back to the original series indexing. The first d indices have
/// no differenced counterpart and are reported as undecidable with power 0.
inline DetectionTrace detect(const TimeSeries& series, const HybridModel& hybrid, const DetectOptions& opt = {}) {
    const auto d = static_cast<std::size_t>(hybrid.arima.d);
    if (hybrid.volatility.size() + d != series.size()) {
        throw Error(ErrorKind::LengthMismatch, "hybrid model was not fitted on this series");
    }
    TimeSeries power = hybrid.volatility;
    if (opt.statistic == DetectionStatistic::SquaredResidual) {
        std::vector<double> sq(hybrid.residuals.size());
        for (std::size_t t = 0; t < sq.size(); ++t) sq[t] = hybrid.residuals[t] * hybrid.residuals[t];
        power = TimeSeries(std::move(sq));
    }
    auto inner = cfar_detect(power, opt.cfar);
    for (std::size_t t = 0; t < std::min(opt.startup_mask, inner.size()); ++t) inner.decision[t] = 0;

    DetectionTrace out;
    out.start_index = series.start_index();
    const std::size_t n = series.size();
    out.power.assign(n, 0.0);
    out.threshold.assign(n, std::numeric_limits<double>::infinity());
    out.decision.assign(n, 0);
    out.decidable.assign(n, 0);
    for (std::size_t t = 0; t < inner.size(); ++t) {
        out.power[t + d] = inner.power[t];
        out.threshold[t + d] = inner.threshold[t];
        out.decision[t + d] = inner.decision[t];
        out.decidable[t + d] = inner.decidable[t];
    }
    out.intervals = extract_intervals(out.decision);
    return out;
}

struct EvalReport {
    double empirical_pfa = 0.0;  // alarms over truth-0 indices (0 when there are none)
    double empirical_pd = 0.0;   // alarms over truth-1 indices (0 when there are none)
    double episode_pd = 0.0;     // episodes with at least one alarm inside (0 when there are none)
    std::size_t negatives = 0;
    std::size_t positives = 0;
    std::vector<Interval> episodes;
    std::vector<std::optional<std::size_t>> delays;  // per episode; nullopt when missed
    std::optional<double> median_delay;
    std::vector<Interval> intervals;
};

inline std::optional<double> median_of(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline EvalReport evaluate(const DetectionTrace& trace, std::span<const std::uint8_t> truth) {
    if (trace.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "trace and truth lengths differ");
    EvalReport r;
    std::size_t fa = 0, hits = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (truth[t]) {
            ++r.positives;
            hits += trace.decision[t] ? 1 : 0;
        } else {
            ++r.negatives;
            fa += trace.decision[t] ? 1 : 0;
        }
    }
    if (r.negatives > 0) r.empirical_pfa = static_cast<double>(fa) / static_cast<double>(r.negatives);
    if (r.positives > 0) r.empirical_pd = static_cast<double>(hits) / static_cast<double>(r.positives);

    r.episodes = extract_intervals(truth);
    std::vector<double> found;
    for (const auto& ep : r.episodes) {
        std::optional<std::size_t> delay;
        for (std::size_t t = ep.start; t < ep.end; ++t) {
            if (trace.decision[t]) {
                delay = t - ep.start;
                break;
            }
        }
        if (delay) found.push_back(static_cast<double>(*delay));
        r.delays.push_back(delay);
    }
    if (!r.episodes.empty()) r.episode_pd = static_cast<double>(found.size()) / static_cast<double>(r.episodes.size());
    r.median_delay = median_of(std::move(found));
    r.intervals = trace.intervals;
    return r;
}

/// Synthetic experiment description: S = X + a Z plus optional injected
/// outliers. Ground truth is the gating sequence a_t.
struct Scenario {
    std::size_t n = 3000;
    std::size_t burn_in = 500;
    ArimaModel arima;
    GarchModel garch;
    GatingProcess gating;
    std::vector<AnomalySpec> anomalies;
    std::uint64_t seed = 1;
};

/// One contiguous GARCH(1,1) episode in the middle third of an
/// ARIMA(1,1,0) signal of 3000 samples.
inline Scenario default_scenario() {
    Scenario s;
    s.n = 3000;
    s.arima = ArimaModel{.p = 1, .d = 1, .q = 0, .mu = 0.0, .phi = {0.5}, .theta = {}, .sigma2 = 1.0};
    s.garch = GarchModel{.k = 1, .ell = 1, .varsigma0 = 4.0, .varsigma = {0.15}, .eta = {0.8}};
    s.gating = GatingProcess{.kind = GatingKind::TwoStateMarkov, .p0 = 1.0, .birth_rate = 0.05, .death_rate = 0.0,
                             .window = std::pair<std::size_t, std::size_t>{1000, 2000}};
    return s;
}

inline SynthesizedSignal simulate_scenario(const Scenario& sc, std::uint64_t seed) {
    const RandomSource rng(seed);
    auto gate_rng = rng.substream(0);
    const auto gating = sample_gating(sc.gating, sc.n, gate_rng);
    auto sig = synthesize(sc.arima, sc.garch, gating, rng, sc.burn_in);
    for (const auto& a : sc.anomalies) sig.s = inject_anomaly(sig.s, a, sc.arima);
    return sig;
}

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for fewer than two values
    std::size_t count = 0;
};

inline Summary summarize(std::span<const double> v) {
    Summary s;
    s.count = v.size();
    if (v.empty()) return s;
    s.mean = mean_of(v);
    if (v.size() > 1) {
        double acc = 0.0;
        for (double x : v) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
    return s;
}

struct RunOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    DetectionTrace trace;
    EvalReport report;
    std::vector<std::uint8_t> truth;
};

/// Full per-seed pass: simulate, fit, detect, evaluate.
inline RunOutcome run_once(const Scenario& sc, std::uint64_t seed, const FitOptions& fit, const DetectOptions& det) {
    RunOutcome out;
    out.seed = seed;
    try {
        auto sig = simulate_scenario(sc, seed);
        const auto hybrid = fit_hybrid(sig.s, fit);
        out.trace = detect(sig.s, hybrid, det);
        out.report = evaluate(out.trace, sig.truth);
        out.truth = std::move(sig.truth);
        out.ok = true;
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

struct MonteCarloResult {
    std::size_t runs = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::uint64_t base_seed = 0;
    std::vector<std::pair<std::uint64_t, std::string>> failures;
    std::vector<double> mean_threshold;       // NaN where no successful run could decide
    std::vector<double> detection_frequency;  // fraction of successful runs alarming per index
    Summary pfa;
    Summary pd;
    Summary episode_pd;
    Summary delay;  // over every detected episode of every run
    std::optional<double> median_delay;
    std::vector<EvalReport> reports;
};

/// Runs `runs` independent replications with seeds base_seed + r.
/// Failed runs are excluded from every average and listed in `failures`.
/// Aggregation happens in run order, so the result does not depend on how
/// runs were scheduled across threads.
inline MonteCarloResult monte_carlo(const Scenario& sc, std::size_t runs, std::uint64_t base_seed,
                                    const FitOptions& fit = {}, const DetectOptions& det = {},
                                    unsigned threads = 0) {
    if (runs == 0) throw Error(ErrorKind::InvalidConfig, "monte_carlo needs runs >= 1");
    validate_config(det.cfar);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs));

    std::vector<RunOutcome> outcomes(runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < runs; r = next++) outcomes[r] = run_once(sc, base_seed + r, fit, det);
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    MonteCarloResult res;
    res.runs = runs;
    res.base_seed = base_seed;
    const std::size_t n = sc.n;
    std::vector<double> thr_sum(n, 0.0), dec_sum(n, 0.0);
    std::vector<std::size_t> thr_count(n, 0);
    std::vector<double> pfas, pds, epds, delays;
    for (auto& o : outcomes) {
        if (!o.ok) {
            ++res.failed;
            res.failures.emplace_back(o.seed, o.error);
            continue;
        }
        ++res.succeeded;
        for (std::size_t t = 0; t < n; ++t) {
            if (o.trace.decidable[t]) {
                thr_sum[t] += o.trace.threshold[t];
                ++thr_count[t];
            }
            dec_sum[t] += o.trace.decision[t];
        }
        pfas.push_back(o.report.empirical_pfa);
        pds.push_back(o.report.empirical_pd);
        if (!o.report.episodes.empty()) epds.push_back(o.report.episode_pd);
        for (const auto& dl : o.report.delays) {
            if (dl) delays.push_back(static_cast<double>(*dl));
        }
        res.reports.push_back(std::move(o.report));
    }
    if (res.succeeded == 0) throw Error(ErrorKind::AllRunsFailed, "every Monte-Carlo run failed");

    res.mean_threshold.resize(n);
    res.detection_frequency.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        res.mean_threshold[t] = thr_count[t] > 0 ? thr_sum[t] / static_cast<double>(thr_count[t])
                                                 : std::numeric_limits<double>::quiet_NaN();
        res.detection_frequency[t] = dec_sum[t] / static_cast<double>(res.succeeded);
    }
    res.pfa = summarize(pfas);
    res.pd = summarize(pds);
    res.episode_pd = summarize(epds);
    res.delay = summarize(delays);
    res.median_delay = median_of(delays);
    return res;
}

} // namespace agcfar
