#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agcfar/arima.hpp"
#include "agcfar/error.hpp"
#include "agcfar/garch.hpp"
#include "agcfar/random.hpp"
#include "agcfar/series.hpp"

namespace agcfar {

enum class GatingKind { Bernoulli, TwoStateMarkov };

/// Presence process a_t for the anomaly component.
///
/// Bernoulli: IID with P(a_t = 1) = 1 - p0.
/// TwoStateMarkov: starts absent; each step an absent state turns present
/// with probability birth_rate and a present state dies with probability
/// death_rate.
///
/// `window`, when set, confines the process to [start, end): a_t = 0
/// outside it and the Markov chain starts absent at `start`.
struct GatingProcess {
    GatingKind kind = GatingKind::TwoStateMarkov;
    double p0 = 1.0;
    double birth_rate = 0.0;
    double death_rate = 0.0;
    std::optional<std::pair<std::size_t, std::size_t>> window;
};

inline void validate_gating(const GatingProcess& g) {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (g.kind == GatingKind::Bernoulli && !unit(g.p0)) throw Error(ErrorKind::InvalidConfig, "p0 must lie in [0,1]");
    if (g.kind == GatingKind::TwoStateMarkov && (!unit(g.birth_rate) || !unit(g.death_rate))) {
        throw Error(ErrorKind::InvalidConfig, "birth_rate and death_rate must lie in [0,1]");
    }
    if (g.window && g.window->first > g.window->second) throw Error(ErrorKind::InvalidConfig, "gating window start > end");
}

/// Long-run fraction of time the Markov chain spends present.
inline double stationary_occupancy(const GatingProcess& g) {
    if (g.kind == GatingKind::Bernoulli) return 1.0 - g.p0;
    return g.birth_rate / (g.birth_rate + g.death_rate);
}

inline std::vector<std::uint8_t> sample_gating(const GatingProcess& proc, std::size_t n, RandomSource& rng) {
    validate_gating(proc);
    std::vector<std::uint8_t> a(n, 0);
    std::size_t lo = 0, hi = n;
    if (proc.window) {
        lo = std::min(proc.window->first, n);
        hi = std::min(proc.window->second, n);
    }
    if (proc.kind == GatingKind::Bernoulli) {
        for (std::size_t t = lo; t < hi; ++t) a[t] = rng.uniform() < 1.0 - proc.p0 ? 1 : 0;
        return a;
    }
    std::uint8_t state = 0;
    for (std::size_t t = lo; t < hi; ++t) {
        a[t] = state;
        const double u = rng.uniform();
        state = state == 0 ? (u < proc.birth_rate ? 1 : 0) : (u < proc.death_rate ? 0 : 1);
    }
    return a;
}

struct SynthesizedSignal {
    TimeSeries s;
    std::vector<std::uint8_t> truth;
    TimeSeries x;
    TimeSeries z;
    TimeSeries nu;
};

/// Builds S_t = X_t + a_t Z_t. X is simulated from the ARIMA model (on the
/// differenced scale, then integrated d times from zero); Z and its
/// conditional variance come from the GARCH model. X and Z draw from
/// independent substreams of `rng`.
inline SynthesizedSignal synthesize(const ArimaModel& arima, const GarchModel& garch,
                                    const std::vector<std::uint8_t>& gating, const RandomSource& rng,
                                    std::size_t burn_in = 500) {
    validate_model(arima);
    validate_model(garch);
    const std::size_t n = gating.size();
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "synthesize needs a non-empty gating sequence");

    auto rng_x = rng.substream(1);
    auto rng_z = rng.substream(2);
    TimeSeries x = simulate_arma(arima, n, burn_in, rng_x);
    if (arima.d > 0) {
        const auto lifted = undifference(x, TimeSeries(std::vector<double>(static_cast<std::size_t>(arima.d), 0.0)), arima.d);
        x = TimeSeries(std::vector<double>(lifted.begin() + arima.d, lifted.end()));
    }
    auto zpath = simulate_garch(garch, n, burn_in, rng_z);

    std::vector<double> s(n);
    for (std::size_t t = 0; t < n; ++t) s[t] = x[t] + (gating[t] ? zpath.z[t] : 0.0);
    return {TimeSeries(std::move(s)), gating, std::move(x), std::move(zpath.z), std::move(zpath.nu)};
}

enum class AnomalyKind { AA, IA, LSA, TCA };

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::AA;
    std::size_t onset = 0;
    double omega = 0.0;
    std::optional<double> delta;  // TCA decay
};

/// Adds one classical outlier pattern to `base`:
///   AA   omega at the onset only
///   IA   omega times the impulse response of theta(B)/phi(B) from the onset
///   LSA  omega for every t >= onset
///   TCA  omega * delta^(t - onset) for t >= onset
inline TimeSeries inject_anomaly(const TimeSeries& base, const AnomalySpec& spec, const ArimaModel& arima = {}) {
    const std::size_t n = base.size();
    if (spec.onset >= n) throw Error(ErrorKind::InvalidOnset, "onset outside the series");
    if (spec.kind == AnomalyKind::TCA) {
        if (!spec.delta) throw Error(ErrorKind::MissingDecay, "TCA requires a decay delta");
        if (!(*spec.delta > 0.0 && *spec.delta < 1.0)) throw Error(ErrorKind::InvalidConfig, "TCA delta must lie in (0,1)");
    }
    std::vector<double> y = base.vector();
    switch (spec.kind) {
    case AnomalyKind::AA:
        y[spec.onset] += spec.omega;
        break;
    case AnomalyKind::LSA:
        for (std::size_t t = spec.onset; t < n; ++t) y[t] += spec.omega;
        break;
    case AnomalyKind::TCA: {
        double w = spec.omega;
        for (std::size_t t = spec.onset; t < n; ++t, w *= *spec.delta) y[t] += w;
        break;
    }
    case AnomalyKind::IA: {
        ArimaModel filter = arima;
        filter.mu = 0.0;
        std::vector<double> impulse(n - spec.onset, 0.0);
        impulse[0] = 1.0;
        const auto response = arma_from_innovations(filter, impulse);
        for (std::size_t t = spec.onset; t < n; ++t) y[t] += spec.omega * response[t - spec.onset];
        break;
    }
    }
    return TimeSeries(std::move(y), base.start_index());
}

} // namespace agcfar
