#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "agcfar/error.hpp"
#include "agcfar/series.hpp"

namespace agcfar {

enum class CfarKind { CA, OS };

inline const char* to_string(CfarKind k) noexcept { return k == CfarKind::CA ? "CA" : "OS"; }

/// Sliding-window CFAR settings. N = 2 * half_window reference cells are
/// split across both sides of the cell under test, each side separated from
/// it by `guard` cells. `os_rank` = 0 selects the default ceil(0.75 * N).
struct CfarConfig {
    CfarKind kind = CfarKind::CA;
    int half_window = 16;
    int guard = 2;
    double pfa = 1e-2;
    int os_rank = 0;

    int cells() const noexcept { return 2 * half_window; }
    int rank() const noexcept {
        return os_rank > 0 ? os_rank : static_cast<int>(std::ceil(0.75 * static_cast<double>(cells())));
    }
};

inline void validate_config(const CfarConfig& c) {
    if (c.half_window < 1) throw Error(ErrorKind::InvalidConfig, "half_window must be >= 1");
    if (c.guard < 0) throw Error(ErrorKind::InvalidConfig, "guard must be >= 0");
    if (!(c.pfa > 0.0 && c.pfa < 1.0)) throw Error(ErrorKind::InvalidConfig, "pfa must lie in (0,1)");
    if (c.os_rank < 0) throw Error(ErrorKind::InvalidConfig, "os_rank must be >= 0");
    if (c.kind == CfarKind::OS && (c.rank() < 1 || c.rank() > c.cells())) {
        throw Error(ErrorKind::InvalidConfig, "os_rank must lie in [1, 2*half_window]");
    }
}

/// CA-CFAR factor for exponential background: Pfa = (1 + alpha/N)^-N, so
/// alpha = N (pfa^(-1/N) - 1). The threshold is alpha times the mean of the
/// N reference cells.
inline double ca_factor(int n_cells, double pfa) {
    if (n_cells < 1) throw Error(ErrorKind::InvalidConfig, "n_cells must be >= 1");
    if (!(pfa > 0.0 && pfa < 1.0)) throw Error(ErrorKind::InvalidConfig, "pfa must lie in (0,1)");
    const double n = n_cells;
    return n * std::expm1(-std::log(pfa) / n);
}

/// OS-CFAR false-alarm probability for exponential background when the
/// threshold is alpha times the rank-th smallest of N reference cells:
///   Pfa(alpha) = prod_{i=0}^{rank-1} (N - i) / (N - i + alpha).
inline double os_false_alarm(int n_cells, int rank, double alpha) {
    double p = 1.0;
    for (int i = 0; i < rank; ++i) p *= static_cast<double>(n_cells - i) / (static_cast<double>(n_cells - i) + alpha);
    return p;
}

/// Solves os_false_alarm(N, rank, alpha) = pfa by bisection on [1e-9, 1e6];
/// the upper end is widened by decades when pfa lies below Pfa(1e6).
inline double os_factor(int n_cells, int rank, double pfa) {
    if (n_cells < 1) throw Error(ErrorKind::InvalidConfig, "n_cells must be >= 1");
    if (rank < 1 || rank > n_cells) throw Error(ErrorKind::InvalidConfig, "rank must lie in [1, n_cells]");
    if (!(pfa > 0.0 && pfa < 1.0)) throw Error(ErrorKind::InvalidConfig, "pfa must lie in (0,1)");
    double lo = 1e-9;
    double hi = 1e6;
    while (os_false_alarm(n_cells, rank, hi) > pfa && hi < 1e300) hi *= 10.0;
    if (os_false_alarm(n_cells, rank, lo) < pfa) return lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (os_false_alarm(n_cells, rank, mid) > pfa) lo = mid;
        else hi = mid;
    }
    const double alpha = 0.5 * (lo + hi);
    if (std::abs(os_false_alarm(n_cells, rank, alpha) - pfa) >= 1e-10) {
        throw Error(ErrorKind::OptimizerFailed, "OS-CFAR bisection did not reach tolerance");
    }
    return alpha;
}

inline double cfar_factor(const CfarConfig& c) {
    return c.kind == CfarKind::CA ? ca_factor(c.cells(), c.pfa) : os_factor(c.cells(), c.rank(), c.pfa);
}

/// Half-open index range [start, end).
struct Interval {
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Maximal runs of nonzero entries as sorted half-open intervals.
inline std::vector<Interval> extract_intervals(std::span<const std::uint8_t> decision) {
    std::vector<Interval> out;
    std::size_t t = 0;
    while (t < decision.size()) {
        if (decision[t] == 0) {
            ++t;
            continue;
        }
        const std::size_t s = t;
        while (t < decision.size() && decision[t] != 0) ++t;
        out.push_back({s, t});
    }
    return out;
}

/// Per-index CFAR output. Cells whose reference window cannot be placed are
/// flagged in `decidable` with threshold +inf and decision 0.
struct DetectionTrace {
    std::int64_t start_index = 0;
    std::vector<double> power;
    std::vector<double> threshold;
    std::vector<std::uint8_t> decision;
    std::vector<std::uint8_t> decidable;
    std::vector<Interval> intervals;

    std::size_t size() const noexcept { return decision.size(); }
};

/// Sliding CFAR over a nonnegative power series.
///
/// Reference cells for index t are {t-G-T .. t-G-1} and {t+G+1 .. t+G+T}.
/// When the two-sided window runs off either end, N = 2T cells are taken
/// from the lagging side only ({t-G-N .. t-G-1}) or, failing that, from the
/// leading side only; if neither fits the cell is undecidable.
///
/// CA: threshold = alpha * mean(reference). OS: threshold = alpha * the
/// rank-th smallest reference value. decision = power > threshold.
inline DetectionTrace cfar_detect(const TimeSeries& power, const CfarConfig& config) {
    validate_config(config);
    const std::size_t n = power.size();
    const auto T = static_cast<std::size_t>(config.half_window);
    const auto G = static_cast<std::size_t>(config.guard);
    const std::size_t N = 2 * T;
    if (n < 2 * (T + G) + 1) {
        throw Error(ErrorKind::SeriesTooShort, "CFAR needs at least 2*(T+G)+1 samples");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (power[i] < 0.0) throw Error(ErrorKind::NegativePower, "power[" + std::to_string(i) + "] < 0", i);
    }

    const double alpha = cfar_factor(config);
    const auto rank = static_cast<std::size_t>(config.rank());
    const auto x = power.values();

    DetectionTrace trace;
    trace.start_index = power.start_index();
    trace.power = power.vector();
    trace.threshold.assign(n, std::numeric_limits<double>::infinity());
    trace.decision.assign(n, 0);
    trace.decidable.assign(n, 0);

    std::vector<double> ref;
    ref.reserve(N);
    for (std::size_t t = 0; t < n; ++t) {
        ref.clear();
        if (t >= G + T && t + G + T < n) {
            for (std::size_t i = t - G - T; i < t - G; ++i) ref.push_back(x[i]);
            for (std::size_t i = t + G + 1; i <= t + G + T; ++i) ref.push_back(x[i]);
        } else if (t >= G + N) {
            for (std::size_t i = t - G - N; i < t - G; ++i) ref.push_back(x[i]);
        } else if (t + G + N < n) {
            for (std::size_t i = t + G + 1; i <= t + G + N; ++i) ref.push_back(x[i]);
        } else {
            continue;
        }

        double level;
        if (config.kind == CfarKind::CA) {
            double s = 0.0;
            for (double v : ref) s += v;
            level = s / static_cast<double>(N);
        } else {
            std::nth_element(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(rank - 1), ref.end());
            level = ref[rank - 1];
        }
        trace.threshold[t] = alpha * level;
        trace.decidable[t] = 1;
        trace.decision[t] = x[t] > trace.threshold[t] ? 1 : 0;
    }
    trace.intervals = extract_intervals(trace.decision);
    return trace;
}

} // namespace agcfar
