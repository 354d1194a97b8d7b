#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "agcfar/series.hpp"

namespace agcfar {

/// SplitMix64 finalizer; used to derive decorrelated substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than with
/// std::*_distribution (whose algorithms are implementation-defined), so
/// the same seed yields the same draws on every conforming platform:
///   uniform  = ((u64 >> 11) + 0.5) * 2^-53, strictly inside (0, 1)
///   normal   = Marsaglia polar method, both variates of a pair consumed
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child stream identified by `stream`. The parent is not
    /// advanced, so substreams do not depend on draw order.
    RandomSource substream(std::uint64_t stream) const {
        return RandomSource(mix_seed(seed_ ^ mix_seed(stream + 0x51ed270b27a3f1c5ULL)));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline TimeSeries standard_normal_draws(RandomSource& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = rng.normal();
    return TimeSeries(std::move(out));
}

} // namespace agcfar
