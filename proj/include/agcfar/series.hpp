#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agcfar/error.hpp"

namespace agcfar {

/// Uniformly sampled real-valued sequence. Every element is finite; the
/// constructor enforces it, so a TimeSeries in hand is always valid.
class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(std::vector<double> values, std::int64_t start_index = 0)
        : values_(std::move(values)), start_index_(start_index) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw Error(ErrorKind::NonFiniteValue, "element " + std::to_string(i) + " is not finite", i);
            }
        }
    }

    TimeSeries(std::initializer_list<double> values) : TimeSeries(std::vector<double>(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }
    std::int64_t start_index() const noexcept { return start_index_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::vector<double> values_;
    std::int64_t start_index_ = 0;
};

/// Returns the series unchanged when every element is finite.
inline TimeSeries validate_series(std::span<const double> values, std::int64_t start_index = 0) {
    return TimeSeries(std::vector<double>(values.begin(), values.end()), start_index);
}

inline const TimeSeries& validate_series(const TimeSeries& series) { return series; }

// Small statistics helpers shared by the modules.

inline double mean_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Biased (1/n) sample variance.
inline double variance_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

inline double mean_square_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(x.size());
}

} // namespace agcfar
