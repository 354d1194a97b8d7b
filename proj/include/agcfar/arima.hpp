#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "agcfar/error.hpp"
#include "agcfar/nelder_mead.hpp"
#include "agcfar/random.hpp"
#include "agcfar/series.hpp"

namespace agcfar {

/// ARIMA(p,d,q) conditional-mean model
///
///   (1 - sum phi_i B^i)(w_t - mu) = (1 + sum theta_j B^j) e_t,  e_t ~ N(0, sigma2)
///
/// where w_t is the series differenced d times. `mu` is the mean level of
/// w_t (not the regression intercept).
struct ArimaModel {
    int p = 0;
    int d = 0;
    int q = 0;
    double mu = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma2 = 1.0;

    friend bool operator==(const ArimaModel&, const ArimaModel&) = default;
};

namespace detail {

/// Maps partial autocorrelations (each in (-1,1)) to the coefficients of a
/// stationary polynomial 1 - sum a_i B^i via the Durbin-Levinson recursion.
inline std::vector<double> pacf_to_coefficients(std::span<const double> r) {
    std::vector<double> a(r.size()), prev;
    for (std::size_t k = 0; k < r.size(); ++k) {
        prev.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k));
        a[k] = r[k];
        for (std::size_t j = 0; j < k; ++j) a[j] = prev[j] - r[k] * prev[k - 1 - j];
    }
    return a;
}

/// Inverse roots of 1 - sum c_i B^i, i.e. the roots of
/// w^m - c_1 w^(m-1) - ... - c_m, by Durand-Kerner iteration.
inline std::vector<std::complex<double>> inverse_roots(std::span<const double> c) {
    using cd = std::complex<double>;
    const std::size_t m = c.size();
    std::vector<cd> w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = std::pow(cd(0.4, 0.9), static_cast<double>(i));
    auto poly = [&](cd x) {
        cd v = 1.0;
        for (std::size_t i = 0; i < m; ++i) v = v * x - c[i];
        return v;
    };
    for (int it = 0; it < 500; ++it) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            cd den = 1.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (j != i) den *= w[i] - w[j];
            }
            if (std::abs(den) == 0.0) den = 1e-12;
            const cd step = poly(w[i]) / den;
            w[i] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14) break;
    }
    return w;
}

/// Step-down recursion: inverse of pacf_to_coefficients. Returns nullopt
/// when some reflection coefficient has modulus >= 1, i.e. the polynomial
/// has a root on or inside the unit circle.
inline std::optional<std::vector<double>> coefficients_to_pacf(std::span<const double> coeffs) {
    std::vector<double> a(coeffs.begin(), coeffs.end());
    std::vector<double> r(a.size());
    for (std::size_t k = a.size(); k-- > 0;) {
        const double rk = a[k];
        if (!(std::abs(rk) < 1.0)) return std::nullopt;
        r[k] = rk;
        const double den = 1.0 - rk * rk;
        std::vector<double> next(k);
        for (std::size_t j = 0; j < k; ++j) next[j] = (a[j] + rk * a[k - 1 - j]) / den;
        std::copy(next.begin(), next.end(), a.begin());
    }
    return r;
}

inline std::vector<double> autocovariances(std::span<const double> x, std::size_t max_lag) {
    const double m = mean_of(x);
    const std::size_t n = x.size();
    std::vector<double> g(max_lag + 1, 0.0);
    for (std::size_t h = 0; h <= max_lag && h < n; ++h) {
        double s = 0.0;
        for (std::size_t t = h; t < n; ++t) s += (x[t] - m) * (x[t - h] - m);
        g[h] = s / static_cast<double>(n);
    }
    return g;
}

/// Yule-Walker partial autocorrelations up to `order` (Levinson recursion).
inline std::vector<double> yule_walker_pacf(std::span<const double> x, std::size_t order) {
    const auto g = autocovariances(x, order);
    std::vector<double> r(order, 0.0);
    if (order == 0 || g[0] <= 0.0) return r;
    std::vector<double> a, prev;
    double v = g[0];
    for (std::size_t k = 0; k < order; ++k) {
        double acc = g[k + 1];
        for (std::size_t j = 0; j < k; ++j) acc -= a[j] * g[k - j];
        const double rk = v > 0.0 ? acc / v : 0.0;
        r[k] = rk;
        prev = a;
        a.resize(k + 1);
        a[k] = rk;
        for (std::size_t j = 0; j < k; ++j) a[j] = prev[j] - rk * prev[k - 1 - j];
        v *= (1.0 - rk * rk);
    }
    return r;
}

} // namespace detail

inline bool is_stationary_ar(std::span<const double> phi) {
    return detail::coefficients_to_pacf(phi).has_value();
}

/// Checks every ArimaModel invariant; throws InvalidModel on violation.
inline void validate_model(const ArimaModel& m) {
    if (m.p < 0 || m.d < 0 || m.q < 0) throw Error(ErrorKind::InvalidModel, "ARIMA orders must be non-negative");
    if (m.phi.size() != static_cast<std::size_t>(m.p) || m.theta.size() != static_cast<std::size_t>(m.q)) {
        throw Error(ErrorKind::InvalidModel, "phi/theta lengths must equal p/q");
    }
    if (!(m.sigma2 > 0.0) || !std::isfinite(m.sigma2)) throw Error(ErrorKind::InvalidModel, "sigma2 must be positive");
    if (!std::isfinite(m.mu)) throw Error(ErrorKind::InvalidModel, "mu must be finite");
    for (double c : m.phi) if (!std::isfinite(c)) throw Error(ErrorKind::InvalidModel, "phi must be finite");
    for (double c : m.theta) if (!std::isfinite(c)) throw Error(ErrorKind::InvalidModel, "theta must be finite");
    if (!is_stationary_ar(m.phi)) throw Error(ErrorKind::InvalidModel, "AR polynomial is not stationary");
}

inline TimeSeries difference(const TimeSeries& series, int d) {
    if (d < 0) throw Error(ErrorKind::InvalidConfig, "differencing order must be non-negative");
    if (series.size() <= static_cast<std::size_t>(d)) {
        throw Error(ErrorKind::SeriesTooShort, "series length must exceed the differencing order");
    }
    std::vector<double> x = series.vector();
    for (int k = 0; k < d; ++k) {
        for (std::size_t t = 0; t + 1 < x.size(); ++t) x[t] = x[t + 1] - x[t];
        x.pop_back();
    }
    return TimeSeries(std::move(x), series.start_index() + d);
}

/// Inverse of difference(). `initial_values[i]` is the first element of the
/// original series differenced i times (for d = 1 it is simply x_0).
inline TimeSeries undifference(const TimeSeries& diffed, const TimeSeries& initial_values, int d) {
    if (d < 0 || initial_values.size() != static_cast<std::size_t>(d)) {
        throw Error(ErrorKind::DimensionMismatch, "initial_values must have exactly d elements");
    }
    std::vector<double> x = diffed.vector();
    for (int level = d - 1; level >= 0; --level) {
        std::vector<double> up(x.size() + 1);
        up[0] = initial_values[static_cast<std::size_t>(level)];
        for (std::size_t t = 0; t < x.size(); ++t) up[t + 1] = up[t] + x[t];
        x = std::move(up);
    }
    return TimeSeries(std::move(x), diffed.start_index() - d);
}

namespace detail {

/// z_t = (s_t - mu) - sum phi_i (s_{t-i} - mu) - sum theta_j z_{t-j},
/// with pre-sample deviations and residuals equal to zero.
inline void arma_filter(std::span<const double> s, double mu, std::span<const double> phi,
                        std::span<const double> theta, std::vector<double>& z) {
    const std::size_t n = s.size();
    z.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double v = s[t] - mu;
        for (std::size_t i = 0; i < phi.size() && i < t; ++i) v -= phi[i] * (s[t - 1 - i] - mu);
        for (std::size_t j = 0; j < theta.size() && j < t; ++j) v -= theta[j] * z[t - 1 - j];
        z[t] = v;
    }
}

} // namespace detail

inline TimeSeries arma_residuals(const TimeSeries& series, const ArimaModel& model) {
    validate_model(model);
    std::vector<double> z;
    detail::arma_filter(series.values(), model.mu, model.phi, model.theta, z);
    return TimeSeries(std::move(z), series.start_index());
}

inline double gaussian_css_loglik(double sum_squares, std::size_t n, double sigma2) {
    const double nn = static_cast<double>(n);
    return -0.5 * nn * std::log(2.0 * std::numbers::pi * sigma2) - sum_squares / (2.0 * sigma2);
}

/// Conditional Gaussian log-likelihood of the series under `model`.
inline double arma_loglik(const TimeSeries& series, const ArimaModel& model) {
    if (series.empty()) throw Error(ErrorKind::SeriesTooShort, "log-likelihood needs at least one sample");
    const auto z = arma_residuals(series, model);
    double ss = 0.0;
    for (double v : z) ss += v * v;
    return gaussian_css_loglik(ss, z.size(), model.sigma2);
}

/// Runs the ARMA recursion forward on a supplied innovation sequence, with
/// zero pre-sample deviations and innovations.
inline TimeSeries arma_from_innovations(const ArimaModel& model, std::span<const double> innovations) {
    validate_model(model);
    const std::size_t n = innovations.size();
    std::vector<double> dev(n);
    for (std::size_t t = 0; t < n; ++t) {
        double v = innovations[t];
        for (std::size_t i = 0; i < model.phi.size() && i < t; ++i) v += model.phi[i] * dev[t - 1 - i];
        for (std::size_t j = 0; j < model.theta.size() && j < t; ++j) v += model.theta[j] * innovations[t - 1 - j];
        dev[t] = v;
    }
    for (auto& v : dev) v += model.mu;
    return TimeSeries(std::move(dev));
}

/// Simulates the stationary (differenced) scale of the model.
inline TimeSeries simulate_arma(const ArimaModel& model, std::size_t n, std::size_t burn_in, RandomSource& rng) {
    validate_model(model);
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "simulate_arma needs n >= 1");
    const double sd = std::sqrt(model.sigma2);
    std::vector<double> e(n + burn_in);
    for (auto& v : e) v = sd * rng.normal();
    const auto full = arma_from_innovations(model, e);
    return TimeSeries(std::vector<double>(full.begin() + static_cast<std::ptrdiff_t>(burn_in), full.end()));
}

struct ArmaFitOptions {
    optim::NelderMeadOptions optimizer{};
};

/// Conditional sum-of-squares maximum likelihood fit of an ARMA(p,q) on a
/// series that is already on the stationary scale. Coefficients are
/// optimized through the partial-autocorrelation map r = tanh(u), so the
/// result is stationary and invertible by construction; sigma2 is profiled.
inline ArimaModel fit_arma(const TimeSeries& series, int p, int q, const ArmaFitOptions& options = {}) {
    if (p < 0 || q < 0) throw Error(ErrorKind::InvalidConfig, "orders must be non-negative");
    const std::size_t n = series.size();
    if (n < static_cast<std::size_t>(10 * (p + q + 1))) {
        throw Error(ErrorKind::SeriesTooShort, "need at least 10*(p+q+1) samples for ARMA(" + std::to_string(p) + "," +
                                                   std::to_string(q) + ")");
    }
    const auto x = series.values();
    const double mean = mean_of(x);
    const double var = variance_of(x);
    if (!(var > 0.0)) throw Error(ErrorKind::DegenerateInput, "series has zero variance");

    ArimaModel model;
    model.p = p;
    model.q = q;

    if (p == 0 && q == 0) {
        model.mu = mean;
        model.sigma2 = var;
        return model;
    }

    // |partial autocorrelation| <= tanh(7) = 1 - 1.7e-6 keeps the roots
    // strictly outside the unit circle in double precision.
    constexpr double kMaxAtanh = 7.0;
    const double scale = std::sqrt(var);
    const auto up = static_cast<std::size_t>(p);
    const auto uq = static_cast<std::size_t>(q);

    auto unpack = [&](const std::vector<double>& u, double& mu, std::vector<double>& phi, std::vector<double>& theta) {
        mu = mean + scale * u[0];
        std::vector<double> r(up), s(uq);
        for (std::size_t i = 0; i < up; ++i) r[i] = std::tanh(std::clamp(u[1 + i], -kMaxAtanh, kMaxAtanh));
        for (std::size_t j = 0; j < uq; ++j) s[j] = std::tanh(std::clamp(u[1 + up + j], -kMaxAtanh, kMaxAtanh));
        phi = detail::pacf_to_coefficients(r);
        theta = detail::pacf_to_coefficients(s);
        for (auto& t : theta) t = -t;
    };

    std::vector<double> z, phi, theta;
    auto objective = [&](const std::vector<double>& u) {
        double mu;
        unpack(u, mu, phi, theta);
        detail::arma_filter(x, mu, phi, theta, z);
        double ss = 0.0;
        for (double v : z) ss += v * v;
        if (!(ss > 0.0)) return std::numeric_limits<double>::infinity();
        return 0.5 * static_cast<double>(n) * std::log(ss / static_cast<double>(n));
    };

    // Starting points: zeros, Yule-Walker AR estimate, and 0.1 partial
    // autocorrelations throughout.
    std::vector<std::vector<double>> starts;
    starts.emplace_back(1 + up + uq, 0.0);
    {
        std::vector<double> s(1 + up + uq, 0.0);
        const auto yw = detail::yule_walker_pacf(x, up);
        for (std::size_t i = 0; i < up; ++i) s[1 + i] = std::atanh(std::clamp(yw[i], -0.95, 0.95));
        starts.push_back(std::move(s));
    }
    {
        std::vector<double> s(1 + up + uq, std::atanh(0.1));
        s[0] = 0.0;
        starts.push_back(std::move(s));
    }

    optim::NelderMeadResult best;
    for (const auto& s : starts) {
        auto r = optim::nelder_mead(objective, s, options.optimizer);
        if (r.fx < best.fx) best = std::move(r);
    }
    if (!std::isfinite(best.fx)) throw Error(ErrorKind::OptimizerFailed, "no finite CSS objective reached");

    unpack(best.x, model.mu, model.phi, model.theta);
    detail::arma_filter(x, model.mu, model.phi, model.theta, z);
    double ss = 0.0;
    for (double v : z) ss += v * v;
    model.sigma2 = ss / static_cast<double>(n);
    if (!(model.sigma2 > 0.0)) throw Error(ErrorKind::DegenerateInput, "zero residual variance at optimum");
    if (!is_stationary_ar(model.phi)) throw Error(ErrorKind::OptimizerFailed, "optimum on the stationarity boundary");
    return model;
}

/// Distance below which an AR and an MA inverse root count as a common
/// factor; such a fit is over-parameterized and not identified.
inline constexpr double kCommonFactorTolerance = 0.1;

inline bool has_common_factor(const ArimaModel& m) {
    if (m.phi.empty() || m.theta.empty()) return false;
    std::vector<double> ma(m.theta.size());
    for (std::size_t j = 0; j < ma.size(); ++j) ma[j] = -m.theta[j];
    for (const auto& a : detail::inverse_roots(m.phi)) {
        for (const auto& b : detail::inverse_roots(ma)) {
            if (std::abs(a - b) < kCommonFactorTolerance) return true;
        }
    }
    return false;
}

inline double arima_aic(double loglik, int p, int q) { return -2.0 * loglik + 2.0 * (p + q + 2); }

struct ArimaAicCell {
    int p = 0;
    int q = 0;
    bool ok = false;
    double loglik = 0.0;
    double aic = 0.0;
    std::string error;
    ArimaModel model;
};

struct ArimaSelection {
    ArimaModel model;
    std::vector<ArimaAicCell> table;
};

/// Fits every (p,q) in [0..max_p]x[0..max_q] on the d-differenced series and
/// keeps the minimum-AIC model. Ties go to the smaller p+q, then smaller p.
/// Cells whose fit fails or has a near-common AR/MA factor are excluded;
/// degenerate input aborts the search.
inline ArimaSelection select_arima_order(const TimeSeries& series, int d, int max_p, int max_q,
                                         const ArmaFitOptions& options = {}) {
    if (max_p < 0 || max_q < 0) throw Error(ErrorKind::InvalidConfig, "max orders must be non-negative");
    const auto w = difference(series, d);
    ArimaSelection sel;
    const ArimaAicCell* best = nullptr;
    for (int p = 0; p <= max_p; ++p) {
        for (int q = 0; q <= max_q; ++q) {
            ArimaAicCell cell;
            cell.p = p;
            cell.q = q;
            try {
                cell.model = fit_arma(w, p, q, options);
                cell.model.d = d;
                if (has_common_factor(cell.model)) {
                    throw Error(ErrorKind::OptimizerFailed, "AR and MA polynomials share a near-common factor");
                }
                cell.loglik = arma_loglik(w, cell.model);
                cell.aic = arima_aic(cell.loglik, p, q);
                cell.ok = true;
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::DegenerateInput) throw;
                cell.error = e.what();
            }
            sel.table.push_back(std::move(cell));
        }
    }
    for (const auto& cell : sel.table) {
        if (!cell.ok) continue;
        if (best == nullptr) {
            best = &cell;
            continue;
        }
        const auto key = [](const ArimaAicCell& c) { return std::tuple(c.aic, c.p + c.q, c.p); };
        if (key(cell) < key(*best)) best = &cell;
    }
    if (best == nullptr) throw Error(ErrorKind::AllCellsFailed, "every ARIMA candidate failed to fit");
    sel.model = best->model;
    return sel;
}

} // namespace agcfar
