#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "agcfar/error.hpp"
#include "agcfar/nelder_mead.hpp"
#include "agcfar/random.hpp"
#include "agcfar/series.hpp"

namespace agcfar {

/// GARCH(k, ell) conditional variance
///
///   nu_t = varsigma0 + sum_{i<=k} varsigma_i nu_{t-i} + sum_{i<=ell} eta_i z_{t-i}^2
///   z_t  = sqrt(nu_t) eps_t,  eps_t ~ N(0, 1)
struct GarchModel {
    int k = 0;
    int ell = 0;
    double varsigma0 = 1.0;
    std::vector<double> varsigma;
    std::vector<double> eta;

    friend bool operator==(const GarchModel&, const GarchModel&) = default;
};

inline double persistence(const GarchModel& m) {
    return std::accumulate(m.varsigma.begin(), m.varsigma.end(), 0.0) +
           std::accumulate(m.eta.begin(), m.eta.end(), 0.0);
}

inline void validate_model(const GarchModel& m) {
    if (m.k < 0 || m.ell < 0) throw Error(ErrorKind::InvalidModel, "GARCH orders must be non-negative");
    if (m.varsigma.size() != static_cast<std::size_t>(m.k) || m.eta.size() != static_cast<std::size_t>(m.ell)) {
        throw Error(ErrorKind::InvalidModel, "varsigma/eta lengths must equal k/ell");
    }
    if (m.k > 0 && m.ell == 0) throw Error(ErrorKind::InvalidModel, "k > 0 requires ell >= 1");
    if (!(m.varsigma0 > 0.0) || !std::isfinite(m.varsigma0)) throw Error(ErrorKind::InvalidModel, "varsigma0 must be positive");
    for (double c : m.varsigma) if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidModel, "varsigma must be >= 0");
    for (double c : m.eta) if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidModel, "eta must be >= 0");
    if (!(persistence(m) < 1.0)) throw Error(ErrorKind::InvalidModel, "sum of varsigma and eta must be < 1");
}

inline double unconditional_variance(const GarchModel& m) { return m.varsigma0 / (1.0 - persistence(m)); }

namespace detail {

/// Variance recursion with pre-sample nu and z^2 equal to `presample`.
inline void garch_recursion(std::span<const double> z, double varsigma0, std::span<const double> varsigma,
                            std::span<const double> eta, double presample, std::vector<double>& nu) {
    const std::size_t n = z.size();
    nu.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double v = varsigma0;
        for (std::size_t i = 0; i < varsigma.size(); ++i) v += varsigma[i] * (t > i ? nu[t - 1 - i] : presample);
        for (std::size_t i = 0; i < eta.size(); ++i) {
            v += eta[i] * (t > i ? z[t - 1 - i] * z[t - 1 - i] : presample);
        }
        nu[t] = v;
    }
}

inline double gaussian_loglik(std::span<const double> z, std::span<const double> nu) {
    double ll = 0.0;
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < z.size(); ++t) ll -= 0.5 * (log2pi + std::log(nu[t]) + z[t] * z[t] / nu[t]);
    return ll;
}

} // namespace detail

inline TimeSeries variance_path(const TimeSeries& residuals, const GarchModel& model) {
    validate_model(model);
    if (residuals.empty()) throw Error(ErrorKind::SeriesTooShort, "variance_path needs at least one residual");
    std::vector<double> nu;
    detail::garch_recursion(residuals.values(), model.varsigma0, model.varsigma, model.eta,
                            unconditional_variance(model), nu);
    return TimeSeries(std::move(nu), residuals.start_index());
}

inline double garch_loglik(const TimeSeries& residuals, const GarchModel& model) {
    const auto nu = variance_path(residuals, model);
    return detail::gaussian_loglik(residuals.values(), nu.values());
}

struct GarchFitOptions {
    optim::NelderMeadOptions optimizer{.initial_step = 0.5, .ftol = 1e-10, .xtol = 1e-7, .max_evals = 20000, .restarts = 2};
};

namespace detail {

// Coefficients live on the open simplex sum < 1 - kSimplexMargin.
inline constexpr double kSimplexMargin = 1e-6;

inline void simplex_from_logits(std::span<const double> u, std::vector<double>& c) {
    c.resize(u.size());
    double mx = 0.0;  // the implicit slack logit is 0
    for (double v : u) mx = std::max(mx, v);
    double den = std::exp(-mx);
    for (std::size_t i = 0; i < u.size(); ++i) {
        c[i] = std::exp(u[i] - mx);
        den += c[i];
    }
    for (auto& v : c) v = (1.0 - kSimplexMargin) * v / den;
}

inline std::vector<double> logits_from_simplex(std::span<const double> c) {
    double used = 0.0;
    for (double v : c) used += v / (1.0 - kSimplexMargin);
    const double slack = 1.0 - used;
    std::vector<double> u(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) u[i] = std::log(c[i] / (1.0 - kSimplexMargin) / slack);
    return u;
}

} // namespace detail

/// Gaussian maximum likelihood fit of GARCH(k, ell) to zero-mean residuals.
/// Optimizes over (log varsigma0, softmax logits of (varsigma, eta)) so the
/// positivity and stationarity invariants hold for every trial point.
inline GarchModel fit_garch(const TimeSeries& residuals, int k, int ell, const GarchFitOptions& options = {}) {
    if (k < 0 || ell < 0) throw Error(ErrorKind::InvalidConfig, "orders must be non-negative");
    if (k > 0 && ell == 0) throw Error(ErrorKind::InvalidConfig, "k > 0 requires ell >= 1");
    const std::size_t n = residuals.size();
    if (n < static_cast<std::size_t>(50 * (k + ell + 1))) {
        throw Error(ErrorKind::SeriesTooShort, "need at least 50*(k+ell+1) residuals for GARCH(" + std::to_string(k) +
                                                   "," + std::to_string(ell) + ")");
    }
    const auto z = residuals.values();
    const double var = variance_of(z);
    if (!(var > 0.0)) throw Error(ErrorKind::DegenerateInput, "residuals have zero sample variance");

    GarchModel model;
    model.k = k;
    model.ell = ell;
    if (k == 0 && ell == 0) {
        model.varsigma0 = mean_square_of(z);
        return model;
    }

    const auto uk = static_cast<std::size_t>(k);
    const auto m = static_cast<std::size_t>(k + ell);

    std::vector<double> coeffs, nu;
    auto unpack = [&](const std::vector<double>& u, double& v0, std::vector<double>& c) {
        v0 = std::exp(u[0]);
        detail::simplex_from_logits(std::span<const double>(u).subspan(1), c);
    };
    auto objective = [&](const std::vector<double>& u) {
        double v0;
        unpack(u, v0, coeffs);
        double sum = 0.0;
        for (double c : coeffs) sum += c;
        const auto cs = std::span<const double>(coeffs);
        detail::garch_recursion(z, v0, cs.first(uk), cs.subspan(uk), v0 / (1.0 - sum), nu);
        return -detail::gaussian_loglik(z, nu);
    };

    std::vector<double> init_c(m);
    for (std::size_t i = 0; i < uk; ++i) init_c[i] = 0.80 / static_cast<double>(k);
    for (std::size_t i = uk; i < m; ++i) init_c[i] = 0.05;
    double init_sum = 0.0;
    for (double c : init_c) init_sum += c;
    if (init_sum >= 1.0 - 1e-3) {
        for (auto& c : init_c) c *= 0.95 / init_sum;
        init_sum = 0.95;
    }
    std::vector<double> start(1 + m);
    start[0] = std::log(var * (1.0 - init_sum));
    const auto logits = detail::logits_from_simplex(init_c);
    std::copy(logits.begin(), logits.end(), start.begin() + 1);

    const auto result = optim::nelder_mead(objective, start, options.optimizer);
    if (!std::isfinite(result.fx)) throw Error(ErrorKind::OptimizerFailed, "no finite GARCH likelihood reached");

    unpack(result.x, model.varsigma0, coeffs);
    model.varsigma.assign(coeffs.begin(), coeffs.begin() + k);
    model.eta.assign(coeffs.begin() + k, coeffs.end());
    validate_model(model);
    return model;
}

inline double garch_aic(double loglik, int k, int ell) { return -2.0 * loglik + 2.0 * (k + ell + 1); }

struct GarchAicCell {
    int k = 0;
    int ell = 0;
    bool ok = false;
    double loglik = 0.0;
    double aic = 0.0;
    std::string error;
    GarchModel model;
};

struct GarchSelection {
    GarchModel model;
    std::vector<GarchAicCell> table;
};

/// Grid over k in [0..max_k], ell in [0..max_ell], skipping ell = 0 with
/// k > 0. Ties go to the smaller k+ell, then smaller k.
inline GarchSelection select_garch_order(const TimeSeries& residuals, int max_k, int max_ell,
                                         const GarchFitOptions& options = {}) {
    if (max_k < 0 || max_ell < 0) throw Error(ErrorKind::InvalidConfig, "max orders must be non-negative");
    GarchSelection sel;
    for (int k = 0; k <= max_k; ++k) {
        for (int ell = 0; ell <= max_ell; ++ell) {
            if (k > 0 && ell == 0) continue;
            GarchAicCell cell;
            cell.k = k;
            cell.ell = ell;
            try {
                cell.model = fit_garch(residuals, k, ell, options);
                cell.loglik = garch_loglik(residuals, cell.model);
                cell.aic = garch_aic(cell.loglik, k, ell);
                cell.ok = true;
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::DegenerateInput) throw;
                cell.error = e.what();
            }
            sel.table.push_back(std::move(cell));
        }
    }
    const GarchAicCell* best = nullptr;
    const auto key = [](const GarchAicCell& c) { return std::tuple(c.aic, c.k + c.ell, c.k); };
    for (const auto& cell : sel.table) {
        if (cell.ok && (best == nullptr || key(cell) < key(*best))) best = &cell;
    }
    if (best == nullptr) throw Error(ErrorKind::AllCellsFailed, "every GARCH candidate failed to fit");
    sel.model = best->model;
    return sel;
}

struct GarchPath {
    TimeSeries z;
    TimeSeries nu;
};

/// Runs the recursion forward on supplied standard-normal innovations.
inline GarchPath garch_from_innovations(const GarchModel& model, std::span<const double> eps) {
    validate_model(model);
    const std::size_t n = eps.size();
    const double pre = unconditional_variance(model);
    std::vector<double> z(n), nu(n);
    for (std::size_t t = 0; t < n; ++t) {
        double v = model.varsigma0;
        for (std::size_t i = 0; i < model.varsigma.size(); ++i) v += model.varsigma[i] * (t > i ? nu[t - 1 - i] : pre);
        for (std::size_t i = 0; i < model.eta.size(); ++i) v += model.eta[i] * (t > i ? z[t - 1 - i] * z[t - 1 - i] : pre);
        nu[t] = v;
        z[t] = std::sqrt(v) * eps[t];
    }
    return {TimeSeries(std::move(z)), TimeSeries(std::move(nu))};
}

inline GarchPath simulate_garch(const GarchModel& model, std::size_t n, std::size_t burn_in, RandomSource& rng) {
    validate_model(model);
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "simulate_garch needs n >= 1");
    std::vector<double> eps(n + burn_in);
    for (auto& e : eps) e = rng.normal();
    auto full = garch_from_innovations(model, eps);
    const auto skip = static_cast<std::ptrdiff_t>(burn_in);
    return {TimeSeries(std::vector<double>(full.z.begin() + skip, full.z.end())),
            TimeSeries(std::vector<double>(full.nu.begin() + skip, full.nu.end()))};
}

/// Ljung-Box statistic on squared residuals:
///   Q = n (n + 2) sum_{j=1..lags} r_j^2 / (n - j),
/// with r_j the lag-j autocorrelation of z^2. Under homoskedasticity Q is
/// approximately chi-square with `lags` degrees of freedom.
inline double heteroskedasticity_score(const TimeSeries& residuals, std::size_t lags) {
    const std::size_t n = residuals.size();
    if (lags == 0) throw Error(ErrorKind::InvalidConfig, "lags must be >= 1");
    if (n <= 10 * lags) throw Error(ErrorKind::SeriesTooShort, "need more than 10*lags residuals");
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = residuals[t] * residuals[t];
    const double m = mean_of(y);
    double denom = 0.0;
    for (auto& v : y) {
        v -= m;
        denom += v * v;
    }
    if (!(denom > 0.0)) throw Error(ErrorKind::DegenerateInput, "squared residuals are constant");
    const double nn = static_cast<double>(n);
    double q = 0.0;
    for (std::size_t j = 1; j <= lags; ++j) {
        double num = 0.0;
        for (std::size_t t = j; t < n; ++t) num += y[t] * y[t - j];
        const double r = num / denom;
        q += r * r / (nn - static_cast<double>(j));
    }
    return nn * (nn + 2.0) * q;
}

} // namespace agcfar
