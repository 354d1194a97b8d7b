#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace agcfar::optim {

struct NelderMeadOptions {
    double initial_step = 0.1;   // simplex edge length along each axis
    double ftol = 1e-10;         // relative spread of function values
    double xtol = 1e-8;          // max vertex distance from the best vertex
    std::size_t max_evals = 20000;
    int restarts = 1;            // fresh simplex around the optimum after convergence
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
    bool converged = false;
};

/// Minimizes `f` with the Nelder-Mead simplex method (coefficients
/// 1, 2, 0.5, 0.5). Non-finite objective values are treated as +inf, which
/// lets callers encode infeasible points.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, const NelderMeadOptions& opt = {}) {
    const std::size_t n = start.size();
    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    if (n == 0) {
        result.x = start;
        result.fx = eval(start);
        result.converged = true;
        return result;
    }

    std::vector<double> best = start;
    double fbest = eval(best);

    for (int pass = 0; pass <= opt.restarts; ++pass) {
        std::vector<std::vector<double>> simplex(n + 1, best);
        std::vector<double> fs(n + 1);
        fs[0] = fbest;
        for (std::size_t i = 0; i < n; ++i) {
            simplex[i + 1][i] += opt.initial_step;
            fs[i + 1] = eval(simplex[i + 1]);
        }

        std::vector<std::size_t> order(n + 1);
        std::vector<double> centroid(n), xr(n), xe(n), xc(n);
        bool converged = false;

        while (result.evals < opt.max_evals) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
            const std::size_t lo = order[0];
            const std::size_t hi = order[n];
            const std::size_t nh = order[n - 1];

            double size = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                for (std::size_t i = 0; i < n; ++i) size = std::max(size, std::abs(simplex[j][i] - simplex[lo][i]));
            }
            const double spread = fs[hi] - fs[lo];
            if (std::isfinite(fs[hi]) && spread <= opt.ftol * (std::abs(fs[lo]) + opt.ftol) && size <= opt.xtol * 1e2) {
                converged = true;
                break;
            }
            if (size <= opt.xtol) {
                converged = std::isfinite(fs[lo]);
                break;
            }

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t j = 0; j <= n; ++j) {
                if (j == hi) continue;
                for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[j][i];
            }
            for (auto& c : centroid) c /= static_cast<double>(n);

            for (std::size_t i = 0; i < n; ++i) xr[i] = centroid[i] + (centroid[i] - simplex[hi][i]);
            const double fr = eval(xr);

            if (fr < fs[lo]) {
                for (std::size_t i = 0; i < n; ++i) xe[i] = centroid[i] + 2.0 * (centroid[i] - simplex[hi][i]);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[hi] = xe;
                    fs[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    fs[hi] = fr;
                }
                continue;
            }
            if (fr < fs[nh]) {
                simplex[hi] = xr;
                fs[hi] = fr;
                continue;
            }
            // Contraction, outside when the reflected point beats the worst.
            const bool outside = fr < fs[hi];
            for (std::size_t i = 0; i < n; ++i) {
                xc[i] = outside ? centroid[i] + 0.5 * (xr[i] - centroid[i])
                                : centroid[i] + 0.5 * (simplex[hi][i] - centroid[i]);
            }
            const double fc = eval(xc);
            if (fc < (outside ? fr : fs[hi])) {
                simplex[hi] = xc;
                fs[hi] = fc;
                continue;
            }
            // Shrink toward the best vertex.
            for (std::size_t j = 0; j <= n; ++j) {
                if (j == lo) continue;
                for (std::size_t i = 0; i < n; ++i) simplex[j][i] = simplex[lo][i] + 0.5 * (simplex[j][i] - simplex[lo][i]);
                fs[j] = eval(simplex[j]);
            }
        }

        const auto it = std::min_element(fs.begin(), fs.end());
        const auto idx = static_cast<std::size_t>(it - fs.begin());
        if (fs[idx] <= fbest) {
            fbest = fs[idx];
            best = simplex[idx];
        }
        result.converged = converged;
        if (result.evals >= opt.max_evals) break;
    }

    result.x = std::move(best);
    result.fx = fbest;
    return result;
}

} // namespace agcfar::optim
