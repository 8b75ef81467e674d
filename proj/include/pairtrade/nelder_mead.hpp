// Derivative-free simplex minimizer with box constraints handled by a
// logistic reparameterization. Deterministic given its inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pairtrade::opt {

struct Bounds {
    double lo;
    double hi;
};

// Maps R -> (lo, hi) strictly; parameters returned by the optimizer always
// lie inside their boxes.
inline double to_bounded(double y, const Bounds& b) {
    return b.lo + (b.hi - b.lo) / (1.0 + std::exp(-y));
}

inline double to_unbounded(double x, const Bounds& b) {
    double p = (x - b.lo) / (b.hi - b.lo);
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

struct NelderMeadResult {
    std::vector<double> x;  // bounded coordinates
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    int max_iterations = 500;
    double tolerance = 1e-6;   // simplex diameter in transformed coordinates
    double initial_step = 0.5; // in transformed coordinates
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                    const std::vector<double>& start,
                                    const std::vector<Bounds>& bounds,
                                    const NelderMeadOptions& opts = {}) {
    const std::size_t n = start.size();
    if (bounds.size() != n) throw std::invalid_argument("nelder_mead: bounds/start size mismatch");

    auto eval = [&](const std::vector<double>& y) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = to_bounded(y[i], bounds[i]);
        const double v = fn(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) simplex[0][i] = to_unbounded(start[i], bounds[i]);
    for (std::size_t v = 1; v <= n; ++v) {
        simplex[v] = simplex[0];
        simplex[v][v - 1] += opts.initial_step;
    }
    std::vector<double> values(n + 1);
    for (std::size_t v = 0; v <= n; ++v) values[v] = eval(simplex[v]);

    NelderMeadResult result;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        // order: best first
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> sx(n + 1);
        std::vector<double> sv(n + 1);
        for (std::size_t v = 0; v <= n; ++v) { sx[v] = simplex[idx[v]]; sv[v] = values[idx[v]]; }
        simplex.swap(sx);
        values.swap(sv);

        double diam = 0.0;
        for (std::size_t v = 1; v <= n; ++v)
            for (std::size_t i = 0; i < n; ++i)
                diam = std::max(diam, std::abs(simplex[v][i] - simplex[0][i]));
        if (diam < opts.tolerance) { result.converged = true; break; }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i)
                y[i] = centroid[i] + coef * (centroid[i] - simplex[n][i]);
            return y;
        };

        const auto reflected = blend(1.0);
        const double fr = eval(reflected);
        if (fr < values[0]) {
            const auto expanded = blend(2.0);
            const double fe = eval(expanded);
            if (fe < fr) { simplex[n] = expanded; values[n] = fe; }
            else { simplex[n] = reflected; values[n] = fr; }
        } else if (fr < values[n - 1]) {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            const auto contracted = blend(fr < values[n] ? 0.5 : -0.5);
            const double fc = eval(contracted);
            if (fc < std::min(fr, values[n])) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for (std::size_t v = 1; v <= n; ++v) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[v][i] = 0.5 * (simplex[v][i] + simplex[0][i]);
                    values[v] = eval(simplex[v]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t v = 1; v <= n; ++v)
        if (values[v] < values[best]) best = v;
    result.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.x[i] = to_bounded(simplex[best][i], bounds[i]);
    result.value = values[best];
    result.iterations = iter;
    return result;
}

}  // namespace pairtrade::opt
