// Gaussian mixture approximation of the innovation density, fitted by
// minimizing relative entropy on a wide quadrature grid, plus the
// moment-preserving reduction that keeps the filter's posterior bounded.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pairtrade/model.hpp"
#include "pairtrade/nelder_mead.hpp"

namespace pairtrade {

struct GaussianComponent {
    double weight;
    double mean;
    double var;
};

struct GaussianMixture {
    std::vector<GaussianComponent> components;

    void validate() const {
        if (components.empty()) throw std::invalid_argument("GaussianMixture: empty");
        double s = 0.0;
        for (const auto& c : components) {
            if (c.weight <= 0.0 || c.weight > 1.0)
                throw std::invalid_argument("GaussianMixture: weight outside (0, 1]");
            if (c.var <= 0.0) throw std::invalid_argument("GaussianMixture: variance must be > 0");
            s += c.weight;
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw std::invalid_argument("GaussianMixture: weights do not sum to 1");
    }

    double pdf(double x) const {
        double p = 0.0;
        for (const auto& c : components) {
            const double z = x - c.mean;
            p += c.weight * std::exp(-0.5 * z * z / c.var) / std::sqrt(2.0 * M_PI * c.var);
        }
        return p;
    }
};

// Total mean and variance (law of total mean/variance).
inline std::pair<double, double> mixture_moments(const GaussianMixture& mix) {
    double mean = 0.0;
    for (const auto& c : mix.components) mean += c.weight * c.mean;
    double var = 0.0;
    for (const auto& c : mix.components) var += c.weight * (c.var + c.mean * c.mean);
    var -= mean * mean;
    return {mean, var};
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1], computed once per order by Newton
// iteration on the Legendre polynomial.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

struct QuadratureGrid {
    std::vector<double> x;
    std::vector<double> w;
};

// Composite Gauss-Legendre grid: `panels` panels of `order` nodes over
// [center - half, center + half].
inline QuadratureGrid make_grid(double center, double half, int panels = 32, int order = 64) {
    std::vector<double> gl_x, gl_w;
    gauss_legendre(order, gl_x, gl_w);
    QuadratureGrid grid;
    grid.x.reserve(static_cast<std::size_t>(panels) * order);
    grid.w.reserve(grid.x.capacity());
    const double lo = center - half;
    const double width = 2.0 * half / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        for (int k = 0; k < order; ++k) {
            grid.x.push_back(a + 0.5 * width * (gl_x[k] + 1.0));
            grid.w.push_back(0.5 * width * gl_w[k]);
        }
    }
    return grid;
}

inline QuadratureGrid noise_grid(const NoiseSpec& noise) {
    const double sd = std::sqrt(noise.variance());
    return make_grid(noise.mean(), 12.0 * sd);
}

}  // namespace detail

// Relative entropy H(p | q) of the true noise density against a mixture,
// estimated by quadrature over +-12 noise standard deviations.
inline double kl_divergence(const NoiseSpec& p, const GaussianMixture& q) {
    const auto grid = detail::noise_grid(p);
    double kl = 0.0;
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        const double pd = noise_pdf(p, grid.x[i]);
        if (pd <= 0.0) continue;
        const double qd = std::max(q.pdf(grid.x[i]), 1e-300);
        kl += grid.w[i] * pd * std::log(pd / qd);
    }
    return std::max(kl, 0.0);
}

// Moment-preserving reduction: greedily merges the pair with the smallest
// merge cost until at most max_components remain. Total weight, mean and
// variance of the mixture are preserved exactly by each merge.
inline GaussianMixture reduce_mixture(const GaussianMixture& mix, std::size_t max_components) {
    if (max_components < 1) throw std::invalid_argument("reduce_mixture: max_components must be >= 1");
    GaussianMixture out = mix;
    auto merge_of = [](const GaussianComponent& a, const GaussianComponent& b) {
        GaussianComponent m;
        m.weight = a.weight + b.weight;
        m.mean = (a.weight * a.mean + b.weight * b.mean) / m.weight;
        m.var = (a.weight * (a.var + a.mean * a.mean) + b.weight * (b.var + b.mean * b.mean)) /
                    m.weight -
                m.mean * m.mean;
        return m;
    };
    while (out.components.size() > max_components) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        GaussianComponent bm{};
        for (std::size_t i = 0; i + 1 < out.components.size(); ++i) {
            for (std::size_t j = i + 1; j < out.components.size(); ++j) {
                const auto& a = out.components[i];
                const auto& b = out.components[j];
                const auto m = merge_of(a, b);
                // Runnalls' upper bound on the KL cost of the merge.
                const double cost = 0.5 * (m.weight * std::log(m.var) -
                                           a.weight * std::log(a.var) -
                                           b.weight * std::log(b.var));
                if (cost < best) { best = cost; bi = i; bj = j; bm = m; }
            }
        }
        out.components[bi] = bm;
        out.components.erase(out.components.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return out;
}

namespace detail {

// Cross-entropy part of the KL objective; the p log p term is constant in
// the mixture parameters.
inline double neg_cross_entropy(const QuadratureGrid& grid, const std::vector<double>& pd,
                                const GaussianMixture& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        if (pd[i] <= 0.0) continue;
        s -= grid.w[i] * pd[i] * std::log(std::max(q.pdf(grid.x[i]), 1e-300));
    }
    return s;
}

inline GaussianMixture symmetric_mixture_from_params(const std::vector<double>& v, std::size_t m) {
    // Layout: [d_1..d_npairs, var_center?(m odd), var_1..var_npairs,
    //          logit_1..logit_{groups-1}] with softmax over group weights,
    // pair groups counted twice.
    const std::size_t npairs = m / 2;
    const bool has_center = (m % 2) == 1;
    std::size_t k = 0;
    std::vector<double> d(npairs);
    for (auto& x : d) x = v[k++];
    double vc = 0.0;
    if (has_center) vc = v[k++];
    std::vector<double> pv(npairs);
    for (auto& x : pv) x = v[k++];
    const std::size_t groups = npairs + (has_center ? 1 : 0);
    std::vector<double> logits(groups, 0.0);
    for (std::size_t i = 0; i + 1 < groups; ++i) logits[i + 1] = v[k++];
    double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> gw(groups);
    double zs = 0.0;
    for (std::size_t i = 0; i < groups; ++i) { gw[i] = std::exp(logits[i] - zmax); zs += gw[i]; }
    // group 0 = center when present; pair groups carry double mass
    double total = 0.0;
    std::vector<double> mass(groups);
    for (std::size_t i = 0; i < groups; ++i) {
        const bool is_center = has_center && i == 0;
        mass[i] = gw[i] / zs * (is_center ? 1.0 : 1.0);
        total += mass[i];
    }
    GaussianMixture mix;
    std::size_t gi = 0;
    if (has_center) {
        mix.components.push_back({mass[gi] / total, 0.0, vc});
        ++gi;
    }
    for (std::size_t p = 0; p < npairs; ++p, ++gi) {
        const double w = mass[gi] / total * 0.5;
        mix.components.push_back({w, -d[p], pv[p]});
        mix.components.push_back({w, d[p], pv[p]});
    }
    return mix;
}

inline GaussianMixture general_mixture_from_params(const std::vector<double>& v, std::size_t m) {
    // Layout: [mean_1..mean_m, var_1..var_m, logit_2..logit_m]
    std::vector<double> logits(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) logits[i] = v[2 * m + (i - 1)];
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double zs = 0.0;
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) { w[i] = std::exp(logits[i] - zmax); zs += w[i]; }
    GaussianMixture mix;
    for (std::size_t i = 0; i < m; ++i)
        mix.components.push_back({w[i] / zs, v[i], v[m + i]});
    return mix;
}

}  // namespace detail

// Fits an m-component mixture to the noise density by local derivative-free
// search on the quadrature KL. Gaussian noise is represented exactly by a
// single component no matter what m is requested. Symmetric noise uses a
// symmetric parameterization, so fitted means come out symmetric about zero.
inline GaussianMixture fit_mixture(const NoiseSpec& noise, std::size_t m) {
    if (m < 1) throw std::invalid_argument("fit_mixture: m must be >= 1");
    noise.validate();

    if (noise.family == NoiseSpec::Family::Gaussian)
        return GaussianMixture{{{1.0, noise.mu, noise.sigma * noise.sigma}}};

    const double nm = noise.mean();
    const double nv = noise.variance();
    if (m == 1) {
        // KL(p || N(a, P)) is minimized exactly by moment matching.
        return GaussianMixture{{{1.0, nm, nv}}};
    }

    const auto grid = detail::noise_grid(noise);
    std::vector<double> pd(grid.x.size());
    for (std::size_t i = 0; i < pd.size(); ++i) pd[i] = noise_pdf(noise, grid.x[i]);
    double plogp = 0.0;
    for (std::size_t i = 0; i < pd.size(); ++i)
        if (pd[i] > 0.0) plogp += grid.w[i] * pd[i] * std::log(pd[i]);

    const double sd = std::sqrt(nv);
    const bool symmetric = noise.symmetric_about_zero();

    std::vector<double> start;
    std::vector<opt::Bounds> bounds;
    std::function<GaussianMixture(const std::vector<double>&)> build;

    if (symmetric) {
        const std::size_t npairs = m / 2;
        const bool has_center = (m % 2) == 1;
        const std::size_t groups = npairs + (has_center ? 1 : 0);
        for (std::size_t p = 0; p < npairs; ++p) {
            start.push_back(sd * (1.0 + static_cast<double>(p)));  // quantile-style spread
            bounds.push_back({1e-6 * sd, 12.0 * sd});
        }
        if (has_center) { start.push_back(0.5 * nv); bounds.push_back({1e-8 * nv, 200.0 * nv}); }
        for (std::size_t p = 0; p < npairs; ++p) {
            start.push_back(0.5 * nv);
            bounds.push_back({1e-8 * nv, 200.0 * nv});
        }
        for (std::size_t i = 0; i + 1 < groups; ++i) { start.push_back(0.0); bounds.push_back({-20.0, 20.0}); }
        build = [m](const std::vector<double>& v) { return detail::symmetric_mixture_from_params(v, m); };
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
            start.push_back(noise_quantile(noise, q));
            bounds.push_back({nm - 12.0 * sd, nm + 12.0 * sd});
        }
        for (std::size_t i = 0; i < m; ++i) { start.push_back(0.5 * nv); bounds.push_back({1e-8 * nv, 200.0 * nv}); }
        for (std::size_t i = 1; i < m; ++i) { start.push_back(0.0); bounds.push_back({-20.0, 20.0}); }
        build = [m](const std::vector<double>& v) { return detail::general_mixture_from_params(v, m); };
    }

    auto objective = [&](const std::vector<double>& v) {
        return detail::neg_cross_entropy(grid, pd, build(v));
    };

    opt::NelderMeadOptions nm_opts;
    nm_opts.max_iterations = 4000;
    nm_opts.tolerance = 1e-8;
    const auto res = opt::nelder_mead(objective, start, bounds, nm_opts);
    const auto mix = build(res.x);
    const double kl = plogp + res.value;
    if (!res.converged) {
        std::ostringstream msg;
        msg << "fit_mixture: no convergence after " << res.iterations
            << " iterations (KL = " << kl << ")";
        throw std::runtime_error(msg.str());
    }
    return mix;
}

}  // namespace pairtrade
