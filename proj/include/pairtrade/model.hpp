// State-space model for the pair: observed price P_A = gamma * P_B + x + eps,
// latent spread x_{t+1} = f(x_t) + g(x_t) * eta_t. Drift, diffusion and noise
// families plus exact path simulation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gsl/gsl_cdf.h>

#include "pairtrade/rng.hpp"

namespace pairtrade {

struct DriftSpec {
    enum class Family { Linear, Quadratic, AitSahalia };
    Family family = Family::Linear;
    std::vector<double> coeffs;  // Linear: 2, Quadratic: 3, AitSahalia: 4

    static std::size_t expected_coeffs(Family f) {
        switch (f) {
            case Family::Linear: return 2;
            case Family::Quadratic: return 3;
            case Family::AitSahalia: return 4;
        }
        return 0;
    }

    void validate() const {
        if (coeffs.size() != expected_coeffs(family))
            throw std::invalid_argument("DriftSpec: coefficient count does not match family");
    }
};

struct DiffusionSpec {
    enum class Family { Constant, Arch, Aparch };
    Family family = Family::Constant;
    std::vector<double> coeffs;  // Constant: {sigma}; Arch/Aparch: {theta0..theta_m}
    unsigned lag = 1;            // m, Arch/Aparch only
    double power = 2.0;          // delta, Aparch only

    bool is_constant() const { return family == Family::Constant; }

    void validate() const {
        if (coeffs.empty()) throw std::invalid_argument("DiffusionSpec: no coefficients");
        for (double c : coeffs)
            if (c < 0.0) throw std::invalid_argument("DiffusionSpec: negative coefficient");
        if (family == Family::Constant) {
            if (coeffs.size() != 1) throw std::invalid_argument("DiffusionSpec: constant takes one coefficient");
            // sigma = 0 (noiseless recursion) is allowed for constant diffusion
        } else {
            if (lag < 1) throw std::invalid_argument("DiffusionSpec: lag order must be >= 1");
            if (coeffs.size() != lag + 1)
                throw std::invalid_argument("DiffusionSpec: Arch/Aparch need lag+1 coefficients");
            if (coeffs[0] <= 0.0) throw std::invalid_argument("DiffusionSpec: theta0 must be > 0");
            if (family == Family::Aparch && power <= 0.0)
                throw std::invalid_argument("DiffusionSpec: Aparch power must be > 0");
        }
    }
};

struct NoiseSpec {
    enum class Family { Gaussian, StudentT, Ged };
    Family family = Family::Gaussian;
    double mu = 0.0;     // Gaussian, Ged
    double sigma = 1.0;  // Gaussian
    double nu = 3.0;     // StudentT, > 2
    double alpha = 1.0;  // Ged scale
    double beta = 2.0;   // Ged shape

    static NoiseSpec gaussian(double mu = 0.0, double sigma = 1.0) {
        NoiseSpec n; n.family = Family::Gaussian; n.mu = mu; n.sigma = sigma; return n;
    }
    static NoiseSpec student_t(double nu) {
        NoiseSpec n; n.family = Family::StudentT; n.nu = nu; return n;
    }
    static NoiseSpec ged(double alpha, double beta, double mu = 0.0) {
        NoiseSpec n; n.family = Family::Ged; n.alpha = alpha; n.beta = beta; n.mu = mu; return n;
    }

    void validate() const {
        switch (family) {
            case Family::Gaussian:
                if (sigma <= 0.0) throw std::invalid_argument("NoiseSpec: sigma must be > 0");
                break;
            case Family::StudentT:
                if (nu <= 2.0) throw std::invalid_argument("NoiseSpec: nu must be > 2 (finite variance)");
                break;
            case Family::Ged:
                if (alpha <= 0.0 || beta <= 0.0)
                    throw std::invalid_argument("NoiseSpec: alpha, beta must be > 0");
                break;
        }
    }

    bool symmetric_about_zero() const {
        switch (family) {
            case Family::Gaussian: return mu == 0.0;
            case Family::StudentT: return true;
            case Family::Ged: return mu == 0.0;
        }
        return false;
    }

    double mean() const {
        return family == Family::StudentT ? 0.0 : mu;
    }

    double variance() const {
        switch (family) {
            case Family::Gaussian: return sigma * sigma;
            case Family::StudentT: return nu / (nu - 2.0);
            case Family::Ged:
                return alpha * alpha *
                       std::exp(std::lgamma(3.0 / beta) - std::lgamma(1.0 / beta));
        }
        return 0.0;
    }
};

// Density of the innovation distribution at eta.
inline double noise_pdf(const NoiseSpec& spec, double eta) {
    switch (spec.family) {
        case NoiseSpec::Family::Gaussian: {
            const double z = (eta - spec.mu) / spec.sigma;
            return std::exp(-0.5 * z * z) / (spec.sigma * std::sqrt(2.0 * M_PI));
        }
        case NoiseSpec::Family::StudentT: {
            const double nu = spec.nu;
            const double lognorm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                                   0.5 * std::log(nu * M_PI);
            return std::exp(lognorm - 0.5 * (nu + 1.0) * std::log1p(eta * eta / nu));
        }
        case NoiseSpec::Family::Ged: {
            const double a = spec.alpha, b = spec.beta;
            const double lognorm = std::log(b) - std::log(2.0 * a) - std::lgamma(1.0 / b);
            return std::exp(lognorm - std::pow(std::abs(eta - spec.mu) / a, b));
        }
    }
    return 0.0;
}

// Inverse-CDF map from a uniform draw to an innovation. Monotone in u, so a
// single uniform stream drives every noise family.
inline double noise_quantile(const NoiseSpec& spec, double u) {
    switch (spec.family) {
        case NoiseSpec::Family::Gaussian:
            return spec.mu + spec.sigma * gsl_cdf_ugaussian_Pinv(u);
        case NoiseSpec::Family::StudentT:
            return gsl_cdf_tdist_Pinv(u, spec.nu);
        case NoiseSpec::Family::Ged: {
            // |eta - mu|^beta / alpha^beta is Gamma(1/beta, 1) distributed.
            const double sign = u < 0.5 ? -1.0 : 1.0;
            const double v = std::abs(2.0 * u - 1.0);
            const double w = gsl_cdf_gamma_Pinv(v, 1.0 / spec.beta, 1.0);
            return spec.mu + sign * spec.alpha * std::pow(w, 1.0 / spec.beta);
        }
    }
    return 0.0;
}

struct ModelSpec {
    DriftSpec drift;
    DiffusionSpec diffusion;
    NoiseSpec noise;
    double gamma = 1.0;    // hedge ratio
    double obs_var = 1e-4; // sigma_eps^2, > 0
    // The observation intercept is identified away (fixed at zero).

    void validate() const {
        drift.validate();
        diffusion.validate();
        noise.validate();
        if (obs_var <= 0.0) throw std::invalid_argument("ModelSpec: obs_var must be > 0");
    }
};

inline double eval_drift(const DriftSpec& spec, double x) {
    const auto& th = spec.coeffs;
    switch (spec.family) {
        case DriftSpec::Family::Linear:
            return th[0] + th[1] * x;
        case DriftSpec::Family::Quadratic:
            return th[0] + th[1] * x + th[2] * x * x;
        case DriftSpec::Family::AitSahalia:
            if (x == 0.0) throw std::domain_error("eval_drift: AitSahalia drift undefined at x = 0");
            return th[0] + th[1] / x + th[2] * x + th[3] * x * x;
    }
    return 0.0;
}

// g(x_t; theta) from the most recent spread values. history is ordered oldest
// to newest; the last `lag` entries feed the Arch/Aparch recursion.
inline double eval_diffusion(const DiffusionSpec& spec, std::span<const double> history) {
    switch (spec.family) {
        case DiffusionSpec::Family::Constant:
            return spec.coeffs[0];
        case DiffusionSpec::Family::Arch: {
            if (history.size() < spec.lag)
                throw std::invalid_argument("eval_diffusion: insufficient history for Arch lag");
            double s = spec.coeffs[0];
            for (unsigned i = 1; i <= spec.lag; ++i) {
                const double xi = history[history.size() - i];
                s += spec.coeffs[i] * xi * xi;
            }
            return std::sqrt(s);
        }
        case DiffusionSpec::Family::Aparch: {
            if (history.size() < spec.lag)
                throw std::invalid_argument("eval_diffusion: insufficient history for Aparch lag");
            double s = spec.coeffs[0];
            for (unsigned i = 1; i <= spec.lag; ++i)
                s += spec.coeffs[i] * std::pow(std::abs(history[history.size() - i]), spec.power);
            return std::pow(s, 1.0 / spec.power);
        }
    }
    return 0.0;
}

// Convenience overload for lag-1 dependence (the common case in this library).
inline double eval_diffusion(const DiffusionSpec& spec, double x_prev) {
    return eval_diffusion(spec, std::span<const double>(&x_prev, 1));
}

// Unconditional diffusion level used to pad Arch history before lag steps of
// data exist: sqrt(theta0 / (1 - sum theta_i)) when the denominator is
// positive, else sqrt(theta0).
inline double diffusion_padding(const DiffusionSpec& spec) {
    if (spec.family == DiffusionSpec::Family::Constant) return spec.coeffs[0];
    double s = 0.0;
    for (std::size_t i = 1; i < spec.coeffs.size(); ++i) s += spec.coeffs[i];
    if (s < 1.0) return std::sqrt(spec.coeffs[0] / (1.0 - s));
    return std::sqrt(spec.coeffs[0]);
}

struct SpreadPath {
    std::vector<double> values;
    std::uint64_t seed = 0;
    int resamples = 0;  // explosive-path restarts (quadratic drift guard)
};

struct SimulateOptions {
    std::optional<double> x0;           // absent: 200-step burn-in from the drift fixed point
    std::optional<double> explosion_bound;  // abort-and-resample when |x| exceeds this
    int max_resamples = 100;
};

// Innovation eta_t for step t of a path, a pure function of (seed, t).
inline double draw_noise(const NoiseSpec& spec, std::uint64_t seed, std::uint64_t t) {
    return noise_quantile(spec, rng::uniform(seed, t));
}

namespace detail {

inline double drift_start_point(const ModelSpec& model) {
    // Fixed point of the linear part; 0 works for every family used here
    // except AitSahalia, whose x^-1 term needs an offset.
    if (model.drift.family == DriftSpec::Family::AitSahalia) return 1.0;
    return 0.0;
}

}  // namespace detail

// Exact simulation of the spread recursion. Identical inputs give
// bit-identical paths; the innovation at step t is keyed by (seed, t) alone.
inline SpreadPath simulate_spread(const ModelSpec& model, std::size_t horizon,
                                  const SimulateOptions& opts, std::uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("simulate_spread: horizon must be >= 1");
    model.validate();

    std::optional<double> bound = opts.explosion_bound;
    if (!bound && model.drift.family == DriftSpec::Family::Quadratic)
        bound = 1.0;  // quadratic drift is not globally mean-reverting

    const std::size_t burn = opts.x0 ? 0 : 200;
    const unsigned lag = model.diffusion.is_constant() ? 1 : model.diffusion.lag;
    const double pad = diffusion_padding(model.diffusion);

    SpreadPath path;
    path.seed = seed;
    for (int attempt = 0;; ++attempt) {
        if (attempt > opts.max_resamples)
            throw std::runtime_error("simulate_spread: resample limit exceeded (explosive model)");
        const std::uint64_t attempt_seed =
            attempt == 0 ? seed : rng::derive_seed(seed, "resample", static_cast<std::uint64_t>(attempt));

        std::vector<double> hist(lag, opts.x0 ? *opts.x0 : detail::drift_start_point(model));
        // Pre-burn-in history is padded with the unconditional diffusion scale
        // by construction of `hist`; for Arch the padding enters through g().
        bool pad_phase = !opts.x0;
        double x = hist.back();
        std::vector<double> out;
        out.reserve(horizon + 1);
        bool exploded = false;
        for (std::size_t t = 0; t < burn + horizon; ++t) {
            const double f = eval_drift(model.drift, x);
            double g;
            if (pad_phase && t < lag && !model.diffusion.is_constant()) {
                g = pad;
            } else {
                g = eval_diffusion(model.diffusion, std::span<const double>(hist));
            }
            const double eta = draw_noise(model.noise, attempt_seed, t);
            x = f + g * eta;
            if (!std::isfinite(x))
                throw std::runtime_error("simulate_spread: non-finite state at step " + std::to_string(t));
            if (bound && std::abs(x) > *bound) { exploded = true; break; }
            hist.erase(hist.begin());
            hist.push_back(x);
            if (t >= burn) out.push_back(x);
        }
        if (exploded) { ++path.resamples; continue; }
        path.values = std::move(out);
        return path;
    }
}

inline SpreadPath simulate_spread(const ModelSpec& model, std::size_t horizon,
                                  std::uint64_t seed) {
    return simulate_spread(model, horizon, SimulateOptions{}, seed);
}

struct SpreadStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Closed-form stationary moments where the model admits them (linear drift
// with constant or Arch(1) diffusion); empty otherwise.
inline std::optional<SpreadStats> stationary_stats_closed_form(const ModelSpec& model) {
    if (model.drift.family != DriftSpec::Family::Linear) return std::nullopt;
    const double c = model.drift.coeffs[0];
    const double a = model.drift.coeffs[1];
    if (std::abs(a) >= 1.0) return std::nullopt;
    const double mean = c / (1.0 - a);
    if (model.diffusion.is_constant()) {
        const double s = model.diffusion.coeffs[0];
        const double var = s * s * model.noise.variance() / (1.0 - a * a);
        return SpreadStats{mean, std::sqrt(var)};
    }
    if (model.diffusion.family == DiffusionSpec::Family::Arch && model.diffusion.lag == 1 &&
        mean == 0.0) {
        const double t0 = model.diffusion.coeffs[0];
        const double t1 = model.diffusion.coeffs[1];
        const double nv = model.noise.variance();
        const double denom = 1.0 - a * a - t1 * nv;
        if (denom <= 0.0) return std::nullopt;
        return SpreadStats{0.0, std::sqrt(t0 * nv / denom)};
    }
    return std::nullopt;
}

}  // namespace pairtrade
