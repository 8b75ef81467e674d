// Maximum-likelihood estimation of the model parameters by bounded simplex
// search over the filter likelihood, with least-squares initialization of the
// hedge ratio.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairtrade/model.hpp"
#include "pairtrade/nelder_mead.hpp"
#include "pairtrade/qmckf.hpp"
#include "pairtrade/rng.hpp"

namespace pairtrade {

struct OlsInit {
    double gamma = 0.0;
    double intercept = 0.0;
    double obs_var = 0.0;               // half the residual variance
    std::vector<double> residuals;      // P_A - gamma * P_B
    bool low_sample = false;            // fewer than 30 observations
};

inline OlsInit ols_init(const std::vector<double>& price_a, const std::vector<double>& price_b) {
    const std::size_t n = price_a.size();
    if (n < 2 || n != price_b.size())
        throw std::invalid_argument("ols_init: need >= 2 aligned observations");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) { ma += price_a[i]; mb += price_b[i]; }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sbb += (price_b[i] - mb) * (price_b[i] - mb);
        sab += (price_b[i] - mb) * (price_a[i] - ma);
    }
    if (sbb <= 0.0) throw std::invalid_argument("ols_init: constant P_B series");

    OlsInit out;
    out.gamma = sab / sbb;
    out.intercept = ma - out.gamma * mb;
    out.low_sample = n < 30;
    out.residuals.resize(n);
    double rv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.residuals[i] = price_a[i] - out.gamma * price_b[i];
        const double e = out.residuals[i] - out.intercept;
        rv += e * e;
    }
    rv /= static_cast<double>(n);
    out.obs_var = 0.5 * rv;
    return out;
}

// Which scalar inside a ModelSpec a free parameter refers to.
struct FreeParam {
    enum class Kind { Gamma, ObsVar, Drift, Diffusion, NoiseSigma } kind;
    std::size_t index = 0;  // coefficient index for Drift/Diffusion
    opt::Bounds bounds{-10.0, 10.0};
};

namespace detail {

inline double read_param(const ModelSpec& m, const FreeParam& p) {
    switch (p.kind) {
        case FreeParam::Kind::Gamma: return m.gamma;
        case FreeParam::Kind::ObsVar: return m.obs_var;
        case FreeParam::Kind::Drift: return m.drift.coeffs.at(p.index);
        case FreeParam::Kind::Diffusion: return m.diffusion.coeffs.at(p.index);
        case FreeParam::Kind::NoiseSigma: return m.noise.sigma;
    }
    throw std::logic_error("read_param: bad kind");
}

inline void write_param(ModelSpec& m, const FreeParam& p, double v) {
    switch (p.kind) {
        case FreeParam::Kind::Gamma: m.gamma = v; return;
        case FreeParam::Kind::ObsVar: m.obs_var = v; return;
        case FreeParam::Kind::Drift: m.drift.coeffs.at(p.index) = v; return;
        case FreeParam::Kind::Diffusion: m.diffusion.coeffs.at(p.index) = v; return;
        case FreeParam::Kind::NoiseSigma: m.noise.sigma = v; return;
    }
}

}  // namespace detail

// Default box constraints: AR slopes stay inside the unit circle,
// variance-like parameters stay positive.
inline std::vector<FreeParam> default_free_params(const ModelSpec& model) {
    std::vector<FreeParam> out;
    out.push_back({FreeParam::Kind::Gamma, 0, {-10.0, 10.0}});
    for (std::size_t i = 0; i < model.drift.coeffs.size(); ++i) {
        opt::Bounds b{-10.0, 10.0};
        if (model.drift.family == DriftSpec::Family::Linear && i == 1) b = {-0.999, 0.999};
        out.push_back({FreeParam::Kind::Drift, i, b});
    }
    for (std::size_t i = 0; i < model.diffusion.coeffs.size(); ++i)
        out.push_back({FreeParam::Kind::Diffusion, i, {1e-10, 10.0}});
    out.push_back({FreeParam::Kind::ObsVar, 0, {1e-10, 10.0}});
    return out;
}

struct FitConfig {
    int restarts = 3;
    std::size_t G_opt = 64;     // cloud size during search
    std::size_t G_final = 256;  // cloud size for the reported likelihood
    std::size_t M = 16;
    int max_iterations = 500;
    double tolerance = 1e-6;
    double jitter = 0.15;  // relative box-width perturbation for restarts > 0
    std::uint64_t seed = 1;
};

struct FitResult {
    ModelSpec psi_hat;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    int starts_used = 0;
};

// Local maximization of the filter log-likelihood over the free parameters.
// Restart 0 starts at the template values; later restarts jitter inside the
// boxes. The best restart wins (first index on ties).
inline FitResult fit_mle(const ModelSpec& model_template, const std::vector<FreeParam>& free,
                         const std::vector<double>& price_a, const std::vector<double>& price_b,
                         const FitConfig& cfg = {}) {
    const auto init = ols_init(price_a, price_b);

    // Initial state prior under a candidate hedge ratio: the first residual
    // and the sample variance of the residual series for that same ratio.
    // Deriving the prior from the candidate's own gamma keeps the likelihood
    // comparable across gamma values; a prior frozen at the least-squares
    // ratio would penalize every other candidate through the first
    // innovation alone.
    auto state_prior = [&](double gamma) {
        double m = 0.0;
        for (std::size_t t = 0; t < price_a.size(); ++t) m += price_a[t] - gamma * price_b[t];
        m /= static_cast<double>(price_a.size());
        double v = 0.0;
        for (std::size_t t = 0; t < price_a.size(); ++t) {
            const double r = price_a[t] - gamma * price_b[t];
            v += (r - m) * (r - m);
        }
        v /= static_cast<double>(price_a.size());
        return std::pair{price_a.front() - gamma * price_b.front(), std::max(v, 1e-6)};
    };

    FitResult result;
    result.psi_hat = model_template;

    if (free.empty()) {
        QmcConfig qcfg;
        qcfg.G = cfg.G_final;
        qcfg.M = cfg.M;
        CloudCache clouds(qcfg);
        const auto [mu0, sigma0] = state_prior(model_template.gamma);
        result.loglik = log_likelihood(model_template, price_a, price_b, mu0, sigma0, clouds);
        result.converged = true;
        return result;
    }

    QmcConfig qopt;
    qopt.G = cfg.G_opt;
    qopt.M = cfg.M;
    CloudCache clouds(qopt);

    // The noise mixture is independent of the free parameters here (noise
    // shape is fixed during estimation), so fit it once.
    const std::size_t m_comp = model_template.noise.family == NoiseSpec::Family::Gaussian ? 1 : 3;
    const GaussianMixture noise_mix = fit_mixture(model_template.noise, m_comp);

    auto objective = [&](const std::vector<double>& x) {
        ModelSpec m = model_template;
        for (std::size_t i = 0; i < free.size(); ++i) detail::write_param(m, free[i], x[i]);
        try {
            const auto [mu0, sigma0] = state_prior(m.gamma);
            return -log_likelihood(m, price_a, price_b, mu0, sigma0, clouds, &noise_mix);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::max();
        }
    };

    std::vector<double> start0(free.size());
    std::vector<opt::Bounds> bounds(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) {
        start0[i] = detail::read_param(model_template, free[i]);
        // Hedge ratio and observation variance start from the least-squares
        // split rather than the template.
        if (free[i].kind == FreeParam::Kind::Gamma) start0[i] = init.gamma;
        if (free[i].kind == FreeParam::Kind::ObsVar && init.obs_var > 0.0)
            start0[i] = init.obs_var;
        bounds[i] = free[i].bounds;
        start0[i] = std::clamp(start0[i], bounds[i].lo + 1e-9 * (bounds[i].hi - bounds[i].lo),
                               bounds[i].hi - 1e-9 * (bounds[i].hi - bounds[i].lo));
    }

    opt::NelderMeadOptions nm;
    nm.max_iterations = cfg.max_iterations;
    nm.tolerance = cfg.tolerance;

    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_x = start0;
    bool best_converged = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        std::vector<double> start = start0;
        if (r > 0) {
            const std::uint64_t rs = rng::derive_seed(cfg.seed, "restart", static_cast<std::uint64_t>(r));
            for (std::size_t i = 0; i < start.size(); ++i) {
                const double w = bounds[i].hi - bounds[i].lo;
                const double u = rng::uniform(rs, i) - 0.5;
                start[i] = std::clamp(start[i] + cfg.jitter * w * u,
                                      bounds[i].lo + 1e-9 * w, bounds[i].hi - 1e-9 * w);
            }
        }
        const auto res = opt::nelder_mead(objective, start, bounds, nm);
        result.iterations += res.iterations;
        ++result.starts_used;
        if (res.value < best_value) {
            best_value = res.value;
            best_x = res.x;
            best_converged = res.converged;
        }
    }

    for (std::size_t i = 0; i < free.size(); ++i)
        detail::write_param(result.psi_hat, free[i], best_x[i]);

    QmcConfig qfin;
    qfin.G = cfg.G_final;
    qfin.M = cfg.M;
    CloudCache final_clouds(qfin);
    const auto [mu0, sigma0] = state_prior(result.psi_hat.gamma);
    result.loglik =
        log_likelihood(result.psi_hat, price_a, price_b, mu0, sigma0, final_clouds, &noise_mix);
    result.converged = best_converged && std::isfinite(result.loglik) &&
                       best_value < std::numeric_limits<double>::max();
    return result;
}

}  // namespace pairtrade
