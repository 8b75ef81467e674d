// Gaussian-sum filter for the spread state-space model. Moment integrals of
// the nonlinear transition are evaluated on Box-Muller transformed Halton
// clouds; the posterior is a Gaussian mixture with one branch per (state
// component, noise component) pair, reduced back to a bounded size after
// every update.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pairtrade/halton.hpp"
#include "pairtrade/mixture.hpp"
#include "pairtrade/model.hpp"
#include "pairtrade/rng.hpp"

namespace pairtrade {

struct QmcConfig {
    std::size_t G = 128;      // cloud points per mixture branch
    std::size_t M = 16;       // posterior component cap
    std::array<unsigned, 2> bases{2, 3};
    std::uint64_t skip = 20;  // Halton warm-up

    void validate() const {
        if (G < 2) throw std::invalid_argument("QmcConfig: G must be >= 2");
        if (M < 1) throw std::invalid_argument("QmcConfig: M must be >= 1");
    }
};

// Standardized normal cloud for time step t, branch slot, and phase
// (0 = predict, 1 = update). Each triple gets its own Halton offset so
// branches do not share identical point sets.
inline std::vector<double> filter_cloud(const QmcConfig& cfg, std::uint64_t t,
                                        std::uint64_t slot, std::uint64_t phase) {
    qmc::HaltonStream stream;
    stream.bases = cfg.bases;
    stream.skip = cfg.skip + (rng::hash3(t, slot, phase) & 0xfffffULL);
    return qmc::standardized_normal_cloud(cfg.G, stream);
}

// Memoizes clouds across likelihood evaluations; the clouds depend only on
// (t, slot, phase, QmcConfig), never on model parameters.
class CloudCache {
  public:
    explicit CloudCache(const QmcConfig& cfg) : cfg_(cfg) {}

    const std::vector<double>& get(std::uint64_t t, std::uint64_t slot, std::uint64_t phase) {
        const std::uint64_t key = (t << 16) | (slot << 1) | phase;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(key, filter_cloud(cfg_, t, slot, phase)).first->second;
    }

    const QmcConfig& config() const { return cfg_; }

  private:
    QmcConfig cfg_;
    std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

struct FilterState {
    GaussianMixture posterior;
    std::uint64_t t = 0;
    std::uint64_t variance_clamps = 0;  // diagnostics: P <= 0 occurrences
};

inline FilterState init_state(double mu, double sigma2) {
    if (sigma2 <= 0.0) throw std::invalid_argument("init_state: variance must be > 0");
    FilterState s;
    s.posterior.components = {{1.0, mu, sigma2}};
    return s;
}

struct PredictiveComponent {
    double c;       // prior mean of x_{t+1}
    double Q;       // prior variance
    double obs_mean;  // predicted P_A
    double V;       // innovation variance
    double S;       // state/observation cross-covariance
    double K;       // gain
};

// One-branch prediction: propagate N(b, P) through x' = f(x) + g(x) eta with
// eta ~ N(a_k, P_k). The cloud is a standardized normal point set, so the
// linear/constant case is exact at any G.
inline std::pair<double, double> predict_component(double b, double P,
                                                   const GaussianComponent& noise_k,
                                                   const ModelSpec& model,
                                                   const std::vector<double>& cloud) {
    const std::size_t G = cloud.size();
    const double sd = std::sqrt(P);
    std::vector<double> fg(G);
    double c = 0.0;
    double g2 = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        const double x = b + sd * cloud[g];
        const double fv = eval_drift(model.drift, x);
        const double gv = eval_diffusion(model.diffusion, x);
        fg[g] = fv + gv * noise_k.mean;
        c += fg[g];
        g2 += gv * gv;
    }
    c /= static_cast<double>(G);
    g2 /= static_cast<double>(G);
    double Q = 0.0;
    for (double v : fg) Q += (v - c) * (v - c);
    Q = Q / static_cast<double>(G) + g2 * noise_k.var;
    return {c, Q};
}

struct UpdateResult {
    double b;
    double P;
    double log_density;  // log predictive density of the observation
    bool clamped = false;
};

// One-branch measurement update with observation P_A = x + gamma P_B + eps.
// The synthetic observation cloud is built from the prior cloud, giving the
// cross-moment S and innovation variance V; K = S/V.
inline UpdateResult update_component(const std::pair<double, double>& prior, double price_a,
                                     double price_b, const ModelSpec& model,
                                     const std::vector<double>& cloud) {
    const auto [c, Q] = prior;
    const std::size_t G = cloud.size();
    const double sd = std::sqrt(std::max(Q, 0.0));
    double obs_mean = 0.0;
    for (std::size_t g = 0; g < G; ++g) obs_mean += c + sd * cloud[g] + model.gamma * price_b;
    obs_mean /= static_cast<double>(G);
    double cloud_var = 0.0, S = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        const double x = c + sd * cloud[g];
        const double pa = x + model.gamma * price_b;
        cloud_var += (pa - obs_mean) * (pa - obs_mean);
        S += (x - c) * (pa - obs_mean);
    }
    cloud_var /= static_cast<double>(G);
    S /= static_cast<double>(G);
    const double V = cloud_var + model.obs_var;
    const double K = S / V;
    const double innovation = price_a - obs_mean;
    if (!std::isfinite(innovation))
        throw std::runtime_error("update_component: non-finite innovation");

    UpdateResult out;
    out.b = c + K * innovation;
    out.P = Q - K * K * V;
    if (out.P <= 0.0) {
        out.P = 1e-12;
        out.clamped = true;
    }
    out.log_density = -0.5 * (std::log(2.0 * M_PI * V) + innovation * innovation / V);
    return out;
}

// One predict/update cycle over all (state, noise) branches; returns the
// log-likelihood increment log sum_i w_i * density_i.
inline double step(FilterState& state, double price_a, double price_b, const ModelSpec& model,
                   const GaussianMixture& noise_mix, CloudCache& clouds) {
    const auto& cfg = clouds.config();
    const std::size_t nb = state.posterior.components.size() * noise_mix.components.size();
    GaussianMixture next;
    next.components.reserve(nb);
    std::vector<double> logw;
    logw.reserve(nb);

    std::uint64_t slot = 0;
    for (const auto& comp : state.posterior.components) {
        for (const auto& nk : noise_mix.components) {
            const auto prior = predict_component(comp.mean, comp.var, nk, model,
                                                 clouds.get(state.t, slot, 0));
            const auto upd = update_component(prior, price_a, price_b, model,
                                              clouds.get(state.t, slot, 1));
            if (upd.clamped) ++state.variance_clamps;
            next.components.push_back({1.0, upd.b, upd.P});
            logw.push_back(std::log(comp.weight * nk.weight) + upd.log_density);
            ++slot;
        }
    }

    double lmax = logw[0];
    for (double v : logw) lmax = std::max(lmax, v);
    double lsum = 0.0;
    for (double v : logw) lsum += std::exp(v - lmax);
    const double increment = lmax + std::log(lsum);

    for (std::size_t i = 0; i < logw.size(); ++i)
        next.components[i].weight = std::exp(logw[i] - increment);
    state.posterior = reduce_mixture(next, cfg.M);
    ++state.t;
    return increment;
}

struct FilterOutput {
    std::vector<double> filtered_mean;
    std::vector<double> filtered_var;
    std::vector<double> loglik_increments;
    double total_loglik = 0.0;
    std::uint64_t variance_clamps = 0;
};

// Runs the full recursion over an aligned (P_A, P_B) series. The initial
// N(mu, sigma2) state is the posterior one step before the first observation,
// so every observation gets a predict + update.
inline FilterOutput run_filter(const ModelSpec& model, const std::vector<double>& price_a,
                               const std::vector<double>& price_b, double mu, double sigma2,
                               CloudCache& clouds, const GaussianMixture* noise_mix = nullptr) {
    if (price_a.empty() || price_a.size() != price_b.size())
        throw std::invalid_argument("run_filter: price series empty or misaligned");
    clouds.config().validate();

    GaussianMixture mix;
    if (noise_mix) {
        mix = *noise_mix;
    } else {
        const std::size_t m = model.noise.family == NoiseSpec::Family::Gaussian ? 1 : 3;
        mix = fit_mixture(model.noise, m);
    }

    FilterState state = init_state(mu, sigma2);
    FilterOutput out;
    out.filtered_mean.reserve(price_a.size());
    out.filtered_var.reserve(price_a.size());
    out.loglik_increments.reserve(price_a.size());
    for (std::size_t t = 0; t < price_a.size(); ++t) {
        double inc;
        try {
            inc = step(state, price_a[t], price_b[t], model, mix, clouds);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "run_filter: step " << t << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
        const auto [m, v] = mixture_moments(state.posterior);
        out.filtered_mean.push_back(m);
        out.filtered_var.push_back(v);
        out.loglik_increments.push_back(inc);
        out.total_loglik += inc;
    }
    out.variance_clamps = state.variance_clamps;
    return out;
}

inline double log_likelihood(const ModelSpec& model, const std::vector<double>& price_a,
                             const std::vector<double>& price_b, double mu, double sigma2,
                             CloudCache& clouds, const GaussianMixture* noise_mix = nullptr) {
    return run_filter(model, price_a, price_b, mu, sigma2, clouds, noise_mix).total_loglik;
}

}  // namespace pairtrade
