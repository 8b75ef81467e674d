// Shared fixtures for the test suite: reference models, synthetic price
// panels, and an independently coded scalar Kalman filter oracle.

#pragma once

#include <cmath>
#include <vector>

#include "pairtrade/model.hpp"
#include "pairtrade/rng.hpp"

namespace testutil {

inline pairtrade::ModelSpec model1() {
    pairtrade::ModelSpec m;
    m.drift = {pairtrade::DriftSpec::Family::Linear, {0.0, 0.9590}};
    m.diffusion = {pairtrade::DiffusionSpec::Family::Constant, {0.0049}};
    m.noise = pairtrade::NoiseSpec::gaussian();
    return m;
}

inline pairtrade::ModelSpec model2() {
    pairtrade::ModelSpec m;
    m.drift = {pairtrade::DriftSpec::Family::Quadratic, {0.0, 0.9, 0.5590}};
    m.diffusion = {pairtrade::DiffusionSpec::Family::Constant, {0.0049}};
    m.noise = pairtrade::NoiseSpec::gaussian();
    return m;
}

inline pairtrade::ModelSpec model3() {
    pairtrade::ModelSpec m;
    m.drift = {pairtrade::DriftSpec::Family::Linear, {0.0, 0.9590}};
    m.diffusion = {pairtrade::DiffusionSpec::Family::Arch, {0.00089, 0.08}, 1};
    m.noise = pairtrade::NoiseSpec::gaussian();
    return m;
}

inline pairtrade::ModelSpec model4() {
    pairtrade::ModelSpec m;
    m.drift = {pairtrade::DriftSpec::Family::Linear, {0.0, 0.9590}};
    m.diffusion = {pairtrade::DiffusionSpec::Family::Constant, {0.0049 / std::sqrt(3.0)}};
    m.noise = pairtrade::NoiseSpec::student_t(3.0);
    return m;
}

struct Panel {
    std::vector<double> price_a;
    std::vector<double> price_b;
    std::vector<double> true_spread;
};

// Synthetic pair: P_B is a slow positive random walk, the spread follows the
// model recursion, P_A = gamma * P_B + x + eps.
inline Panel make_panel(const pairtrade::ModelSpec& model, std::size_t n, std::uint64_t seed) {
    namespace rng = pairtrade::rng;
    Panel p;
    const auto spread =
        pairtrade::simulate_spread(model, n, rng::derive_seed(seed, "spread", 0));
    p.true_spread = spread.values;
    const std::uint64_t walk_seed = rng::derive_seed(seed, "walk", 0);
    const std::uint64_t obs_seed = rng::derive_seed(seed, "obs", 0);
    const double obs_sd = std::sqrt(model.obs_var);
    double pb = 50.0;
    for (std::size_t t = 0; t < n; ++t) {
        pb += 0.05 * (rng::uniform(walk_seed, t) - 0.5);
        const double eps =
            obs_sd * pairtrade::noise_quantile(pairtrade::NoiseSpec::gaussian(),
                                               rng::uniform(obs_seed, t));
        p.price_b.push_back(pb);
        p.price_a.push_back(model.gamma * pb + p.true_spread[t] + eps);
    }
    return p;
}

struct KalmanOutput {
    std::vector<double> mean;
    std::vector<double> var;
    double loglik = 0.0;
};

// Scalar Kalman filter for x_{t+1} = c + a x_t + s eta, y_t = x_t + eps;
// written directly from the standard recursions as an independent oracle.
inline KalmanOutput scalar_kalman(double c, double a, double s, double obs_var, double gamma,
                                  const std::vector<double>& price_a,
                                  const std::vector<double>& price_b, double mu0, double var0) {
    KalmanOutput out;
    double m = mu0, P = var0;
    for (std::size_t t = 0; t < price_a.size(); ++t) {
        const double m_pred = c + a * m;
        const double P_pred = a * a * P + s * s;
        const double y = price_a[t] - gamma * price_b[t];
        const double S = P_pred + obs_var;
        const double K = P_pred / S;
        const double innov = y - m_pred;
        m = m_pred + K * innov;
        P = (1.0 - K) * P_pred;
        out.mean.push_back(m);
        out.var.push_back(P);
        out.loglik += -0.5 * (std::log(2.0 * M_PI * S) + innov * innov / S);
    }
    return out;
}

}  // namespace testutil
