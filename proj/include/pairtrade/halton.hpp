// Halton low-discrepancy sequences and the Box-Muller transformed Gaussian
// point sets used by the filter.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pairtrade::qmc {

// Radical inverse of i (i >= 1) in the given prime base. Lies in (0, 1).
inline double halton(unsigned base, std::uint64_t i) {
    double f = 1.0;
    double r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

// A 2-D Halton point stream. `skip` leading points are dropped; the stream
// is a value type, cheap to copy and advance independently per worker.
struct HaltonStream {
    std::array<unsigned, 2> bases{2, 3};
    std::uint64_t skip = 20;
    std::uint64_t index = 0;  // points emitted so far

    std::array<double, 2> next() {
        ++index;
        const std::uint64_t i = skip + index;
        return {halton(bases[0], i), halton(bases[1], i)};
    }
};

// Box-Muller (cosine branch): one 2-D point -> one standard normal draw.
inline double box_muller(double u1, double u2) {
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// n Gaussian QMC draws with the given mean and variance. The affine step is
// applied to the unit draws elementwise, so
//   gaussian_qmc(n, m, v, s) == m + sqrt(v) * gaussian_qmc(n, 0, 1, s)
// holds exactly.
inline std::vector<double> gaussian_qmc(std::size_t n, double mean, double var,
                                        HaltonStream& stream) {
    if (var < 0.0) throw std::invalid_argument("gaussian_qmc: negative variance");
    std::vector<double> out(n);
    const double sd = std::sqrt(var);
    for (std::size_t g = 0; g < n; ++g) {
        auto [u1, u2] = stream.next();
        out[g] = mean + sd * box_muller(u1, u2);
    }
    return out;
}

// Standard-normal cloud rescaled to have sample mean 0 and sample variance 1
// exactly. The filter uses these so that moment integrals of affine
// integrands are exact regardless of G.
inline std::vector<double> standardized_normal_cloud(std::size_t n,
                                                     HaltonStream& stream) {
    std::vector<double> z(n);
    double s1 = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
        auto [u1, u2] = stream.next();
        z[g] = box_muller(u1, u2);
        s1 += z[g];
    }
    const double m = s1 / static_cast<double>(n);
    double s2 = 0.0;
    for (double& v : z) {
        v -= m;
        s2 += v * v;
    }
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    if (sd > 0.0)
        for (double& v : z) v /= sd;
    return z;
}

}  // namespace pairtrade::qmc
