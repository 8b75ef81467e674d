// Trading-signal state machines over a (filtered) spread series, boundary
// construction in spread-standard-deviation units, and the conventional
// threshold rules.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pairtrade/model.hpp"

namespace pairtrade {

enum class Strategy { A, B, C };

struct TradeRule {
    double u = 1.0;   // upper multiplier, > 0
    double l = -1.0;  // lower multiplier, < 0
    Strategy strategy = Strategy::A;
    double close_level = 0.0;  // C, spread units (default: spread mean)

    void validate() const {
        if (!(u > 0.0) || !(l < 0.0)) throw std::invalid_argument("TradeRule: need u > 0 > l");
    }
};

struct BoundarySeries {
    std::vector<double> upper;
    std::vector<double> lower;
    double center = 0.0;

    void validate() const {
        if (upper.size() != lower.size()) throw std::invalid_argument("BoundarySeries: misaligned");
        for (std::size_t t = 0; t < upper.size(); ++t)
            if (!(upper[t] > center && center > lower[t]))
                throw std::invalid_argument("BoundarySeries: need U_t > C > L_t");
    }
};

// Constant boundaries: U = C + u * sigma, L = C + l * sigma.
inline BoundarySeries make_boundaries(std::size_t n, const SpreadStats& stats,
                                      const TradeRule& rule) {
    rule.validate();
    if (!(stats.stddev > 0.0)) throw std::invalid_argument("make_boundaries: zero spread variance");
    BoundarySeries b;
    b.center = rule.close_level;
    b.upper.assign(n, b.center + rule.u * stats.stddev);
    b.lower.assign(n, b.center + rule.l * stats.stddev);
    return b;
}

// Volatility-adaptive scale s_t = g(x_{t-1}) / sqrt(1 - theta1^2): the local
// diffusion level blown up to the stationary standard deviation of an AR(1)
// with the model's slope. Uses the previous bar only, so no look-ahead.
inline std::vector<double> local_scale_series(const std::vector<double>& spread,
                                              const SpreadStats& stats, const ModelSpec& model) {
    double slope = 0.0;
    if (model.drift.coeffs.size() > 1) slope = model.drift.coeffs[1];
    const double denom2 = 1.0 - slope * slope;
    const double ar_scale = denom2 > 0.0 ? 1.0 / std::sqrt(denom2) : 1.0;

    std::vector<double> s(spread.size());
    for (std::size_t t = 0; t < spread.size(); ++t) {
        const double x_prev = t == 0 ? stats.mean : spread[t - 1];
        s[t] = eval_diffusion(model.diffusion, x_prev) * ar_scale;
        if (!(s[t] > 0.0))
            throw std::invalid_argument("local_scale_series: non-positive local scale");
    }
    return s;
}

// Boundaries for a concrete spread series. Strategy C under a
// heteroscedastic diffusion gets volatility-adaptive bands from
// local_scale_series; everything else reduces to the constant rule.
inline BoundarySeries make_boundaries(const std::vector<double>& spread, const SpreadStats& stats,
                                      const TradeRule& rule, const ModelSpec& model) {
    if (rule.strategy != Strategy::C || model.diffusion.is_constant())
        return make_boundaries(spread.size(), stats, rule);
    rule.validate();
    if (!(stats.stddev > 0.0)) throw std::invalid_argument("make_boundaries: zero spread variance");

    const auto s = local_scale_series(spread, stats, model);
    BoundarySeries b;
    b.center = rule.close_level;
    b.upper.resize(spread.size());
    b.lower.resize(spread.size());
    for (std::size_t t = 0; t < spread.size(); ++t) {
        b.upper[t] = b.center + rule.u * s[t];
        b.lower[t] = b.center + rule.l * s[t];
    }
    return b;
}

struct TradeRecord {
    std::size_t open_index;
    std::size_t close_index;  // == open bar while still open
    int direction;            // +1 short spread, -1 long spread
    bool closed;
};

struct SignalSeries {
    std::vector<int> position;  // per bar, in {-1, 0, +1}; +1 = short spread
    std::vector<TradeRecord> trades;
};

namespace detail {

inline void open_trade(SignalSeries& s, std::size_t t, int dir) {
    s.trades.push_back({t, t, dir, false});
}

inline void close_trade(SignalSeries& s, std::size_t t) {
    if (!s.trades.empty() && !s.trades.back().closed) {
        s.trades.back().close_index = t;
        s.trades.back().closed = true;
    }
}

}  // namespace detail

// Strategy A: open outside the band, close at the mean. Exits are evaluated
// before entries, so a bar beyond the opposite boundary closes and reverses.
inline SignalSeries signals_A(const std::vector<double>& spread, const BoundarySeries& bounds) {
    if (spread.size() != bounds.upper.size())
        throw std::invalid_argument("signals_A: series misaligned");
    SignalSeries out;
    out.position.resize(spread.size());
    int pos = 0;
    for (std::size_t t = 0; t < spread.size(); ++t) {
        const double x = spread[t];
        if (pos == +1 && x <= bounds.center) { pos = 0; detail::close_trade(out, t); }
        else if (pos == -1 && x >= bounds.center) { pos = 0; detail::close_trade(out, t); }
        if (pos == 0) {
            if (x >= bounds.upper[t]) { pos = +1; detail::open_trade(out, t, +1); }
            else if (x <= bounds.lower[t]) { pos = -1; detail::open_trade(out, t, -1); }
        }
        out.position[t] = pos;
    }
    return out;
}

// Strategy B: enter on the first boundary crossing, then stay invested,
// flipping only when the opposite boundary is crossed.
inline SignalSeries signals_B(const std::vector<double>& spread, const BoundarySeries& bounds) {
    if (spread.size() != bounds.upper.size())
        throw std::invalid_argument("signals_B: series misaligned");
    SignalSeries out;
    out.position.resize(spread.size());
    int pos = 0;
    for (std::size_t t = 0; t < spread.size(); ++t) {
        if (t > 0) {
            const bool cross_up =
                spread[t - 1] < bounds.upper[t - 1] && spread[t] >= bounds.upper[t];
            const bool cross_down =
                spread[t - 1] > bounds.lower[t - 1] && spread[t] <= bounds.lower[t];
            if (pos <= 0 && cross_up) {
                if (pos != 0) detail::close_trade(out, t);
                pos = +1;
                detail::open_trade(out, t, +1);
            } else if (pos >= 0 && cross_down) {
                if (pos != 0) detail::close_trade(out, t);
                pos = -1;
                detail::open_trade(out, t, -1);
            }
        }
        out.position[t] = pos;
    }
    return out;
}

// Strategy C: open when the spread re-enters the band from outside; close at
// the mean (take-profit, checked first) or when it leaves the band again
// (stop-out). The position is therefore only ever held inside the band.
inline SignalSeries signals_C(const std::vector<double>& spread, const BoundarySeries& bounds) {
    if (spread.size() != bounds.upper.size())
        throw std::invalid_argument("signals_C: series misaligned");
    SignalSeries out;
    out.position.resize(spread.size());
    int pos = 0;
    for (std::size_t t = 0; t < spread.size(); ++t) {
        const double x = spread[t];
        if (pos == +1) {
            if (x <= bounds.center || x > bounds.upper[t]) { pos = 0; detail::close_trade(out, t); }
        } else if (pos == -1) {
            if (x >= bounds.center || x < bounds.lower[t]) { pos = 0; detail::close_trade(out, t); }
        } else if (t > 0) {
            if (spread[t - 1] > bounds.upper[t - 1] && x <= bounds.upper[t]) {
                pos = +1;
                detail::open_trade(out, t, +1);
            } else if (spread[t - 1] < bounds.lower[t - 1] && x >= bounds.lower[t]) {
                pos = -1;
                detail::open_trade(out, t, -1);
            }
        }
        out.position[t] = pos;
    }
    return out;
}

inline SignalSeries run_strategy(Strategy s, const std::vector<double>& spread,
                                 const BoundarySeries& bounds) {
    switch (s) {
        case Strategy::A: return signals_A(spread, bounds);
        case Strategy::B: return signals_B(spread, bounds);
        case Strategy::C: return signals_C(spread, bounds);
    }
    throw std::logic_error("run_strategy: bad strategy");
}

// k-standard-deviation rule: boundaries at +-k sample std around the sample
// mean.
inline TradeRule rule_I_boundaries(const std::vector<double>& spread, double k,
                                   Strategy strategy = Strategy::A) {
    if (spread.size() < 2) throw std::invalid_argument("rule_I_boundaries: need >= 2 observations");
    double mean = 0.0;
    for (double x : spread) mean += x;
    mean /= static_cast<double>(spread.size());
    double var = 0.0;
    for (double x : spread) var += (x - mean) * (x - mean);
    var /= static_cast<double>(spread.size());
    if (!(var > 0.0)) throw std::invalid_argument("rule_I_boundaries: zero variance");
    TradeRule rule;
    rule.u = k;
    rule.l = -k;
    rule.strategy = strategy;
    rule.close_level = mean;
    return rule;
}

// First-passage density to zero of a standardized mean-reverting spread
// started at Z0, as a function of time.
inline double first_passage_density(double z0, double t) {
    if (t <= 0.0) return 0.0;
    const double e = std::exp(-2.0 * t);
    const double om = 1.0 - e;
    return std::sqrt(2.0 / M_PI) * std::abs(z0) * std::exp(-t) * std::pow(om, -1.5) *
           std::exp(-z0 * z0 * e / (2.0 * om));
}

// Mode of the first-passage density, in closed form.
inline double first_passage_tstar(double z0) {
    if (z0 == 0.0) throw std::invalid_argument("first_passage_tstar: Z0 must be nonzero");
    const double z2 = z0 * z0;
    const double root = std::sqrt((z2 - 3.0) * (z2 - 3.0) + 4.0 * z2);
    return 0.5 * std::log(1.0 + 0.5 * (root + z2 - 3.0));
}

}  // namespace pairtrade
