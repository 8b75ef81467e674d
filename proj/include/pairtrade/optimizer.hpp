// Monte Carlo grid search over trade boundaries: simulate N spread paths
// from a model, evaluate every (u, l) cell under a strategy with common
// random numbers, and pick the cell maximizing mean cumulative return or
// Sharpe ratio.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pairtrade/metrics.hpp"
#include "pairtrade/model.hpp"
#include "pairtrade/rng.hpp"
#include "pairtrade/strategy.hpp"

namespace pairtrade {

enum class Criterion { CR, SR, Calmar /* reserved, not optimized */ };

struct GridSpec {
    std::vector<double> u_values;
    std::vector<double> l_values;
    Criterion criterion = Criterion::CR;
    std::size_t n_paths = 10000;
    std::size_t horizon = 1000;

    static std::vector<double> default_u() {
        std::vector<double> v;
        for (int i = 1; i <= 25; ++i) v.push_back(i * 0.1);
        return v;
    }
    static std::vector<double> default_l() {
        std::vector<double> v;
        for (int i = 25; i >= 1; --i) v.push_back(-i * 0.1);
        return v;
    }

    static GridSpec defaults() {
        GridSpec g;
        g.u_values = default_u();
        g.l_values = default_l();
        return g;
    }

    void validate() const {
        if (u_values.empty() || l_values.empty()) throw std::invalid_argument("GridSpec: empty grid");
        if (n_paths < 1) throw std::invalid_argument("GridSpec: n_paths must be >= 1");
        if (horizon < 2) throw std::invalid_argument("GridSpec: horizon must be >= 2");
        if (!std::is_sorted(u_values.begin(), u_values.end()) ||
            !std::is_sorted(l_values.begin(), l_values.end()))
            throw std::invalid_argument("GridSpec: grids must be sorted");
        if (criterion == Criterion::Calmar)
            throw std::invalid_argument("GridSpec: Calmar criterion is reserved, not implemented");
    }
};

struct GridResult {
    std::vector<double> u_values;
    std::vector<double> l_values;
    // row-major [i_u * n_l + j_l]
    std::vector<double> mean_cr, mean_sr, se_cr, se_sr;
    std::vector<std::uint64_t> trade_counts;
    SpreadStats stats;  // pooled sample moments of the simulated paths
    Criterion criterion = Criterion::CR;
    std::size_t best_i = 0, best_j = 0;
    double best_u = 0.0, best_l = 0.0;
    double best_value = 0.0;
    bool no_trade_warning = false;

    double cell(std::size_t i, std::size_t j) const {
        const std::size_t k = i * l_values.size() + j;
        return criterion == Criterion::SR ? mean_sr[k] : mean_cr[k];
    }
};

struct CellStats {
    double mean_cr = 0.0, mean_sr = 0.0;
    double se_cr = 0.0, se_sr = 0.0;
    std::uint64_t trades = 0;
};

namespace detail {

// Per-path criteria for one cell: cumulative return and the simulation-mode
// Sharpe of daily returns (0 when the path never trades).
struct PathCriteria {
    double cr;
    double sr;
    std::uint64_t trades;
};

inline PathCriteria path_cell(const std::vector<double>& path, const std::vector<double>& scale_series,
                              double center, double u, double l, Strategy strategy,
                              double return_scale, const CostModel& costs) {
    BoundarySeries bounds;
    bounds.center = center;
    bounds.upper.resize(path.size());
    bounds.lower.resize(path.size());
    for (std::size_t t = 0; t < path.size(); ++t) {
        bounds.upper[t] = center + u * scale_series[t];
        bounds.lower[t] = center + l * scale_series[t];
    }
    const SignalSeries sig = run_strategy(strategy, path, bounds);
    const BacktestReport rep = pnl_from_signals(path, sig, return_scale, costs);

    double mean = 0.0;
    for (double r : rep.returns) mean += r;
    mean /= static_cast<double>(rep.returns.size());
    double var = 0.0;
    for (double r : rep.returns) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rep.returns.size());
    const double sd = std::sqrt(var);
    return {rep.cum_return, sd > 0.0 ? mean / sd : 0.0,
            static_cast<std::uint64_t>(sig.trades.size())};
}

}  // namespace detail

// Deterministic replay of one grid cell over pre-simulated paths; used both
// by optimize_rule and as an independent consistency oracle.
inline CellStats evaluate_cell(const ModelSpec& model, Strategy strategy, double u, double l,
                               const std::vector<std::vector<double>>& paths,
                               const SpreadStats& stats, const CostModel& costs) {
    if (paths.empty()) throw std::invalid_argument("evaluate_cell: no paths");
    const bool adaptive = strategy == Strategy::C && !model.diffusion.is_constant();
    double s_cr = 0.0, s2_cr = 0.0, s_sr = 0.0, s2_sr = 0.0;
    std::uint64_t trades = 0;
    for (const auto& path : paths) {
        std::vector<double> scale_series;
        if (adaptive)
            scale_series = local_scale_series(path, stats, model);
        else
            scale_series.assign(path.size(), stats.stddev);
        // Returns stay in raw spread units (divisor 1): cumulative-return
        // magnitudes then scale with the spread's volatility, matching the
        // per-trade U - C arithmetic, and the absolute per-leg cost is
        // commensurable with them.
        const auto c = detail::path_cell(path, scale_series, stats.mean, u, l, strategy,
                                         1.0, costs);
        s_cr += c.cr;
        s2_cr += c.cr * c.cr;
        s_sr += c.sr;
        s2_sr += c.sr * c.sr;
        trades += c.trades;
    }
    const double n = static_cast<double>(paths.size());
    CellStats out;
    out.mean_cr = s_cr / n;
    out.mean_sr = s_sr / n;
    out.se_cr = std::sqrt(std::max(s2_cr / n - out.mean_cr * out.mean_cr, 0.0) / n);
    out.se_sr = std::sqrt(std::max(s2_sr / n - out.mean_sr * out.mean_sr, 0.0) / n);
    out.trades = trades;
    return out;
}

// Simulates the common path set (path n keyed by (seed, "path", n)) and
// evaluates the whole grid. Per-path results land in a path-indexed buffer
// and are reduced in path order, so the result is bit-identical for any
// worker count.
inline GridResult optimize_rule(const ModelSpec& model, Strategy strategy, const GridSpec& grid,
                                const CostModel& costs, std::uint64_t seed,
                                unsigned n_workers = 1) {
    grid.validate();
    model.validate();
    if (n_workers < 1) n_workers = 1;

    const std::size_t N = grid.n_paths;
    std::vector<std::vector<double>> paths(N);
    auto simulate_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t n = lo; n < hi; ++n)
            paths[n] = simulate_spread(model, grid.horizon,
                                       rng::derive_seed(seed, "path", n)).values;
    };
    auto parallel_for = [&](std::size_t count, auto&& body) {
        if (n_workers == 1 || count < 2) {
            body(std::size_t{0}, count);
            return;
        }
        std::vector<std::thread> threads;
        const std::size_t chunk = (count + n_workers - 1) / n_workers;
        for (unsigned w = 0; w < n_workers; ++w) {
            const std::size_t lo = std::min(count, w * chunk);
            const std::size_t hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            threads.emplace_back([lo, hi, &body] { body(lo, hi); });
        }
        for (auto& t : threads) t.join();
    };

    parallel_for(N, simulate_range);

    // Pooled sample moments across every recorded bar of every path; these
    // define the close level and the standard-deviation unit of the grid.
    SpreadStats stats;
    {
        double s1 = 0.0;
        std::size_t count = 0;
        for (const auto& p : paths) {
            for (double x : p) s1 += x;
            count += p.size();
        }
        stats.mean = s1 / static_cast<double>(count);
        double s2 = 0.0;
        for (const auto& p : paths)
            for (double x : p) s2 += (x - stats.mean) * (x - stats.mean);
        stats.stddev = std::sqrt(s2 / static_cast<double>(count));
    }
    if (!(stats.stddev > 0.0)) throw std::runtime_error("optimize_rule: degenerate path set");

    const std::size_t nu = grid.u_values.size();
    const std::size_t nl = grid.l_values.size();
    const std::size_t cells = nu * nl;
    const bool adaptive = strategy == Strategy::C && !model.diffusion.is_constant();

    // Path-indexed result buffer: [path][cell] -> (cr, sr, trades).
    std::vector<std::vector<detail::PathCriteria>> per_path(N);
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t n = lo; n < hi; ++n) {
            std::vector<double> scale_series;
            if (adaptive)
                scale_series = local_scale_series(paths[n], stats, model);
            else
                scale_series.assign(paths[n].size(), stats.stddev);
            auto& row = per_path[n];
            row.resize(cells);
            for (std::size_t i = 0; i < nu; ++i)
                for (std::size_t j = 0; j < nl; ++j)
                    row[i * nl + j] =
                        detail::path_cell(paths[n], scale_series, stats.mean, grid.u_values[i],
                                          grid.l_values[j], strategy, 1.0, costs);
        }
    });

    GridResult result;
    result.u_values = grid.u_values;
    result.l_values = grid.l_values;
    result.criterion = grid.criterion;
    result.stats = stats;
    result.mean_cr.assign(cells, 0.0);
    result.mean_sr.assign(cells, 0.0);
    result.se_cr.assign(cells, 0.0);
    result.se_sr.assign(cells, 0.0);
    result.trade_counts.assign(cells, 0);

    std::vector<double> s2_cr(cells, 0.0), s2_sr(cells, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < cells; ++k) {
            const auto& c = per_path[n][k];
            result.mean_cr[k] += c.cr;
            result.mean_sr[k] += c.sr;
            s2_cr[k] += c.cr * c.cr;
            s2_sr[k] += c.sr * c.sr;
            result.trade_counts[k] += c.trades;
        }
    }
    const double dn = static_cast<double>(N);
    for (std::size_t k = 0; k < cells; ++k) {
        result.mean_cr[k] /= dn;
        result.mean_sr[k] /= dn;
        result.se_cr[k] =
            std::sqrt(std::max(s2_cr[k] / dn - result.mean_cr[k] * result.mean_cr[k], 0.0) / dn);
        result.se_sr[k] =
            std::sqrt(std::max(s2_sr[k] / dn - result.mean_sr[k] * result.mean_sr[k], 0.0) / dn);
    }

    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t total_trades = 0;
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nl; ++j) {
            const std::size_t k = i * nl + j;
            total_trades += result.trade_counts[k];
            const double v = grid.criterion == Criterion::SR ? result.mean_sr[k] : result.mean_cr[k];
            if (v > best) {
                best = v;
                result.best_i = i;
                result.best_j = j;
            }
        }
    }
    result.best_u = grid.u_values[result.best_i];
    result.best_l = grid.l_values[result.best_j];
    result.best_value = best;
    result.no_trade_warning = total_trades == 0;
    return result;
}

}  // namespace pairtrade
