// Daily P&L accounting from signal series and the performance statistics
// reported for each backtest: cumulative return, Sharpe, Calmar, maximum
// drawdown and pain index, with proportional transaction costs.

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pairtrade/strategy.hpp"

namespace pairtrade {

struct CostModel {
    double per_asset = 0.002;  // proportional cost per leg (20 bp)
    double risk_free = 0.0;    // annualized
};

// Sharpe convention: simulation studies use the raw (unannualized) mean/std
// of daily returns at zero risk-free rate; applications annualize and
// subtract the configured rate. Never inferred, always explicit.
enum class SharpeMode { Simulation, Application };

struct BacktestReport {
    std::vector<double> returns;
    std::vector<double> cumulative;  // arithmetic running sum
    double cum_return = 0.0;
    double mean_return = 0.0;
    double std_return = 0.0;
    double ann_return = 0.0;
    double ann_std = 0.0;
    std::optional<double> sharpe;  // absent when std is zero
    std::optional<double> calmar;  // absent when drawdown is zero
    double max_drawdown = 0.0;
    double pain_index = 0.0;
    int trade_count = 0;
};

inline double max_drawdown(const std::vector<double>& cumulative) {
    if (cumulative.empty()) throw std::invalid_argument("max_drawdown: empty series");
    double peak = 0.0;  // flat start: CR_0 baseline is zero
    double md = 0.0;
    for (double c : cumulative) {
        peak = std::max(peak, c);
        md = std::max(md, peak - c);
    }
    return md;
}

// Daily mark-to-market P&L. A +1 position is short the spread, so it earns
// when the spread falls: r_t = position_{t-1} * (x_{t-1} - x_t) / scale.
// Each unit of position change trades both legs, costing 2 * per_asset.
inline BacktestReport pnl_from_signals(const std::vector<double>& spread,
                                       const SignalSeries& signals, double scale,
                                       const CostModel& costs) {
    if (spread.size() != signals.position.size())
        throw std::invalid_argument("pnl_from_signals: series misaligned");
    if (!(scale > 0.0)) throw std::invalid_argument("pnl_from_signals: scale must be > 0");

    BacktestReport report;
    report.returns.resize(spread.size(), 0.0);
    report.cumulative.resize(spread.size(), 0.0);
    int prev = 0;
    double cum = 0.0;
    for (std::size_t t = 0; t < spread.size(); ++t) {
        double r = 0.0;
        if (t > 0) r = prev * (spread[t - 1] - spread[t]) / scale;
        const int turnover = std::abs(signals.position[t] - prev);
        r -= 2.0 * costs.per_asset * turnover;
        prev = signals.position[t];
        cum += r;
        report.returns[t] = r;
        report.cumulative[t] = cum;
    }
    report.cum_return = cum;
    report.trade_count = static_cast<int>(signals.trades.size());
    return report;
}

// Fills the summary statistics of a report whose return series is populated.
inline void performance(BacktestReport& report, const CostModel& costs, SharpeMode mode,
                        double periods_per_year = 252.0) {
    const auto& r = report.returns;
    if (r.size() < 2) throw std::invalid_argument("performance: need >= 2 returns");

    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(r.size());
    const double sd = std::sqrt(var);

    report.mean_return = mean;
    report.std_return = sd;
    report.ann_return = mean * periods_per_year;
    report.ann_std = sd * std::sqrt(periods_per_year);
    report.max_drawdown = max_drawdown(report.cumulative);

    double pain = 0.0, peak = 0.0;
    for (double c : report.cumulative) {
        peak = std::max(peak, c);
        pain += peak - c;
    }
    report.pain_index = pain / static_cast<double>(report.cumulative.size());

    report.sharpe.reset();
    if (sd > 0.0) {
        if (mode == SharpeMode::Simulation)
            report.sharpe = mean / sd;
        else
            report.sharpe = (report.ann_return - costs.risk_free) / report.ann_std;
    }
    report.calmar.reset();
    if (report.max_drawdown > 0.0) report.calmar = report.ann_return / report.max_drawdown;
}

inline BacktestReport backtest(const std::vector<double>& spread, const SignalSeries& signals,
                               double scale, const CostModel& costs, SharpeMode mode,
                               double periods_per_year = 252.0) {
    BacktestReport report = pnl_from_signals(spread, signals, scale, costs);
    performance(report, costs, mode, periods_per_year);
    return report;
}

}  // namespace pairtrade
