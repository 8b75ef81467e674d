// End-to-end orchestration: fit the model in-sample, search the trading
// boundaries on the fitted model, then filter + trade + account
// out-of-sample with the frozen parameters and rule.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pairtrade/estimation.hpp"
#include "pairtrade/io.hpp"
#include "pairtrade/metrics.hpp"
#include "pairtrade/optimizer.hpp"
#include "pairtrade/qmckf.hpp"
#include "pairtrade/strategy.hpp"

namespace pairtrade {

struct PipelineSettings {
    ModelSpec model;
    std::vector<FreeParam> free_params;
    Strategy strategy = Strategy::A;
    GridSpec grid = GridSpec::defaults();
    CostModel costs;
    FitConfig fit;
    QmcConfig qmc;
    SharpeMode mode = SharpeMode::Simulation;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string train_end;  // last in-sample date (inclusive); empty = all in-sample
};

inline PipelineSettings settings_from_config(const io::Config& cfg) {
    PipelineSettings s;
    s.model = io::model_from_config(cfg);
    s.strategy = io::strategy_from(cfg.get("strategy", "A"));

    s.grid.u_values.clear();
    s.grid.l_values.clear();
    const double u_min = cfg.get_double("grid.u_min", 0.1);
    const double u_max = cfg.get_double("grid.u_max", 2.5);
    const double u_step = cfg.get_double("grid.u_step", 0.1);
    for (double u = u_min; u <= u_max + 1e-12; u += u_step) s.grid.u_values.push_back(u);
    const double l_min = cfg.get_double("grid.l_min", -2.5);
    const double l_max = cfg.get_double("grid.l_max", -0.1);
    const double l_step = cfg.get_double("grid.l_step", 0.1);
    for (double l = l_min; l <= l_max + 1e-12; l += l_step) s.grid.l_values.push_back(l);
    s.grid.criterion = io::criterion_from(cfg.get("grid.criterion", "cr"));
    s.grid.n_paths = cfg.get_uint("grid.n_paths", 2000);
    s.grid.horizon = cfg.get_uint("grid.horizon", 1000);

    s.costs.per_asset = cfg.get_double("cost.per_asset", 0.002);
    s.costs.risk_free = cfg.get_double("cost.risk_free", 0.0);

    s.fit.restarts = static_cast<int>(cfg.get_uint("fit.restarts", 3));
    s.fit.G_opt = cfg.get_uint("fit.g_opt", 64);
    s.fit.G_final = cfg.get_uint("fit.g_final", 256);
    s.fit.max_iterations = static_cast<int>(cfg.get_uint("fit.max_iterations", 500));
    s.fit.seed = cfg.get_uint("seed", 1);

    s.qmc.G = cfg.get_uint("qmc.g", 128);
    s.qmc.M = cfg.get_uint("qmc.m", 16);
    s.qmc.skip = cfg.get_uint("qmc.skip", 20);
    s.fit.M = s.qmc.M;

    const std::string mode = cfg.get("mode", "simulation");
    if (mode == "simulation") s.mode = SharpeMode::Simulation;
    else if (mode == "application") s.mode = SharpeMode::Application;
    else throw std::invalid_argument("unknown mode: " + mode);

    s.seed = cfg.get_uint("seed", 1);
    s.workers = static_cast<unsigned>(cfg.get_uint("workers", 1));
    s.train_end = cfg.get("split.train_end", "");

    // Free parameters: default estimates everything in the template.
    const std::string free = cfg.get("fit.free", "default");
    if (free == "default") s.free_params = default_free_params(s.model);
    else if (free == "none") s.free_params = {};
    else throw std::invalid_argument("fit.free must be 'default' or 'none'");
    return s;
}

struct PipelineResult {
    FitResult fit;
    GridResult grid;
    BacktestReport report;
    bool zero_length_test = false;
    std::vector<std::string> artifacts;
};

// Runs the three stages and persists each artifact as soon as its stage
// completes; a failing stage throws with the stage name prefixed, leaving
// earlier artifacts on disk.
inline PipelineResult run_pipeline(const PipelineSettings& s, const io::PricePanel& panel,
                                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto artifact = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

    PipelineResult result;

    // Split.
    std::size_t split = panel.size();
    if (!s.train_end.empty()) {
        split = 0;
        while (split < panel.size() && panel.dates[split] <= s.train_end) ++split;
        if (split == 0) throw std::invalid_argument("pipeline: split.train_end precedes all data");
    }
    std::vector<double> train_a(panel.price_a.begin(), panel.price_a.begin() + split);
    std::vector<double> train_b(panel.price_b.begin(), panel.price_b.begin() + split);
    std::vector<double> test_a(panel.price_a.begin() + split, panel.price_a.end());
    std::vector<double> test_b(panel.price_b.begin() + split, panel.price_b.end());
    std::vector<std::string> test_dates(panel.dates.begin() + split, panel.dates.end());

    // Stage 1: in-sample estimation.
    try {
        result.fit = fit_mle(s.model, s.free_params, train_a, train_b, s.fit);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("fit: ") + e.what());
    }
    io::write_json(artifact("fit.json"), io::fit_result_to_json(result.fit));
    result.artifacts.push_back(artifact("fit.json"));

    // Stage 2: boundary search on the fitted model.
    try {
        result.grid = optimize_rule(result.fit.psi_hat, s.strategy, s.grid, s.costs,
                                    rng::derive_seed(s.seed, "grid", 0), s.workers);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("optimize-rule: ") + e.what());
    }
    io::write_grid_csv(artifact("grid.csv"), result.grid);
    io::write_json(artifact("grid.json"), io::grid_result_to_json(result.grid));
    result.artifacts.push_back(artifact("grid.csv"));
    result.artifacts.push_back(artifact("grid.json"));

    // Stage 3: out-of-sample filter, signals, accounting.
    if (test_a.empty()) {
        result.zero_length_test = true;
        io::json j;
        j["zero_length_test"] = true;
        io::write_json(artifact("report.json"), j);
        result.artifacts.push_back(artifact("report.json"));
        return result;
    }
    try {
        const ModelSpec& psi = result.fit.psi_hat;

        // Filter initialization from the frozen hedge ratio: first test-bar
        // residual and the in-sample residual variance.
        double mu0 = test_a.front() - psi.gamma * test_b.front();
        double var0 = 0.0;
        {
            std::vector<double> resid(train_a.size());
            double m = 0.0;
            for (std::size_t t = 0; t < train_a.size(); ++t) {
                resid[t] = train_a[t] - psi.gamma * train_b[t];
                m += resid[t];
            }
            m /= static_cast<double>(resid.size());
            for (double r : resid) var0 += (r - m) * (r - m);
            var0 /= static_cast<double>(resid.size());
            if (var0 <= 0.0) var0 = 1e-6;
        }

        CloudCache clouds(s.qmc);
        const FilterOutput filt = run_filter(psi, test_a, test_b, mu0, var0, clouds);
        io::write_filter_csv(artifact("filter.csv"), test_dates, filt);
        result.artifacts.push_back(artifact("filter.csv"));

        TradeRule rule;
        rule.u = result.grid.best_u;
        rule.l = result.grid.best_l;
        rule.strategy = s.strategy;
        rule.close_level = result.grid.stats.mean;
        const BoundarySeries bounds =
            make_boundaries(filt.filtered_mean, result.grid.stats, rule, psi);
        const SignalSeries signals = run_strategy(s.strategy, filt.filtered_mean, bounds);
        io::write_signals_csv(artifact("signals.csv"), test_dates, signals);
        result.artifacts.push_back(artifact("signals.csv"));

        // Simulation mode keeps returns in raw spread units, matching the
        // optimizer's accounting; application mode divides by the portfolio
        // notional at the start of the test window.
        const double scale = s.mode == SharpeMode::Application
                                 ? test_a.front() + std::abs(psi.gamma) * test_b.front()
                                 : 1.0;
        result.report = backtest(filt.filtered_mean, signals, scale, s.costs, s.mode);
        io::write_json(artifact("report.json"), io::report_to_json(result.report));
        io::write_report_csv(artifact("report.csv"), test_dates, result.report);
        result.artifacts.push_back(artifact("report.json"));
        result.artifacts.push_back(artifact("report.csv"));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("backtest: ") + e.what());
    }
    return result;
}

}  // namespace pairtrade
