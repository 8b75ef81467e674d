// Command-line surface: fit / filter / simulate / optimize-rule / backtest /
// pipeline. Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pairtrade/estimation.hpp"
#include "pairtrade/io.hpp"
#include "pairtrade/metrics.hpp"
#include "pairtrade/model.hpp"
#include "pairtrade/optimizer.hpp"
#include "pairtrade/pipeline.hpp"
#include "pairtrade/qmckf.hpp"
#include "pairtrade/strategy.hpp"

namespace {

using pairtrade::io::Config;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string data;        // combined csv
    std::string data_a, data_b;
};

Config load_config(const CommonArgs& args) {
    Config cfg = args.config_path.empty() ? Config{} : Config::from_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

pairtrade::io::PricePanel load_panel(const CommonArgs& args) {
    if (!args.data.empty()) return pairtrade::io::load_csv(args.data);
    if (!args.data_a.empty() && !args.data_b.empty())
        return pairtrade::io::load_csv(args.data_a, args.data_b);
    throw std::invalid_argument("need --data or both --data-a and --data-b");
}

void print_warnings(const pairtrade::io::PricePanel& panel) {
    for (const auto& w : panel.warnings) std::cerr << "warning: " << w << "\n";
}

pairtrade::ModelSpec model_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model json: " + path);
    pairtrade::io::json j;
    in >> j;
    if (j.contains("model")) j = j.at("model");  // accept fit.json directly
    return pairtrade::io::model_from_json(j);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_data) {
    cmd->add_option("--config", args.config_path, "flat key-value config file");
    cmd->add_option("--set", args.overrides, "override config key (key=value)");
    if (with_data) {
        cmd->add_option("--data", args.data, "combined csv: date,price_a,price_b");
        cmd->add_option("--data-a", args.data_a, "csv for asset A: date,price");
        cmd->add_option("--data-b", args.data_b, "csv for asset B: date,price");
    }
}

int run(int argc, char** argv) {
    CLI::App app{"pairs-trading research engine"};
    app.require_subcommand(1);

    // ---- fit
    CommonArgs fit_args;
    std::string fit_out = "fit.json";
    auto* fit_cmd = app.add_subcommand("fit", "estimate model parameters by MLE");
    add_common(fit_cmd, fit_args, true);
    fit_cmd->add_option("--out", fit_out, "output json path");

    // ---- filter
    CommonArgs filter_args;
    std::string filter_model, filter_out = "filter.csv";
    auto* filter_cmd = app.add_subcommand("filter", "run the filter over a price panel");
    add_common(filter_cmd, filter_args, true);
    filter_cmd->add_option("--model", filter_model, "model json (fit output) instead of config");
    filter_cmd->add_option("--out", filter_out, "output csv path");

    // ---- simulate
    CommonArgs sim_args;
    std::string sim_out = "paths.csv";
    std::uint64_t sim_paths = 1;
    std::uint64_t sim_horizon = 1000;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate spread paths from the model");
    add_common(sim_cmd, sim_args, false);
    sim_cmd->add_option("--paths", sim_paths, "number of paths");
    sim_cmd->add_option("--horizon", sim_horizon, "steps per path");
    sim_cmd->add_option("--out", sim_out, "output csv path");

    // ---- optimize-rule
    CommonArgs opt_args;
    std::string opt_model, opt_prefix = "grid";
    auto* opt_cmd = app.add_subcommand("optimize-rule", "grid search over trade boundaries");
    add_common(opt_cmd, opt_args, false);
    opt_cmd->add_option("--model", opt_model, "model json (fit output) instead of config");
    opt_cmd->add_option("--out-prefix", opt_prefix, "writes <prefix>.csv and <prefix>.json");

    // ---- backtest
    CommonArgs bt_args;
    std::string bt_model, bt_grid, bt_prefix = "report";
    auto* bt_cmd = app.add_subcommand("backtest", "filter + signals + accounting on a panel");
    add_common(bt_cmd, bt_args, true);
    bt_cmd->add_option("--model", bt_model, "model json (fit output) instead of config");
    bt_cmd->add_option("--grid", bt_grid, "grid json supplying (u*, l*) and spread stats");
    bt_cmd->add_option("--out-prefix", bt_prefix, "writes <prefix>.json/.csv and signals csv");

    // ---- pipeline
    CommonArgs pipe_args;
    std::string pipe_out = "out";
    auto* pipe_cmd = app.add_subcommand("pipeline", "fit -> optimize-rule -> backtest");
    add_common(pipe_cmd, pipe_args, true);
    pipe_cmd->add_option("--out-dir", pipe_out, "artifact directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (fit_cmd->parsed()) {
        const Config cfg = load_config(fit_args);
        const auto panel = load_panel(fit_args);
        print_warnings(panel);
        const auto s = pairtrade::settings_from_config(cfg);
        const auto fit = pairtrade::fit_mle(s.model, s.free_params, panel.price_a, panel.price_b, s.fit);
        pairtrade::io::write_json(fit_out, pairtrade::io::fit_result_to_json(fit));
        std::cout << "loglik " << fit.loglik << (fit.converged ? "" : " (not converged)") << "\n";
        return 0;
    }

    if (filter_cmd->parsed()) {
        const Config cfg = load_config(filter_args);
        const auto panel = load_panel(filter_args);
        print_warnings(panel);
        const auto s = pairtrade::settings_from_config(cfg);
        const pairtrade::ModelSpec model =
            filter_model.empty() ? s.model : model_from_json_file(filter_model);
        const auto init = pairtrade::ols_init(panel.price_a, panel.price_b);
        double var0 = 0.0, m = 0.0;
        for (double r : init.residuals) m += r;
        m /= static_cast<double>(init.residuals.size());
        for (double r : init.residuals) var0 += (r - m) * (r - m);
        var0 /= static_cast<double>(init.residuals.size());
        pairtrade::CloudCache clouds(s.qmc);
        const auto out = pairtrade::run_filter(model, panel.price_a, panel.price_b,
                                               init.residuals.front(), std::max(var0, 1e-12), clouds);
        pairtrade::io::write_filter_csv(filter_out, panel.dates, out);
        std::cout << "loglik " << out.total_loglik << "\n";
        return 0;
    }

    if (sim_cmd->parsed()) {
        const Config cfg = load_config(sim_args);
        const auto s = pairtrade::settings_from_config(cfg);
        std::ostringstream os;
        os << "path,t,x\n";
        for (std::uint64_t n = 0; n < sim_paths; ++n) {
            const auto path = pairtrade::simulate_spread(
                s.model, sim_horizon, pairtrade::rng::derive_seed(s.seed, "path", n));
            for (std::size_t t = 0; t < path.values.size(); ++t)
                os << n << ',' << t << ',' << pairtrade::io::fmt(path.values[t]) << '\n';
        }
        pairtrade::io::write_text(sim_out, os.str());
        return 0;
    }

    if (opt_cmd->parsed()) {
        const Config cfg = load_config(opt_args);
        const auto s = pairtrade::settings_from_config(cfg);
        const pairtrade::ModelSpec model =
            opt_model.empty() ? s.model : model_from_json_file(opt_model);
        const auto grid = pairtrade::optimize_rule(model, s.strategy, s.grid, s.costs,
                                                   pairtrade::rng::derive_seed(s.seed, "grid", 0),
                                                   s.workers);
        pairtrade::io::write_grid_csv(opt_prefix + ".csv", grid);
        pairtrade::io::write_json(opt_prefix + ".json", pairtrade::io::grid_result_to_json(grid));
        if (grid.no_trade_warning) std::cerr << "warning: no trades in any grid cell\n";
        std::cout << "best u " << grid.best_u << " l " << grid.best_l << " value "
                  << grid.best_value << "\n";
        return 0;
    }

    if (bt_cmd->parsed()) {
        const Config cfg = load_config(bt_args);
        const auto panel = load_panel(bt_args);
        print_warnings(panel);
        const auto s = pairtrade::settings_from_config(cfg);
        const pairtrade::ModelSpec model =
            bt_model.empty() ? s.model : model_from_json_file(bt_model);

        pairtrade::TradeRule rule;
        rule.strategy = s.strategy;
        pairtrade::SpreadStats stats;
        if (!bt_grid.empty()) {
            std::ifstream in(bt_grid);
            if (!in) throw std::invalid_argument("cannot open grid json: " + bt_grid);
            pairtrade::io::json j;
            in >> j;
            rule.u = j.at("best_u").get<double>();
            rule.l = j.at("best_l").get<double>();
            stats.mean = j.at("spread_mean").get<double>();
            stats.stddev = j.at("spread_std").get<double>();
        } else {
            rule.u = cfg.get_double("rule.u", 1.0);
            rule.l = cfg.get_double("rule.l", -1.0);
            const auto closed = pairtrade::stationary_stats_closed_form(model);
            if (!closed)
                throw std::invalid_argument(
                    "backtest: no --grid and no closed-form spread stats for this model");
            stats = *closed;
        }
        rule.close_level = stats.mean;

        const auto init = pairtrade::ols_init(panel.price_a, panel.price_b);
        double var0 = 0.0, m = 0.0;
        for (double r : init.residuals) m += r;
        m /= static_cast<double>(init.residuals.size());
        for (double r : init.residuals) var0 += (r - m) * (r - m);
        var0 /= static_cast<double>(init.residuals.size());
        pairtrade::CloudCache clouds(s.qmc);
        const auto filt = pairtrade::run_filter(model, panel.price_a, panel.price_b,
                                                init.residuals.front(), std::max(var0, 1e-12), clouds);
        const auto bounds = pairtrade::make_boundaries(filt.filtered_mean, stats, rule, model);
        const auto signals = pairtrade::run_strategy(s.strategy, filt.filtered_mean, bounds);
        const double scale = s.mode == pairtrade::SharpeMode::Application
                                 ? panel.price_a.front() + std::abs(model.gamma) * panel.price_b.front()
                                 : 1.0;
        const auto report = pairtrade::backtest(filt.filtered_mean, signals, scale, s.costs, s.mode);
        pairtrade::io::write_json(bt_prefix + ".json", pairtrade::io::report_to_json(report));
        pairtrade::io::write_report_csv(bt_prefix + ".csv", panel.dates, report);
        pairtrade::io::write_signals_csv(bt_prefix + "_signals.csv", panel.dates, signals);
        std::cout << "cum_return " << report.cum_return << " trades " << report.trade_count << "\n";
        return 0;
    }

    if (pipe_cmd->parsed()) {
        const Config cfg = load_config(pipe_args);
        const auto panel = load_panel(pipe_args);
        print_warnings(panel);
        const auto s = pairtrade::settings_from_config(cfg);
        const auto result = pairtrade::run_pipeline(s, panel, pipe_out);
        for (const auto& a : result.artifacts) std::cout << a << "\n";
        if (result.zero_length_test) std::cerr << "warning: zero-length out-of-sample window\n";
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
