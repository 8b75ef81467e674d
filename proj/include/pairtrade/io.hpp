// Price-data ingestion, flat key-value configuration, and the JSON/CSV
// serialization of every artifact the CLI emits.

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairtrade/estimation.hpp"
#include "pairtrade/metrics.hpp"
#include "pairtrade/mixture.hpp"
#include "pairtrade/model.hpp"
#include "pairtrade/optimizer.hpp"
#include "pairtrade/qmckf.hpp"
#include "pairtrade/strategy.hpp"

namespace pairtrade::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Price panel

struct PricePanel {
    std::vector<std::string> dates;
    std::vector<double> price_a;
    std::vector<double> price_b;
    std::vector<std::string> warnings;

    std::size_t size() const { return dates.size(); }
};

namespace detail {

struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> prices;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') { out.push_back(cur); cur.clear(); }
        else if (ch != '\r') cur += ch;
    }
    out.push_back(cur);
    return out;
}

inline double parse_price(const std::string& text, const std::string& path, std::size_t line_no) {
    double v;
    try {
        std::size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": non-numeric price '" + text + "'");
    }
    if (!(v > 0.0))
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": non-positive price '" + text + "'");
    return v;
}

inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.size() < 2) throw std::invalid_argument(path + ": no data rows");
    return rows;
}

inline PriceSeries load_price_series(const std::string& path) {
    const auto rows = read_csv_rows(path);
    PriceSeries out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2)
            throw std::invalid_argument(path + ":" + std::to_string(r + 1) + ": need date,price");
        out.dates.push_back(rows[r][0]);
        out.prices.push_back(parse_price(rows[r][1], path, r + 1));
    }
    return out;
}

inline void check_dates(const PricePanel& panel) {
    for (std::size_t i = 1; i < panel.dates.size(); ++i) {
        if (panel.dates[i] == panel.dates[i - 1])
            throw std::invalid_argument("duplicate date: " + panel.dates[i]);
        if (panel.dates[i] < panel.dates[i - 1])
            throw std::invalid_argument("dates not increasing at " + panel.dates[i]);
    }
}

}  // namespace detail

// Inner join of two (date, price) files on dates; dropped dates are reported
// as warnings.
inline PricePanel load_csv(const std::string& path_a, const std::string& path_b) {
    const auto a = detail::load_price_series(path_a);
    const auto b = detail::load_price_series(path_b);
    std::map<std::string, double> bmap;
    for (std::size_t i = 0; i < b.dates.size(); ++i) {
        if (!bmap.emplace(b.dates[i], b.prices[i]).second)
            throw std::invalid_argument(path_b + ": duplicate date " + b.dates[i]);
    }
    PricePanel panel;
    for (std::size_t i = 0; i < a.dates.size(); ++i) {
        auto it = bmap.find(a.dates[i]);
        if (it == bmap.end()) {
            panel.warnings.push_back("dropped " + a.dates[i] + " (missing in " + path_b + ")");
            continue;
        }
        panel.dates.push_back(a.dates[i]);
        panel.price_a.push_back(a.prices[i]);
        panel.price_b.push_back(it->second);
    }
    for (const auto& d : b.dates)
        if (std::find(panel.dates.begin(), panel.dates.end(), d) == panel.dates.end())
            panel.warnings.push_back("dropped " + d + " (missing in " + path_a + ")");
    if (panel.dates.empty()) throw std::invalid_argument("empty date intersection");
    detail::check_dates(panel);
    return panel;
}

// Combined file: header + rows of date,price_a,price_b.
inline PricePanel load_csv(const std::string& path) {
    const auto rows = detail::read_csv_rows(path);
    PricePanel panel;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 3)
            throw std::invalid_argument(path + ":" + std::to_string(r + 1) +
                                        ": need date,price_a,price_b");
        panel.dates.push_back(rows[r][0]);
        panel.price_a.push_back(detail::parse_price(rows[r][1], path, r + 1));
        panel.price_b.push_back(detail::parse_price(rows[r][2], path, r + 1));
    }
    detail::check_dates(panel);
    return panel;
}

// ---------------------------------------------------------------------------
// Flat key-value config

class Config {
  public:
    Config() = default;

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open config: " + path);
        Config cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos)
                    throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                                ": expected key = value");
                continue;
            }
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    std::string require(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::invalid_argument("missing config key: " + key);
        return it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stod(it->second);
    }
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stoull(it->second);
    }
    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(require(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Enum names

inline std::string to_string(DriftSpec::Family f) {
    switch (f) {
        case DriftSpec::Family::Linear: return "linear";
        case DriftSpec::Family::Quadratic: return "quadratic";
        case DriftSpec::Family::AitSahalia: return "aitsahalia";
    }
    return "";
}
inline DriftSpec::Family drift_family(const std::string& s) {
    if (s == "linear") return DriftSpec::Family::Linear;
    if (s == "quadratic") return DriftSpec::Family::Quadratic;
    if (s == "aitsahalia") return DriftSpec::Family::AitSahalia;
    throw std::invalid_argument("unknown drift family: " + s);
}

inline std::string to_string(DiffusionSpec::Family f) {
    switch (f) {
        case DiffusionSpec::Family::Constant: return "constant";
        case DiffusionSpec::Family::Arch: return "arch";
        case DiffusionSpec::Family::Aparch: return "aparch";
    }
    return "";
}
inline DiffusionSpec::Family diffusion_family(const std::string& s) {
    if (s == "constant") return DiffusionSpec::Family::Constant;
    if (s == "arch") return DiffusionSpec::Family::Arch;
    if (s == "aparch") return DiffusionSpec::Family::Aparch;
    throw std::invalid_argument("unknown diffusion family: " + s);
}

inline std::string to_string(NoiseSpec::Family f) {
    switch (f) {
        case NoiseSpec::Family::Gaussian: return "gaussian";
        case NoiseSpec::Family::StudentT: return "student_t";
        case NoiseSpec::Family::Ged: return "ged";
    }
    return "";
}
inline NoiseSpec::Family noise_family(const std::string& s) {
    if (s == "gaussian") return NoiseSpec::Family::Gaussian;
    if (s == "student_t") return NoiseSpec::Family::StudentT;
    if (s == "ged") return NoiseSpec::Family::Ged;
    throw std::invalid_argument("unknown noise family: " + s);
}

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::A: return "A";
        case Strategy::B: return "B";
        case Strategy::C: return "C";
    }
    return "";
}
inline Strategy strategy_from(const std::string& s) {
    if (s == "A" || s == "a") return Strategy::A;
    if (s == "B" || s == "b") return Strategy::B;
    if (s == "C" || s == "c") return Strategy::C;
    throw std::invalid_argument("unknown strategy: " + s);
}

inline std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::CR: return "cr";
        case Criterion::SR: return "sr";
        case Criterion::Calmar: return "calmar";
    }
    return "";
}
inline Criterion criterion_from(const std::string& s) {
    if (s == "cr" || s == "CR") return Criterion::CR;
    if (s == "sr" || s == "SR") return Criterion::SR;
    if (s == "calmar") return Criterion::Calmar;
    throw std::invalid_argument("unknown criterion: " + s);
}

// ---------------------------------------------------------------------------
// Model <-> config / JSON

inline ModelSpec model_from_config(const Config& cfg) {
    ModelSpec m;
    m.drift.family = drift_family(cfg.get("model.drift.family", "linear"));
    m.drift.coeffs = cfg.get_doubles("model.drift.coeffs");
    m.diffusion.family = diffusion_family(cfg.get("model.diffusion.family", "constant"));
    m.diffusion.coeffs = cfg.get_doubles("model.diffusion.coeffs");
    m.diffusion.lag = static_cast<unsigned>(cfg.get_uint("model.diffusion.lag", 1));
    m.diffusion.power = cfg.get_double("model.diffusion.power", 2.0);
    m.noise.family = noise_family(cfg.get("model.noise.family", "gaussian"));
    m.noise.mu = cfg.get_double("model.noise.mu", 0.0);
    m.noise.sigma = cfg.get_double("model.noise.sigma", 1.0);
    m.noise.nu = cfg.get_double("model.noise.nu", 3.0);
    m.noise.alpha = cfg.get_double("model.noise.alpha", 1.0);
    m.noise.beta = cfg.get_double("model.noise.beta", 2.0);
    m.gamma = cfg.get_double("model.gamma", 1.0);
    m.obs_var = cfg.get_double("model.obs_var", 1e-4);
    m.validate();
    return m;
}

inline json model_to_json(const ModelSpec& m) {
    json j;
    j["drift"]["family"] = to_string(m.drift.family);
    j["drift"]["coeffs"] = m.drift.coeffs;
    j["diffusion"]["family"] = to_string(m.diffusion.family);
    j["diffusion"]["coeffs"] = m.diffusion.coeffs;
    j["diffusion"]["lag"] = m.diffusion.lag;
    j["diffusion"]["power"] = m.diffusion.power;
    j["noise"]["family"] = to_string(m.noise.family);
    j["noise"]["mu"] = m.noise.mu;
    j["noise"]["sigma"] = m.noise.sigma;
    j["noise"]["nu"] = m.noise.nu;
    j["noise"]["alpha"] = m.noise.alpha;
    j["noise"]["beta"] = m.noise.beta;
    j["gamma"] = m.gamma;
    j["obs_var"] = m.obs_var;
    return j;
}

inline ModelSpec model_from_json(const json& j) {
    ModelSpec m;
    m.drift.family = drift_family(j.at("drift").at("family").get<std::string>());
    m.drift.coeffs = j.at("drift").at("coeffs").get<std::vector<double>>();
    m.diffusion.family = diffusion_family(j.at("diffusion").at("family").get<std::string>());
    m.diffusion.coeffs = j.at("diffusion").at("coeffs").get<std::vector<double>>();
    m.diffusion.lag = j.at("diffusion").at("lag").get<unsigned>();
    m.diffusion.power = j.at("diffusion").at("power").get<double>();
    m.noise.family = noise_family(j.at("noise").at("family").get<std::string>());
    m.noise.mu = j.at("noise").at("mu").get<double>();
    m.noise.sigma = j.at("noise").at("sigma").get<double>();
    m.noise.nu = j.at("noise").at("nu").get<double>();
    m.noise.alpha = j.at("noise").at("alpha").get<double>();
    m.noise.beta = j.at("noise").at("beta").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.obs_var = j.at("obs_var").get<double>();
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Artifact serialization

inline json mixture_to_json(const GaussianMixture& mix) {
    json j;
    std::vector<double> w, a, p;
    for (const auto& c : mix.components) { w.push_back(c.weight); a.push_back(c.mean); p.push_back(c.var); }
    j["weights"] = w;
    j["means"] = a;
    j["variances"] = p;
    return j;
}

inline GaussianMixture mixture_from_json(const json& j) {
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto a = j.at("means").get<std::vector<double>>();
    const auto p = j.at("variances").get<std::vector<double>>();
    if (w.size() != a.size() || w.size() != p.size())
        throw std::invalid_argument("mixture_from_json: ragged arrays");
    GaussianMixture mix;
    for (std::size_t i = 0; i < w.size(); ++i) mix.components.push_back({w[i], a[i], p[i]});
    mix.validate();
    return mix;
}

inline json fit_result_to_json(const FitResult& fit) {
    json j;
    j["model"] = model_to_json(fit.psi_hat);
    j["loglik"] = fit.loglik;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["starts_used"] = fit.starts_used;
    return j;
}

inline json grid_result_to_json(const GridResult& g) {
    json j;
    j["criterion"] = to_string(g.criterion);
    j["best_u"] = g.best_u;
    j["best_l"] = g.best_l;
    j["best_value"] = g.best_value;
    j["spread_mean"] = g.stats.mean;
    j["spread_std"] = g.stats.stddev;
    j["no_trade_warning"] = g.no_trade_warning;
    return j;
}

inline json report_to_json(const BacktestReport& r) {
    json j;
    j["cum_return"] = r.cum_return;
    j["mean_return"] = r.mean_return;
    j["std_return"] = r.std_return;
    j["ann_return"] = r.ann_return;
    j["ann_std"] = r.ann_std;
    if (r.sharpe) j["sharpe"] = *r.sharpe; else j["sharpe"] = nullptr;
    if (r.calmar) j["calmar"] = *r.calmar; else j["calmar"] = nullptr;
    j["max_drawdown"] = r.max_drawdown;
    j["pain_index"] = r.pain_index;
    j["trade_count"] = r.trade_count;
    return j;
}

// Full-precision scalar formatting for CSV artifacts.
inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << text;
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline void write_grid_csv(const std::string& path, const GridResult& g) {
    std::ostringstream os;
    os << "u,l,cr,sr,se_cr,se_sr\n";
    for (std::size_t i = 0; i < g.u_values.size(); ++i) {
        for (std::size_t j = 0; j < g.l_values.size(); ++j) {
            const std::size_t k = i * g.l_values.size() + j;
            os << fmt(g.u_values[i]) << ',' << fmt(g.l_values[j]) << ',' << fmt(g.mean_cr[k])
               << ',' << fmt(g.mean_sr[k]) << ',' << fmt(g.se_cr[k]) << ',' << fmt(g.se_sr[k])
               << '\n';
        }
    }
    write_text(path, os.str());
}

inline void write_filter_csv(const std::string& path, const std::vector<std::string>& dates,
                             const FilterOutput& f) {
    std::ostringstream os;
    os << "date,filtered_mean,filtered_var,loglik_increment\n";
    for (std::size_t t = 0; t < f.filtered_mean.size(); ++t) {
        os << (t < dates.size() ? dates[t] : std::to_string(t)) << ',' << fmt(f.filtered_mean[t])
           << ',' << fmt(f.filtered_var[t]) << ',' << fmt(f.loglik_increments[t]) << '\n';
    }
    write_text(path, os.str());
}

inline void write_signals_csv(const std::string& path, const std::vector<std::string>& dates,
                              const SignalSeries& s) {
    std::ostringstream os;
    os << "date,position\n";
    for (std::size_t t = 0; t < s.position.size(); ++t)
        os << (t < dates.size() ? dates[t] : std::to_string(t)) << ',' << s.position[t] << '\n';
    write_text(path, os.str());
}

inline void write_report_csv(const std::string& path, const std::vector<std::string>& dates,
                             const BacktestReport& r) {
    std::ostringstream os;
    os << "date,return,cum_return,drawdown\n";
    double peak = 0.0;
    for (std::size_t t = 0; t < r.returns.size(); ++t) {
        peak = std::max(peak, r.cumulative[t]);
        os << (t < dates.size() ? dates[t] : std::to_string(t)) << ',' << fmt(r.returns[t]) << ','
           << fmt(r.cumulative[t]) << ',' << fmt(peak - r.cumulative[t]) << '\n';
    }
    write_text(path, os.str());
}

}  // namespace pairtrade::io
