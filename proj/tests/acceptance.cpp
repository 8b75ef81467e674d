// Acceptance suite: one pass/fail line per criterion. argv[1] is the path to
// the built command-line binary (used by the determinism criterion); any
// further arguments select a subset of criteria by number.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "pairtrade/estimation.hpp"
#include "pairtrade/io.hpp"
#include "pairtrade/metrics.hpp"
#include "pairtrade/mixture.hpp"
#include "pairtrade/model.hpp"
#include "pairtrade/optimizer.hpp"
#include "pairtrade/qmckf.hpp"
#include "pairtrade/strategy.hpp"

using namespace pairtrade;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ModelSpec reference_truth() {
    ModelSpec m = testutil::model1();
    m.drift.coeffs = {0.0, 0.9572};
    m.diffusion.coeffs = {0.029};
    m.gamma = 1.98;
    m.obs_var = 0.012;
    return m;
}

// ---------------------------------------------------------------------------
// 1. Linear-Gaussian equivalence with an exact scalar Kalman recursion.
bool criterion1(std::ostringstream& detail) {
    const auto start = std::chrono::steady_clock::now();
    const ModelSpec m = reference_truth();
    const auto panel = testutil::make_panel(m, 500, 101);

    const double a = m.drift.coeffs[1];
    const double var0 = m.diffusion.coeffs[0] * m.diffusion.coeffs[0] / (1.0 - a * a);
    const auto oracle = testutil::scalar_kalman(m.drift.coeffs[0], a, m.diffusion.coeffs[0],
                                                m.obs_var, m.gamma, panel.price_a, panel.price_b,
                                                0.0, var0);

    auto max_rel = [&](std::size_t G) {
        QmcConfig cfg;
        cfg.G = G;
        CloudCache clouds(cfg);
        const auto out = run_filter(m, panel.price_a, panel.price_b, 0.0, var0, clouds);
        double worst = 0.0;
        for (std::size_t t = 0; t < oracle.mean.size(); ++t) {
            worst = std::max(worst, std::abs(out.filtered_mean[t] - oracle.mean[t]) /
                                        (std::abs(oracle.mean[t]) + 1e-12));
            worst = std::max(worst, std::abs(out.filtered_var[t] - oracle.var[t]) /
                                        (std::abs(oracle.var[t]) + 1e-12));
        }
        return worst;
    };

    const double err128 = max_rel(128);
    const double err8192 = max_rel(8192);
    const double elapsed = seconds_since(start);
    detail << "rel err " << err128 << " @G=128, " << err8192 << " @G=8192, " << elapsed << " s";
    return err128 < 1e-3 && err8192 < 1e-6 && elapsed < 10.0;
}

// ---------------------------------------------------------------------------
// 2. Halton and Box-Muller exactness.
bool criterion2(std::ostringstream& detail) {
    const double expected2[7] = {1.0 / 2, 1.0 / 4, 3.0 / 4, 1.0 / 8, 5.0 / 8, 3.0 / 8, 7.0 / 8};
    bool ok = true;
    for (int i = 0; i < 7; ++i) ok = ok && qmc::halton(2, i + 1) == expected2[i];

    qmc::HaltonStream stream;
    stream.skip = 0;
    const auto cloud = qmc::gaussian_qmc(1, 0.0, 1.0, stream);
    const double expected = std::sqrt(2.0 * std::log(2.0)) * std::cos(2.0 * M_PI / 3.0);
    const double err = std::abs(cloud[0] - expected);
    detail << "base-2 prefix " << (ok ? "exact" : "WRONG") << ", first draw err " << err;
    return ok && err < 1e-12;
}

// ---------------------------------------------------------------------------
// 3. Mixture approximation quality.
bool criterion3(std::ostringstream& detail) {
    const NoiseSpec t3 = NoiseSpec::student_t(3.0);
    const double kl1 = kl_divergence(t3, fit_mixture(t3, 1));  // best single Gaussian
    const double kl3 = kl_divergence(t3, fit_mixture(t3, 3));
    const double self = kl_divergence(NoiseSpec::gaussian(), fit_mixture(NoiseSpec::gaussian(), 3));
    detail << "KL m=1 " << kl1 << ", m=3 " << kl3 << ", Gaussian self " << self;
    return kl3 < kl1 && self < 1e-8;
}

// ---------------------------------------------------------------------------
// 4. Parameter recovery on simulated data.
bool criterion4(std::ostringstream& detail) {
    const auto start = std::chrono::steady_clock::now();
    const ModelSpec truth = reference_truth();

    ModelSpec tmpl = truth;
    tmpl.drift.coeffs = {0.0, 0.5};
    tmpl.diffusion.coeffs = {0.05};
    tmpl.obs_var = 0.02;
    const std::vector<FreeParam> free{
        {FreeParam::Kind::Gamma, 0, {-10.0, 10.0}},
        {FreeParam::Kind::Drift, 1, {-0.999, 0.999}},
        {FreeParam::Kind::Diffusion, 0, {1e-10, 10.0}},
        {FreeParam::Kind::ObsVar, 0, {1e-10, 10.0}},
    };

    int hits = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto panel = testutil::make_panel(truth, 1800, 1000 + rep);
        FitConfig cfg;
        cfg.restarts = 2;
        cfg.G_opt = 64;
        cfg.G_final = 64;
        cfg.max_iterations = 400;
        cfg.seed = static_cast<std::uint64_t>(rep + 1);
        const auto fit = fit_mle(tmpl, free, panel.price_a, panel.price_b, cfg);
        const bool hit = std::abs(fit.psi_hat.drift.coeffs[1] - 0.9572) <= 0.03 &&
                         std::abs(fit.psi_hat.gamma - 1.98) <= 0.05;
        if (hit) ++hits;
    }
    const double elapsed = seconds_since(start);
    detail << hits << "/20 recoveries, " << elapsed << " s";
    return hits >= 18 && elapsed < 600.0;
}

// ---------------------------------------------------------------------------
// 5/6. Boundary-search reproductions at desk scale.
struct RuleSummary {
    double cr_best = 0.0, cr_u = 0.0;
    double sr_best = 0.0, sr_se = 0.0;
};

RuleSummary summarize(const ModelSpec& model, Strategy strategy) {
    GridSpec grid = GridSpec::defaults();
    grid.n_paths = 2000;
    grid.horizon = 1000;
    grid.criterion = Criterion::CR;
    const CostModel costs{0.001, 0.0};  // 40 bp per round trip, rf = 0
    const auto r = optimize_rule(model, strategy, grid, costs, 7, 1);

    RuleSummary out;
    out.cr_best = r.best_value;
    out.cr_u = r.best_u;
    std::size_t best_k = 0;
    for (std::size_t k = 1; k < r.mean_sr.size(); ++k)
        if (r.mean_sr[k] > r.mean_sr[best_k]) best_k = k;
    out.sr_best = r.mean_sr[best_k];
    out.sr_se = r.se_sr[best_k];
    return out;
}

bool criterion5(std::ostringstream& detail) {
    const auto start = std::chrono::steady_clock::now();
    const ModelSpec m = testutil::model1();
    const auto A = summarize(m, Strategy::A);
    const auto B = summarize(m, Strategy::B);
    const auto C = summarize(m, Strategy::C);
    const double elapsed = seconds_since(start);

    const bool u_ok = A.cr_u >= 0.5 && A.cr_u <= 0.9;
    const bool cr_ok = A.cr_best >= 0.75 * 0.2508 && A.cr_best <= 1.25 * 0.2508;
    const bool sr_ok = C.sr_best >= A.sr_best - A.sr_se && C.sr_best >= B.sr_best - B.sr_se;
    detail << "A u* " << A.cr_u << " CR " << A.cr_best << " (target 0.2508 +/-25%), SR opt A "
           << A.sr_best << " B " << B.sr_best << " C " << C.sr_best << " (se A " << A.sr_se
           << ", B " << B.sr_se << "), " << elapsed << " s";
    return u_ok && cr_ok && sr_ok && elapsed < 900.0;
}

bool criterion6(std::ostringstream& detail) {
    const ModelSpec m = testutil::model3();
    const auto A = summarize(m, Strategy::A);
    const auto B = summarize(m, Strategy::B);
    const auto C = summarize(m, Strategy::C);

    const bool cr_ok = C.cr_best > A.cr_best && C.cr_best > B.cr_best;
    // C's SR optimum at least twice both, with a 3-standard-error margin on
    // the difference C - 2X.
    auto sr_dominates = [&](const RuleSummary& x) {
        const double margin = 3.0 * std::sqrt(C.sr_se * C.sr_se + 4.0 * x.sr_se * x.sr_se);
        return C.sr_best - 2.0 * x.sr_best >= margin;
    };
    const bool sr_ok = sr_dominates(A) && sr_dominates(B);
    detail << "CR opt A " << A.cr_best << " B " << B.cr_best << " C " << C.cr_best << "; SR opt A "
           << A.sr_best << " B " << B.sr_best << " C " << C.sr_best;
    return cr_ok && sr_ok;
}

// ---------------------------------------------------------------------------
// 7. Strategy automata: hand replays plus the band-safety invariant.
bool criterion7(std::ostringstream& detail) {
    auto bounds = [](std::size_t n) {
        BoundarySeries b;
        b.center = 0.0;
        b.upper.assign(n, 1.0);
        b.lower.assign(n, -1.0);
        return b;
    };
    bool replays = true;
    replays = replays && signals_A({1.2, 0.5, -0.1}, bounds(3)).position == std::vector<int>{1, 1, 0};
    replays = replays && signals_A({-1.5, 0.2}, bounds(2)).position == std::vector<int>{-1, 0};
    replays = replays && signals_B({0.0, 1.1, 0.2, -1.1, 0.0}, bounds(5)).position ==
                             std::vector<int>{0, 1, 1, -1, -1};
    replays = replays && signals_C({1.4, 0.9, 0.3, -0.05}, bounds(4)).position ==
                             std::vector<int>{0, 1, 1, 0};
    replays = replays && signals_C({1.4, 0.9, 1.2}, bounds(3)).position == std::vector<int>{0, 1, 0};

    const auto path = simulate_spread(testutil::model3(), 100000, 77);
    TradeRule rule;
    rule.u = 0.8;
    rule.l = -0.8;
    rule.strategy = Strategy::C;
    const SpreadStats stats{0.0, 0.03};
    const auto b = make_boundaries(path.values, stats, rule, testutil::model3());
    const auto s = signals_C(path.values, b);
    std::size_t violations = 0;
    for (std::size_t t = 1; t < s.position.size(); ++t)
        if (s.position[t] != 0 && s.position[t - 1] == s.position[t] &&
            (path.values[t] < b.lower[t] || path.values[t] > b.upper[t]))
            ++violations;
    detail << "replays " << (replays ? "exact" : "WRONG") << ", band violations " << violations
           << "/100000";
    return replays && violations == 0;
}

// ---------------------------------------------------------------------------
// 8. Closed-form first-passage mode against numerical maximization.
bool criterion8(std::ostringstream& detail) {
    double worst = 0.0;
    for (double z : {0.5, 1.0, std::sqrt(3.0), 2.0, 5.0}) {
        double best_t = 1e-4, best_f = 0.0;
        for (double t = 1e-4; t < 10.0; t += 1e-4) {
            const double f = first_passage_density(z, t);
            if (f > best_f) { best_f = f; best_t = t; }
        }
        double lo = best_t - 2e-4, hi = best_t + 2e-4;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        while (hi - lo > 1e-10) {
            const double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
            if (first_passage_density(z, m1) < first_passage_density(z, m2)) lo = m1;
            else hi = m2;
        }
        worst = std::max(worst, std::abs(first_passage_tstar(z) - 0.5 * (lo + hi)));
    }
    detail << "max |t* - argmax| " << worst;
    return worst < 1e-6;
}

// ---------------------------------------------------------------------------
// 9. Bit-level determinism of the pipeline across reruns and worker counts.
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion9(std::ostringstream& detail, const std::string& cli) {
    if (cli.empty()) {
        detail << "no CLI path given";
        return false;
    }
    const fs::path tmp = fs::temp_directory_path() / "pairtrade_acceptance_9";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    // Synthetic panel written at full precision.
    const ModelSpec truth = reference_truth();
    const auto data = testutil::make_panel(truth, 300, 55);
    {
        std::ofstream out(tmp / "panel.csv");
        out << "date,price_a,price_b\n";
        for (std::size_t t = 0; t < 300; ++t) {
            char date[16];
            std::snprintf(date, sizeof date, "d%05zu", t);
            out << date << ',' << io::fmt(data.price_a[t]) << ',' << io::fmt(data.price_b[t])
                << '\n';
        }
    }
    {
        std::ofstream out(tmp / "run.cfg");
        out << "model.drift.coeffs = 0, 0.5\n"
               "model.diffusion.coeffs = 0.05\n"
               "model.gamma = 1.9\n"
               "model.obs_var = 0.02\n"
               "grid.u_min = 0.5\ngrid.u_max = 1.0\ngrid.u_step = 0.25\n"
               "grid.l_min = -1.0\ngrid.l_max = -0.5\ngrid.l_step = 0.25\n"
               "grid.n_paths = 64\ngrid.horizon = 200\n"
               "fit.restarts = 1\nfit.max_iterations = 60\nfit.g_opt = 32\nfit.g_final = 32\n"
               "qmc.g = 64\ncost.per_asset = 0.001\nseed = 5\n"
               "split.train_end = d00199\n";
    }

    auto run = [&](const std::string& out_dir, unsigned workers) {
        std::ostringstream cmd;
        cmd << '"' << cli << "\" pipeline --config \"" << (tmp / "run.cfg").string()
            << "\" --data \"" << (tmp / "panel.csv").string() << "\" --out-dir \""
            << (tmp / out_dir).string() << "\" --set workers=" << workers << " > /dev/null";
        return std::system(cmd.str().c_str()) == 0;
    };
    if (!run("out1", 1) || !run("out2", 8) || !run("out3", 1)) {
        detail << "pipeline invocation failed";
        return false;
    }

    bool identical = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(tmp / "out1")) {
        const auto name = entry.path().filename();
        ++files;
        if (!fs::exists(tmp / "out2" / name) || !fs::exists(tmp / "out3" / name) ||
            slurp(entry.path()) != slurp(tmp / "out2" / name) ||
            slurp(entry.path()) != slurp(tmp / "out3" / name))
            identical = false;
    }
    detail << files << " artifacts, workers 1 vs 8 vs 1 "
           << (identical ? "byte-identical" : "DIFFER");
    fs::remove_all(tmp);
    return identical && files >= 6;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    std::set<int> selected;
    for (int i = 2; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    auto report = [&](int n, auto&& fn) {
        if (!selected.empty() && !selected.count(n)) return;
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = fn(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << " (" << detail.str()
                  << ")" << std::endl;
        if (!ok) ++failures;
    };

    report(1, [](std::ostringstream& d) { return criterion1(d); });
    report(2, [](std::ostringstream& d) { return criterion2(d); });
    report(3, [](std::ostringstream& d) { return criterion3(d); });
    report(4, [](std::ostringstream& d) { return criterion4(d); });
    report(5, [](std::ostringstream& d) { return criterion5(d); });
    report(6, [](std::ostringstream& d) { return criterion6(d); });
    report(7, [](std::ostringstream& d) { return criterion7(d); });
    report(8, [](std::ostringstream& d) { return criterion8(d); });
    report(9, [&](std::ostringstream& d) { return criterion9(d, cli); });

    if (failures > 0) std::cout << failures << " criterion(s) failed" << std::endl;
    return failures == 0 ? 0 : 1;
}
