#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "pairtrade/io.hpp"
#include "pairtrade/pipeline.hpp"

using namespace pairtrade;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pairtrade_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path / name).string();
        std::ofstream out(p);
        out << content;
        return p;
    }
};

io::PricePanel synthetic_panel(std::size_t n, std::uint64_t seed) {
    ModelSpec m = testutil::model1();
    m.gamma = 1.98;
    m.obs_var = 0.012;
    const auto data = testutil::make_panel(m, n, seed);
    io::PricePanel panel;
    for (std::size_t t = 0; t < n; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "d%05zu", t);
        panel.dates.push_back(buf);
        panel.price_a.push_back(data.price_a[t]);
        panel.price_b.push_back(data.price_b[t]);
    }
    return panel;
}

}  // namespace

TEST_CASE("config parsing: keys, comments, overrides") {
    TempDir tmp;
    const auto p = tmp.file("run.cfg",
                            "# comment line\n"
                            "model.gamma = 1.98\n"
                            "model.drift.coeffs = 0, 0.959  # inline comment\n"
                            "strategy = C\n"
                            "\n");
    auto cfg = io::Config::from_file(p);
    CHECK(cfg.get_double("model.gamma", 0.0) == 1.98);
    CHECK(cfg.get_doubles("model.drift.coeffs") == std::vector<double>{0.0, 0.959});
    CHECK(cfg.get("strategy", "A") == "C");
    CHECK(cfg.get("missing", "fallback") == "fallback");
    CHECK_THROWS_AS(cfg.require("missing"), std::invalid_argument);
    cfg.set("strategy", "B");
    CHECK(cfg.get("strategy", "A") == "B");

    const auto bad = tmp.file("bad.cfg", "just some words\n");
    CHECK_THROWS_AS(io::Config::from_file(bad), std::invalid_argument);
}

TEST_CASE("model serializes through config and json round trips") {
    TempDir tmp;
    const auto p = tmp.file("model.cfg",
                            "model.drift.family = linear\n"
                            "model.drift.coeffs = 0, 0.9590\n"
                            "model.diffusion.family = arch\n"
                            "model.diffusion.coeffs = 0.00089, 0.08\n"
                            "model.noise.family = student_t\n"
                            "model.noise.nu = 3\n"
                            "model.gamma = 1.98\n"
                            "model.obs_var = 0.012\n");
    const auto m = io::model_from_config(io::Config::from_file(p));
    CHECK(m.diffusion.family == DiffusionSpec::Family::Arch);
    CHECK(m.noise.family == NoiseSpec::Family::StudentT);

    const auto j = io::model_to_json(m);
    const auto back = io::model_from_json(j);
    CHECK(back.drift.coeffs == m.drift.coeffs);
    CHECK(back.diffusion.coeffs == m.diffusion.coeffs);
    CHECK(back.gamma == m.gamma);
    CHECK(back.obs_var == m.obs_var);
    CHECK(back.noise.nu == m.noise.nu);
}

TEST_CASE("mixture json round trip") {
    const auto mix = fit_mixture(NoiseSpec::student_t(3.0), 3);
    const auto back = io::mixture_from_json(io::mixture_to_json(mix));
    REQUIRE(back.components.size() == mix.components.size());
    for (std::size_t i = 0; i < mix.components.size(); ++i) {
        CHECK(back.components[i].weight == mix.components[i].weight);
        CHECK(back.components[i].mean == mix.components[i].mean);
        CHECK(back.components[i].var == mix.components[i].var);
    }
}

TEST_CASE("two-file join keeps the date intersection and warns on drops") {
    TempDir tmp;
    const auto a = tmp.file("a.csv", "date,price\n2020-01-01,10\n2020-01-02,11\n2020-01-03,12\n"
                                     "2020-01-04,13\n2020-01-05,14\n");
    const auto b = tmp.file("b.csv", "date,price\n2020-01-01,5\n2020-01-02,6\n2020-01-03,7\n"
                                     "2020-01-04,8\n2020-01-05,9\n");
    const auto panel = io::load_csv(a, b);
    CHECK(panel.size() == 5);
    CHECK(panel.warnings.empty());

    const auto b4 = tmp.file("b4.csv", "date,price\n2020-01-01,5\n2020-01-02,6\n"
                                       "2020-01-04,8\n2020-01-05,9\n");
    const auto joined = io::load_csv(a, b4);
    CHECK(joined.size() == 4);
    REQUIRE(joined.warnings.size() == 1);
    CHECK(joined.warnings[0].find("2020-01-03") != std::string::npos);
}

TEST_CASE("price validation points at the offending line") {
    TempDir tmp;
    const auto a = tmp.file("a.csv", "date,price\n2020-01-01,10\n2020-01-02,0\n");
    const auto b = tmp.file("b.csv", "date,price\n2020-01-01,5\n2020-01-02,6\n");
    try {
        io::load_csv(a, b);
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }

    const auto txt = tmp.file("c.csv", "date,price\n2020-01-01,abc\n2020-01-02,6\n");
    CHECK_THROWS_AS(io::load_csv(txt, b), std::invalid_argument);

    const auto dup = tmp.file("d.csv", "date,price\n2020-01-01,5\n2020-01-01,6\n");
    CHECK_THROWS_AS(io::load_csv(a, dup), std::invalid_argument);

    const auto disjoint = tmp.file("e.csv", "date,price\n1999-01-01,5\n");
    CHECK_THROWS_AS(io::load_csv(a, disjoint), std::invalid_argument);
}

TEST_CASE("combined csv loads date,a,b") {
    TempDir tmp;
    const auto p = tmp.file("panel.csv", "date,price_a,price_b\n2020-01-01,10,5\n2020-01-02,11,6\n");
    const auto panel = io::load_csv(p);
    CHECK(panel.size() == 2);
    CHECK(panel.price_a[1] == 11.0);
    CHECK(panel.price_b[0] == 5.0);
}

namespace {

PipelineSettings fast_settings() {
    io::Config cfg;
    cfg.set("model.drift.coeffs", "0, 0.9572");
    cfg.set("model.diffusion.coeffs", "0.029");
    cfg.set("model.gamma", "1.98");
    cfg.set("model.obs_var", "0.012");
    cfg.set("grid.u_min", "0.5");
    cfg.set("grid.u_max", "1.0");
    cfg.set("grid.u_step", "0.25");
    cfg.set("grid.l_min", "-1.0");
    cfg.set("grid.l_max", "-0.5");
    cfg.set("grid.l_step", "0.25");
    cfg.set("grid.n_paths", "40");
    cfg.set("grid.horizon", "150");
    cfg.set("fit.restarts", "1");
    cfg.set("fit.max_iterations", "40");
    cfg.set("fit.g_opt", "16");
    cfg.set("fit.g_final", "32");
    cfg.set("qmc.g", "32");
    cfg.set("cost.per_asset", "0.001");
    return settings_from_config(cfg);
}

}  // namespace

TEST_CASE("pipeline produces all artifacts on synthetic data") {
    TempDir tmp;
    const auto panel = synthetic_panel(400, 12);
    auto s = fast_settings();
    s.train_end = panel.dates[299];
    const auto result = run_pipeline(s, panel, (tmp.path / "out").string());
    CHECK_FALSE(result.zero_length_test);
    for (const char* name : {"fit.json", "grid.csv", "grid.json", "filter.csv", "signals.csv",
                             "report.json", "report.csv"})
        CHECK(fs::exists(tmp.path / "out" / name));
    CHECK(result.report.returns.size() == 100);
}

TEST_CASE("pipeline with the split at the last date flags an empty test window") {
    TempDir tmp;
    const auto panel = synthetic_panel(250, 13);
    auto s = fast_settings();
    s.train_end = panel.dates.back();
    const auto result = run_pipeline(s, panel, (tmp.path / "out").string());
    CHECK(result.zero_length_test);
    CHECK(fs::exists(tmp.path / "out" / "grid.json"));
    const auto j = io::json::parse(std::ifstream(tmp.path / "out" / "report.json"));
    CHECK(j.at("zero_length_test").get<bool>());
}

TEST_CASE("pipeline halts in the fit stage on degenerate prices") {
    TempDir tmp;
    io::PricePanel panel;
    for (int t = 0; t < 100; ++t) {
        panel.dates.push_back("d" + std::to_string(100 + t));
        panel.price_a.push_back(10.0);
        panel.price_b.push_back(5.0);
    }
    auto s = fast_settings();
    try {
        run_pipeline(s, panel, (tmp.path / "out").string());
        FAIL("expected a fit-stage error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).rfind("fit:", 0) == 0);
    }
}
