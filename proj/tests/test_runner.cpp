#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vvmfg/config.hpp"
#include "vvmfg/csv.hpp"
#include "vvmfg/runner.hpp"

using namespace vvmfg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string exact_sweep_config(const std::string& dir) {
    return R"({
      "domain": {"kind": "truncated", "x_min": -5.0, "x_max": 5.0, "n": 64},
      "time": {"T": 1.0, "nt": 64},
      "model": {"name": "quadratic_mean_field"},
      "g": {"name": "zero"},
      "m0": {"kind": "gaussian", "params": {"mean": 0.0, "variance": 0.04}},
      "betas": [0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
      "mode": "exact_oracle",
      "output": {"dir": ")" + dir + R"("}
    })";
}

}  // namespace

TEST_CASE("config: schema validation rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("{}"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "spherical", "x_min": 0, "x_max": 1, "n": 8},
                                     "time": {"T": 1, "nt": 8},
                                     "model": {"name": "quadratic_mean_field"},
                                     "m0": {"kind": "gaussian", "params": {"mean": 0, "variance": 1}}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "torus", "x_min": 0, "x_max": 1, "n": 8},
                                     "time": {"T": 1, "nt": 8},
                                     "model": {"name": "quadratic_mean_field"},
                                     "m0": {"kind": "gaussian", "params": {"mean": 0.5, "variance": 1}},
                                     "typo_key": 3})"),
                    ConfigError);

    const ExperimentConfig cfg = parse_config(R"({
        "domain": {"kind": "torus", "x_min": -0.5, "x_max": 0.5, "n": 128},
        "time": {"T": 0.25, "nt": 32},
        "model": {"name": "local_separable_62"},
        "m0": {"kind": "gaussian", "params": {"mean": 0.0, "variance": 0.01}},
        "betas": [0.1, 0.2],
        "solver": {"coupler": "fictitious_play", "tol": 1e-6, "max_iter": 100, "damping": 1.0, "R": 5.0},
        "workers": 2
    })");
    CHECK(cfg.n == 128);
    CHECK(cfg.damping.kind == Damping::Kind::Fixed);
    CHECK(cfg.betas.size() == 2);
    CHECK(cfg.make_grid().is_torus());
    CHECK_FALSE(cfg.hash.empty());
}

TEST_CASE("config hash is stable under reformatting but not value changes") {
    const std::string a = R"({"domain": {"kind": "torus", "x_min": 0, "x_max": 1, "n": 8}})";
    const std::string b = R"({ "domain":{"n":8,"kind":"torus","x_max":1,"x_min":0} })";
    CHECK(hash_of_json_text(a) == hash_of_json_text(b));
    const std::string c = R"({"domain": {"kind": "torus", "x_min": 0, "x_max": 1, "n": 16}})";
    CHECK(hash_of_json_text(a) != hash_of_json_text(c));
}

TEST_CASE("fmt17 round-trips doubles exactly") {
    for (double v : {1.0 / 3.0, 2.718281828459045, -1.2345678901234567e-89, 0.0}) {
        CHECK(std::stod(fmt17(v)) == v);
    }
}

TEST_CASE("exact-oracle sweep: slope 2 to 1e-9 and schema-exact CSV headers") {
    const std::string dir = (fs::temp_directory_path() / "vvmfg_exact_sweep").string();
    fs::remove_all(dir);
    const ExperimentConfig cfg = parse_config(exact_sweep_config(dir));
    const SweepReport report = run_sweep_beta(cfg);

    REQUIRE(report.have_fits);
    CHECK(std::abs(report.fit_all.slope - 2.0) <= 1e-9);
    CHECK(report.fit_all.r_squared >= 1.0 - 1e-12);

    const std::string sweep = slurp(report.sweep_csv);
    CHECK(sweep.substr(0, sweep.find('\n')) ==
          "beta,sup_u_diff,sup_grad_diff,w1_sup_t,iterations,status,config_hash");
    const std::string rates = slurp(report.rates_csv);
    CHECK(rates.substr(0, rates.find('\n')) ==
          "range,slope,intercept,r_squared,n_points,config_hash");
    CHECK(rates.find("all,") != std::string::npos);
    CHECK(rates.find("first_half,") != std::string::npos);

    // every data row carries the config hash
    std::istringstream lines(sweep);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find(cfg.hash) != std::string::npos);
        ++rows;
    }
    CHECK(rows == 6);
}

TEST_CASE("sweep reruns are byte-identical") {
    const std::string dir1 = (fs::temp_directory_path() / "vvmfg_det_a").string();
    const std::string dir2 = (fs::temp_directory_path() / "vvmfg_det_b").string();
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    auto grid_cfg = [](const std::string& dir, int workers) {
        return R"({
          "domain": {"kind": "truncated", "x_min": -5.0, "x_max": 5.0, "n": 80},
          "time": {"T": 1.0, "nt": 160},
          "model": {"name": "quadratic_mean_field"},
          "g": {"name": "zero"},
          "m0": {"kind": "gaussian", "params": {"mean": 0.0, "variance": 0.04}},
          "betas": [0.2, 0.4],
          "solver": {"coupler": "fictitious_play", "tol": 1e-7, "max_iter": 60, "damping": 1.0},
          "workers": )" + std::to_string(workers) + R"(,
          "output": {"dir": ")" + dir + R"("}
        })";
    };
    // identical config, repeated run: byte-identical CSVs
    const SweepReport r1 = run_sweep_beta(parse_config(grid_cfg(dir1, 1)));
    const std::string first_sweep = slurp(r1.sweep_csv);
    const std::string first_rates = slurp(r1.rates_csv);
    CHECK_FALSE(first_sweep.empty());
    const SweepReport r1b = run_sweep_beta(parse_config(grid_cfg(dir1, 1)));
    CHECK(slurp(r1b.sweep_csv) == first_sweep);
    CHECK(slurp(r1b.rates_csv) == first_rates);

    // a different worker count only changes the hash column, never the numbers
    const SweepReport r2 = run_sweep_beta(parse_config(grid_cfg(dir2, 4)));
    auto strip_hash = [](std::string text) {
        std::istringstream in(text);
        std::ostringstream out;
        std::string line;
        while (std::getline(in, line)) {
            const auto pos = line.rfind(',');
            out << line.substr(0, pos) << "\n";
        }
        return out.str();
    };
    CHECK(strip_hash(first_sweep) == strip_hash(slurp(r2.sweep_csv)));
    CHECK(strip_hash(first_rates) == strip_hash(slurp(r2.rates_csv)));
}

TEST_CASE("parallel_for covers every index exactly once and propagates errors") {
    std::vector<int> hits(257, 0);
    parallel_for(257, 8, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(16, 4,
                                 [&](int i) {
                                     if (i == 7) throw ConfigError("boom");
                                 }),
                    ConfigError);
}

TEST_CASE("check helpers flag threshold breaches") {
    ExperimentConfig cfg;
    cfg.model_name = "local_separable_62";
    SweepReport rep;
    rep.have_fits = true;
    rep.fit_all.slope = 1.5;  // outside [0.9, 1.3]
    rep.fit_half.slope = 1.5;
    rep.rows.push_back({0.1, 1.0, 0.0, 0.1, 3, true, 0.0, 0.0});
    const auto lines = check_sweep(rep, cfg);
    CHECK_FALSE(all_pass(lines));
}
