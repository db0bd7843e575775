#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "dicot/bench.hpp"
#include "dicot/errors.hpp"
#include "dicot/objective.hpp"
#include "dicot/rng.hpp"

using namespace dicot;

TEST_CASE("timestep loss hand oracle") {
    Tensor z({1, 2, 1}, {1.0, 2.0});
    const double loss = timestep_contrast_loss(z, 1.0);
    CHECK(loss == doctest::Approx(1.7200948492805979).epsilon(1e-14));

    // coincides with the block objective when each timestep is one block
    TargetVector tv = targets(2, PositiveMode::Preceding);
    Tensor S({1, 2, 2}, {1.0, 2.0, 2.0, 4.0});
    CHECK(loss == doctest::Approx(dicot_loss(S, tv)).epsilon(1e-14));
    CHECK(loss == doctest::Approx(bench_dicot_loss(z, 1.0)).epsilon(1e-14));
}

TEST_CASE("all-equal embeddings score ln(BT)") {
    Tensor z = Tensor::full({2, 3, 2}, 1.0);
    CHECK(timestep_contrast_loss(z, 0.07) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("score matrix accounting") {
    CHECK(timestep_score_elements(3, 10) == 900);
    CHECK(timestep_score_elements(3, 20) == 4 * timestep_score_elements(3, 10));
    CHECK(timestep_score_elements(8, 4096) == 8LL * 4096 * 8 * 4096);
}

TEST_CASE("budget guard") {
    Tensor z = Tensor::full({4, 16, 2}, 0.5);  // (BT)^2 * 8 = 32768 bytes
    CHECK_THROWS_AS(timestep_contrast_loss(z, 0.07, 1000), BudgetError);
    CHECK(std::isfinite(timestep_contrast_loss(z, 0.07, 40000)));
    CHECK_THROWS_AS(timestep_contrast_loss(Tensor::zeros({4, 16}), 0.07), ShapeError);
    CHECK_THROWS_AS(timestep_contrast_loss(z, 0.0), ConfigError);
}

TEST_CASE("bench kernel agrees with the objective module") {
    Rng rng = make_rng(5);
    Tensor z = Tensor::zeros({4, 7, 5});
    for (double& v : z.data) v = uniform_real(rng, -1.0, 1.0);
    const double from_bench = bench_dicot_loss(z, 0.07);
    const double from_objective = dicot_loss(similarity(z, 0.07), targets(7, PositiveMode::Preceding));
    CHECK(from_bench == doctest::Approx(from_objective).epsilon(1e-12));
}

TEST_CASE("loglog slope recovers exact power laws") {
    std::vector<double> xs = {64, 128, 256, 512};
    std::vector<double> quadratic, constant, linear;
    for (double x : xs) {
        quadratic.push_back(3e-9 * x * x);
        constant.push_back(4.2e-6);
        linear.push_back(1e-7 * x);
    }
    CHECK(loglog_slope(xs, quadratic) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(loglog_slope(xs, constant) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(loglog_slope(xs, linear) == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), ConfigError);
    CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {0.0, 1.0}), NumericsError);
}

TEST_CASE("scaling sweep smoke run") {
    ScalingConfig cfg;
    cfg.T_values = {8, 16};
    cfg.B_values = {2, 4};
    cfg.k = 3;
    cfg.F = 4;
    cfg.repeats = 3;
    cfg.seed = 2;

    ScalingResult r = run_scaling(cfg);
    REQUIRE(r.points.size() == 8);  // 2 methods x 2 T x 2 B
    for (const BenchPoint& p : r.points) {
        CHECK_FALSE(p.skipped);
        CHECK(p.median_seconds > 0.0);
        CHECK(p.bytes > 0);
    }
    CHECK(std::isfinite(r.dicot_slope_T));
    CHECK(std::isfinite(r.timestep_slope_T));
    CHECK(std::isfinite(r.dicot_slope_B));

    const std::string path = "dicot_test_bench.csv";
    write_bench_csv(r, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "method,B,T,k,F,median_seconds,bytes");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8);
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("over-budget cells are skipped, not fatal") {
    ScalingConfig cfg;
    cfg.T_values = {8, 16};
    cfg.B_values = {2, 4};
    cfg.k = 3;
    cfg.F = 4;
    cfg.repeats = 3;
    cfg.budget_bytes = 2000;  // all timestep cells blow this

    ScalingResult r = run_scaling(cfg);
    int skipped = 0;
    for (const BenchPoint& p : r.points) {
        if (p.method == "timestep") {
            CHECK(p.skipped);
            ++skipped;
        } else {
            CHECK_FALSE(p.skipped);
        }
    }
    CHECK(skipped == 4);
    CHECK(std::isnan(r.timestep_slope_T));
    CHECK(std::isfinite(r.dicot_slope_T));

    const std::string path = "dicot_test_bench_skip.csv";
    write_bench_csv(r, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    int nan_rows = 0;
    while (std::getline(in, line))
        if (line.find(",nan,") != std::string::npos) ++nan_rows;
    CHECK(nan_rows == 4);
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("sweep config validation") {
    ScalingConfig cfg;
    cfg.repeats = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ScalingConfig{};
    cfg.T_values = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ScalingConfig{};
    cfg.k = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ScalingConfig{};
    cfg.budget_bytes = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
