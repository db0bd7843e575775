#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dicot/errors.hpp"
#include "dicot/graph.hpp"
#include "dicot/objective.hpp"
#include "dicot/rng.hpp"

using namespace dicot;

namespace {

Tensor random_scores(int64_t B, int64_t k, Rng& rng) {
    Tensor z = Tensor::zeros({B, k, 4});
    for (double& v : z.data) v = uniform_real(rng, -1.0, 1.0);
    return similarity(z, 0.07);
}

double naive_loss(const Tensor& S, const std::vector<int64_t>& tv) {
    const int64_t B = S.shape[0], k = S.shape[1];
    double total = 0.0;
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            double mx = S.at3(i, j, 0);
            for (int64_t p = 1; p < k; ++p) mx = std::max(mx, S.at3(i, j, p));
            double denom = 0.0;
            for (int64_t p = 0; p < k; ++p) denom += std::exp(S.at3(i, j, p) - mx);
            total += std::log(denom) - (S.at3(i, j, tv[static_cast<size_t>(j)]) - mx);
        }
    }
    return total / static_cast<double>(B * k);
}

}  // namespace

TEST_CASE("targets per mode") {
    TargetVector t = targets(4, PositiveMode::Preceding);
    CHECK(t.primary == std::vector<int64_t>{0, 0, 1, 2});
    CHECK_FALSE(t.secondary.has_value());

    t = targets(4, PositiveMode::Next);
    CHECK(t.primary == std::vector<int64_t>{1, 2, 3, 3});

    t = targets(2, PositiveMode::Preceding);
    CHECK(t.primary == std::vector<int64_t>{0, 0});

    t = targets(4, PositiveMode::Bidirectional);
    CHECK(t.primary == std::vector<int64_t>{0, 0, 1, 2});
    REQUIRE(t.secondary.has_value());
    CHECK(*t.secondary == std::vector<int64_t>{1, 2, 3, 3});

    CHECK_THROWS_AS(targets(1, PositiveMode::Preceding), ConfigError);
    CHECK_THROWS_AS(targets(5, PositiveMode::Shuffled), ConfigError);  // rng required
}

TEST_CASE("shuffled targets never self-reference past position zero") {
    Rng rng = make_rng(5);
    for (int rep = 0; rep < 2000; ++rep) {
        const int k = 2 + rep % 7;
        TargetVector t = targets(k, PositiveMode::Shuffled, &rng);
        REQUIRE(static_cast<int>(t.primary.size()) == k);
        for (int j = 0; j < k; ++j) {
            CHECK(t.primary[static_cast<size_t>(j)] >= 0);
            CHECK(t.primary[static_cast<size_t>(j)] < k);
            if (j > 0) CHECK(t.primary[static_cast<size_t>(j)] != j);
        }
    }
}

TEST_CASE("uniform scores give ln k") {
    for (int k : {2, 5, 10}) {
        Tensor S = Tensor::full({3, k, k}, 1.25);
        const double loss = dicot_loss(S, targets(k, PositiveMode::Preceding));
        CHECK(loss == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-13));
    }
    Tensor S5 = Tensor::zeros({1, 5, 5});
    CHECK(dicot_loss(S5, targets(5, PositiveMode::Preceding)) ==
          doctest::Approx(1.6094379124341003).epsilon(1e-14));
}

TEST_CASE("loss matches an explicit loop") {
    Rng rng = make_rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const int64_t B = uniform_int(rng, 1, 8);
        const int64_t k = uniform_int(rng, 2, 10);
        Tensor S = random_scores(B, k, rng);
        TargetVector tv = targets(static_cast<int>(k), PositiveMode::Preceding);
        CHECK(std::abs(dicot_loss(S, tv) - naive_loss(S, tv.primary)) < 1e-12);
    }
}

TEST_CASE("loss invariances") {
    Rng rng = make_rng(41);
    Tensor S = random_scores(3, 6, rng);
    TargetVector tv = targets(6, PositiveMode::Preceding);
    const double base = dicot_loss(S, tv);
    CHECK(base >= 0.0);

    Tensor shifted = S;
    for (double& v : shifted.data) v += 37.5;
    CHECK(std::abs(dicot_loss(shifted, tv) - base) < 1e-12);
}

TEST_CASE("gradient row structure") {
    Tensor S({1, 2, 2}, {0.0, 0.0, 0.0, 0.0});
    // craft probs [0.3, 0.7] in row 0 via logits log(0.3), log(0.7)
    S.at3(0, 0, 0) = std::log(0.3);
    S.at3(0, 0, 1) = std::log(0.7);
    S.at3(0, 1, 0) = std::log(0.3);
    S.at3(0, 1, 1) = std::log(0.7);
    TargetVector tv;
    tv.primary = {0, 0};
    Tensor g = dicot_loss_grad(S, tv);
    const double n = 2.0;  // B*k
    CHECK(g.at3(0, 0, 0) == doctest::Approx(-0.7 / n).epsilon(1e-12));
    CHECK(g.at3(0, 0, 1) == doctest::Approx(0.7 / n).epsilon(1e-12));

    Rng rng = make_rng(53);
    Tensor R = random_scores(2, 5, rng);
    Tensor gr = dicot_loss_grad(R, targets(5, PositiveMode::Preceding));
    for (int64_t i = 0; i < 2; ++i) {
        for (int64_t j = 0; j < 5; ++j) {
            double row_sum = 0.0;
            for (int64_t p = 0; p < 5; ++p) row_sum += gr.at3(i, j, p);
            CHECK(std::abs(row_sum) < 1e-14);
        }
    }
}

TEST_CASE("gradient matches finite differences") {
    Rng rng = make_rng(61);
    Tensor S = random_scores(3, 5, rng);
    for (PositiveMode mode :
         {PositiveMode::Preceding, PositiveMode::Next, PositiveMode::Bidirectional}) {
        TargetVector tv = targets(5, mode);
        Tensor analytic = dicot_loss_grad(S, tv);
        auto f = [&](const Tensor& probe) { return dicot_loss(probe, tv); };
        CHECK(grad_check(f, analytic, S, 1e-6) < 1e-8);
    }
}

TEST_CASE("bidirectional is the mean of both directions") {
    Rng rng = make_rng(71);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t k = uniform_int(rng, 2, 10);
        Tensor S = random_scores(2, k, rng);
        const double pre = dicot_loss(S, targets(static_cast<int>(k), PositiveMode::Preceding));
        const double nxt = dicot_loss(S, targets(static_cast<int>(k), PositiveMode::Next));
        const double both = dicot_loss(S, targets(static_cast<int>(k), PositiveMode::Bidirectional));
        CHECK(std::abs(both - 0.5 * (pre + nxt)) < 1e-12);

        Tensor gp = dicot_loss_grad(S, targets(static_cast<int>(k), PositiveMode::Preceding));
        Tensor gn = dicot_loss_grad(S, targets(static_cast<int>(k), PositiveMode::Next));
        Tensor gb = dicot_loss_grad(S, targets(static_cast<int>(k), PositiveMode::Bidirectional));
        for (size_t i = 0; i < gb.data.size(); ++i)
            CHECK(std::abs(gb.data[i] - 0.5 * (gp.data[i] + gn.data[i])) < 1e-12);
    }
}

TEST_CASE("temperature rescales but keeps the argmin structure") {
    Rng rng = make_rng(83);
    Tensor z = Tensor::zeros({1, 4, 3});
    for (double& v : z.data) v = uniform_real(rng, -1.0, 1.0);
    TargetVector tv = targets(4, PositiveMode::Preceding);
    Tensor s1 = similarity(z, 1.0);
    Tensor s2 = similarity(z, 0.5);
    for (size_t i = 0; i < s1.data.size(); ++i)
        CHECK(s2.data[i] == doctest::Approx(2.0 * s1.data[i]).epsilon(1e-13));
    CHECK(dicot_loss(s1, tv) != dicot_loss(s2, tv));
}

TEST_CASE("input validation") {
    TargetVector tv = targets(3, PositiveMode::Preceding);
    CHECK_THROWS_AS(dicot_loss(Tensor::zeros({2, 3}), tv), ShapeError);
    CHECK_THROWS_AS(dicot_loss(Tensor::zeros({2, 3, 4}), tv), ShapeError);
    TargetVector bad;
    bad.primary = {0, 1};  // wrong length for k = 3
    CHECK_THROWS_AS(dicot_loss(Tensor::zeros({2, 3, 3}), bad), ShapeError);
    TargetVector oob;
    oob.primary = {0, 3, 1};
    CHECK_THROWS_AS(dicot_loss(Tensor::zeros({2, 3, 3}), oob), ShapeError);
    Tensor nan_scores = Tensor::zeros({1, 3, 3});
    nan_scores.data[0] = std::nan("");
    CHECK_THROWS_AS(dicot_loss(nan_scores, tv), NumericsError);

    LossConfig cfg;
    cfg.tau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.tau = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("graph pair similarity plus cross entropy reproduces the closed form") {
    Rng rng = make_rng(97);
    Tensor z = Tensor::zeros({2, 3, 4});
    for (double& v : z.data) v = uniform_real(rng, -1.0, 1.0);
    TargetVector tv = targets(3, PositiveMode::Preceding);

    Tensor S = similarity(z, 0.07);
    const double direct = dicot_loss(S, tv);

    Graph g;
    NodeId zn = g.leaf(z, true);
    NodeId sn = g.pair_similarity(zn, 0.07);
    NodeId flat = g.reshape(sn, {6, 3});
    std::vector<int64_t> tiled;
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t j = 0; j < 3; ++j) tiled.push_back(tv.primary[static_cast<size_t>(j)]);
    NodeId loss = g.softmax_cross_entropy(flat, tiled);
    CHECK(g.value(loss).data[0] == doctest::Approx(direct).epsilon(1e-13));

    g.backward(loss);
    Tensor analytic = g.grad(zn);
    auto f = [&](const Tensor& probe) {
        Tensor sp = similarity(probe, 0.07);
        return dicot_loss(sp, tv);
    };
    CHECK(grad_check(f, analytic, z, 1e-6) < 1e-6);
}
