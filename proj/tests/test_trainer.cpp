#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/trainer.hpp"

using namespace dicot;

namespace {

TimeSeriesBatch small_synth(int64_t n_per_class = 30, uint64_t seed = 42) {
    SyntheticSpec spec;
    spec.n_per_class = n_per_class;
    spec.T = 64;
    spec.D = 1;
    spec.C = 2;
    spec.noise_sigma = 0.2;
    spec.seed = seed;
    return gen_synthetic(spec);
}

EncoderConfig small_encoder() {
    EncoderConfig c;
    c.channels = {8, 16};
    c.kernel_sizes = {5, 3};
    c.embed_dim = 8;
    return c;
}

ModelParams single_param(double value) {
    ModelParams p;
    p.tensors.push_back({"w", Tensor({1}, {value})});
    return p;
}

double cosine(const Tensor& a, int64_t ra, const Tensor& b, int64_t rb) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    const int64_t F = a.shape[1];
    for (int64_t f = 0; f < F; ++f) {
        dot += a.at2(ra, f) * b.at2(rb, f);
        na += a.at2(ra, f) * a.at2(ra, f);
        nb += b.at2(rb, f) * b.at2(rb, f);
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-300);
}

}  // namespace

TEST_CASE("lr schedule hits the pinned points") {
    OptimizerConfig cfg;  // total 1500, warmup 10% -> W = 150
    CHECK(lr_at(0, cfg) == 0.0);
    CHECK(lr_at(150, cfg) == doctest::Approx(3e-4).epsilon(1e-15));
    CHECK(lr_at(825, cfg) == doctest::Approx(1.5e-4).epsilon(1e-12));
    CHECK(lr_at(1500, cfg) == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(std::abs(lr_at(1500, cfg)) < 1e-19);

    // continuity at the warmup boundary
    CHECK(std::abs(lr_at(149, cfg) - lr_at(150, cfg)) < 3e-4 / 100.0);

    // monotone up during warmup, monotone down after
    for (int64_t t = 1; t <= 150; ++t) CHECK(lr_at(t, cfg) > lr_at(t - 1, cfg));
    for (int64_t t = 151; t <= 1500; ++t) CHECK(lr_at(t, cfg) < lr_at(t - 1, cfg));

    CHECK_THROWS_AS(lr_at(-1, cfg), ConfigError);
    CHECK_THROWS_AS(lr_at(1501, cfg), ConfigError);

    OptimizerConfig no_warmup = cfg;
    no_warmup.warmup_frac = 0.0;
    CHECK(lr_at(0, no_warmup) == doctest::Approx(3e-4).epsilon(1e-15));
}

TEST_CASE("adamw pure decoupled decay") {
    ModelParams p = single_param(1.0);
    OptimizerState st = OptimizerState::like(p);
    OptimizerConfig cfg;
    cfg.weight_decay = 0.01;
    std::vector<Tensor> zero = {Tensor::zeros({1})};
    adamw_step(p, zero, st, 0.1, cfg);
    CHECK(p.tensors[0].value.data[0] == doctest::Approx(0.999).epsilon(1e-15));

    // zero grads keep shrinking by exactly lr*wd*p each step
    double expected = p.tensors[0].value.data[0];
    for (int i = 0; i < 5; ++i) {
        expected -= 0.1 * 0.01 * expected;
        adamw_step(p, zero, st, 0.1, cfg);
        CHECK(p.tensors[0].value.data[0] == expected);
    }
}

TEST_CASE("adamw first step moves by about lr") {
    ModelParams p = single_param(0.0);
    OptimizerState st = OptimizerState::like(p);
    OptimizerConfig cfg;
    cfg.weight_decay = 0.0;
    cfg.eps = 1e-12;
    std::vector<Tensor> g = {Tensor({1}, {1.0})};
    adamw_step(p, g, st, 0.1, cfg);
    CHECK(p.tensors[0].value.data[0] == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(st.t == 1);
}

TEST_CASE("adamw determinism and validation") {
    OptimizerConfig cfg;
    std::vector<Tensor> g = {Tensor({1}, {0.37})};

    ModelParams a = single_param(0.5);
    OptimizerState sa = OptimizerState::like(a);
    ModelParams b = single_param(0.5);
    OptimizerState sb = OptimizerState::like(b);
    for (int i = 0; i < 3; ++i) {
        adamw_step(a, g, sa, 2e-3, cfg);
        adamw_step(b, g, sb, 2e-3, cfg);
    }
    CHECK(a.tensors[0].value.data[0] == b.tensors[0].value.data[0]);
    CHECK(sa.m[0].data == sb.m[0].data);
    CHECK(sa.v[0].data == sb.v[0].data);

    ModelParams c = single_param(0.5);
    OptimizerState sc = OptimizerState::like(c);
    std::vector<Tensor> bad = {Tensor({1}, {std::nan("")})};
    CHECK_THROWS_AS(adamw_step(c, bad, sc, 2e-3, cfg), NumericsError);
    CHECK(c.tensors[0].value.data[0] == 0.5);  // rejected before mutation
    CHECK(sc.t == 0);

    std::vector<Tensor> wrong_shape = {Tensor::zeros({2})};
    CHECK_THROWS_AS(adamw_step(c, wrong_shape, sc, 2e-3, cfg), ShapeError);
    CHECK_THROWS_AS(adamw_step(c, {}, sc, 2e-3, cfg), ShapeError);
}

TEST_CASE("optimizer config validation") {
    OptimizerConfig cfg;
    cfg.base_lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = OptimizerConfig{};
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = OptimizerConfig{};
    cfg.warmup_frac = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = OptimizerConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("pretrain with zero iterations returns the initial parameters") {
    TimeSeriesBatch data = small_synth();
    EncoderConfig enc = small_encoder();
    PartitionParams part;
    part.k_max = 6;
    LossConfig loss;
    OptimizerConfig opt;
    opt.total_iters = 0;
    opt.batch_size = 8;
    opt.seed = 9;

    PretrainResult r = pretrain(data, enc, part, loss, opt);
    CHECK(r.log.records.empty());

    EncoderConfig resolved = enc;
    resolved.in_channels = static_cast<int>(data.dims());
    ModelParams fresh = init_params(resolved, mix_seed(9, 0));
    REQUIRE(r.params.tensors.size() == fresh.tensors.size());
    for (size_t i = 0; i < fresh.tensors.size(); ++i)
        CHECK(r.params.tensors[i].value.data == fresh.tensors[i].value.data);
}

TEST_CASE("pretrain is deterministic per seed") {
    TimeSeriesBatch data = small_synth();
    EncoderConfig enc = small_encoder();
    PartitionParams part;
    part.k_max = 6;
    LossConfig loss;
    OptimizerConfig opt;
    opt.total_iters = 5;
    opt.batch_size = 4;
    opt.seed = 3;

    PretrainResult a = pretrain(data, enc, part, loss, opt);
    PretrainResult b = pretrain(data, enc, part, loss, opt);
    for (size_t i = 0; i < a.params.tensors.size(); ++i)
        CHECK(a.params.tensors[i].value.data == b.params.tensors[i].value.data);
    REQUIRE(a.log.records.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(a.log.records[i].iter == static_cast<int64_t>(i));
        CHECK(a.log.records[i].loss == b.log.records[i].loss);
        CHECK(a.log.records[i].k == b.log.records[i].k);
        CHECK(a.log.records[i].lr == lr_at(static_cast<int64_t>(i), opt));
        CHECK(a.log.records[i].k >= 2);
        CHECK(a.log.records[i].k <= 6);
    }

    opt.seed = 4;
    PretrainResult c = pretrain(data, enc, part, loss, opt);
    CHECK(a.params.tensors[0].value.data != c.params.tensors[0].value.data);
}

TEST_CASE("huge temperature flattens the initial loss to ln k") {
    // With tau enormous every score row is numerically uniform, so the first
    // recorded loss must land on ln(k_eff) no matter what the encoder emits.
    SyntheticSpec spec;
    spec.n_per_class = 40;
    spec.T = 80;
    spec.D = 1;
    spec.C = 2;
    spec.noise_sigma = 0.2;
    spec.seed = 42;
    TimeSeriesBatch data = gen_synthetic(spec);
    EncoderConfig enc = small_encoder();
    PartitionParams part;
    part.mode = SplitMode::Fixed;
    part.k_fixed = 4;  // T=80, rho=0.5 -> L=32, s=16, k_eff=4
    LossConfig loss;
    loss.tau = 1e9;
    OptimizerConfig opt;
    opt.total_iters = 1;
    opt.batch_size = 16;
    opt.seed = 11;
    PretrainResult r = pretrain(data, enc, part, loss, opt);
    REQUIRE(r.log.records.size() == 1);
    CHECK(r.log.records[0].k == 4);
    CHECK(std::abs(r.log.records[0].loss - std::log(4.0)) < 1e-6);
}

TEST_CASE("pretrain learns and the embedding becomes shift-robust") {
    TimeSeriesBatch data = small_synth(40, 7);
    EncoderConfig enc = small_encoder();
    PartitionParams part;
    part.k_max = 6;
    LossConfig loss;
    OptimizerConfig opt;
    opt.total_iters = 150;
    opt.batch_size = 16;
    opt.base_lr = 1e-3;
    opt.seed = 1;

    PretrainResult r = pretrain(data, enc, part, loss, opt);
    REQUIRE(r.log.records.size() == 150);
    double head = 0.0, tail = 0.0;
    for (size_t i = 0; i < 30; ++i) head += r.log.records[i].loss;
    for (size_t i = 120; i < 150; ++i) tail += r.log.records[i].loss;
    CHECK(tail < head);

    // trained embeddings should move less under a 1-step circular shift
    // than towards an unrelated noise window
    EncoderConfig resolved = enc;
    resolved.in_channels = 1;
    const int64_t T = data.window_length();
    Rng noise_rng = make_rng(99);
    double cos_shift = 0.0, cos_noise = 0.0;
    const int probes = 20;
    for (int i = 0; i < probes; ++i) {
        Tensor x = Tensor::zeros({1, T, 1});
        for (int64_t t = 0; t < T; ++t) x.at3(0, t, 0) = data.values.at3(i * 3, t, 0);
        Tensor shifted = Tensor::zeros({1, T, 1});
        for (int64_t t = 0; t < T; ++t) shifted.at3(0, t, 0) = x.at3(0, (t + 1) % T, 0);
        Tensor random = Tensor::zeros({1, T, 1});
        for (int64_t t = 0; t < T; ++t) random.at3(0, t, 0) = normal(noise_rng, 0.0, 1.0);

        Tensor zx = encode(x, r.params, resolved);
        Tensor zs = encode(shifted, r.params, resolved);
        Tensor zr = encode(random, r.params, resolved);
        cos_shift += cosine(zx, 0, zs, 0);
        cos_noise += cosine(zx, 0, zr, 0);
    }
    CHECK(cos_shift / probes > cos_noise / probes);
}

TEST_CASE("pretrain propagates impossible partitions") {
    SyntheticSpec spec;
    spec.n_per_class = 4;
    spec.T = 4;
    spec.D = 1;
    spec.C = 2;
    spec.seed = 5;
    TimeSeriesBatch tiny = gen_synthetic(spec);

    EncoderConfig enc = small_encoder();
    LossConfig loss;
    OptimizerConfig opt;
    opt.total_iters = 1;
    opt.batch_size = 2;

    PartitionParams part;
    part.k_min = 9;
    part.k_max = 10;
    part.rho = 0.0;
    CHECK_THROWS_AS(pretrain(tiny, enc, part, loss, opt), InvalidPartition);

    part.mode = SplitMode::Fixed;
    part.k_fixed = 10;
    CHECK_THROWS_AS(pretrain(tiny, enc, part, loss, opt), InvalidPartition);
}

TEST_CASE("train log serializes as csv") {
    TrainLog log;
    log.records.push_back({0, 3, 0.0, 1.5});
    log.records.push_back({1, 7, 1e-4, 1.25});
    const std::string path = "dicot_test_trainlog.csv";
    log.write_csv(path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iter,k,lr,loss");
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("0,3,", 0) == 0);
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("1,7,", 0) == 0);
    CHECK_FALSE(std::getline(in, line));
    in.close();
    std::remove(path.c_str());
}
