#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "dicot/encoder.hpp"
#include "dicot/errors.hpp"
#include "dicot/rng.hpp"

using namespace dicot;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig c;
    c.in_channels = 2;
    c.channels = {4, 5};
    c.kernel_sizes = {3, 3};
    c.embed_dim = 3;
    return c;
}

Tensor random_blocks(int64_t N, int64_t L, int64_t D, uint64_t seed) {
    Rng rng = make_rng(seed);
    Tensor t = Tensor::zeros({N, L, D});
    for (double& v : t.data) v = uniform_real(rng, -1.0, 1.0);
    return t;
}

std::string temp_path(const char* stem) {
    return std::string("dicot_test_") + stem + ".bin";
}

}  // namespace

TEST_CASE("init_params layout and determinism") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 7);
    REQUIRE(p.tensors.size() == 6);
    CHECK(p.tensors[0].name == "conv0.weight");
    CHECK(p.tensors[0].value.shape == std::vector<int64_t>{4, 2, 3});
    CHECK(p.tensors[1].name == "conv0.bias");
    CHECK(p.tensors[2].name == "conv1.weight");
    CHECK(p.tensors[2].value.shape == std::vector<int64_t>{5, 4, 3});
    CHECK(p.tensors[4].name == "proj.weight");
    CHECK(p.tensors[4].value.shape == std::vector<int64_t>{3, 5});
    CHECK(p.total_elements() == 4 * 2 * 3 + 4 + 5 * 4 * 3 + 5 + 3 * 5 + 3);

    for (double v : p.find("conv0.bias")->data) CHECK(v == 0.0);
    for (double v : p.find("proj.bias")->data) CHECK(v == 0.0);

    ModelParams q = init_params(c, 7);
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        CHECK(p.tensors[i].name == q.tensors[i].name);
        CHECK(p.tensors[i].value.data == q.tensors[i].value.data);
    }
    ModelParams r = init_params(c, 8);
    CHECK(p.tensors[0].value.data != r.tensors[0].value.data);
}

TEST_CASE("kaiming bound for fan-in 24") {
    EncoderConfig c;
    c.in_channels = 4;
    c.channels = {8};
    c.kernel_sizes = {6};  // fan_in = 4 * 6 = 24 -> bound 0.5
    c.embed_dim = 2;
    ModelParams p = init_params(c, 11);
    const Tensor& w = *p.find("conv0.weight");
    double maxabs = 0.0;
    for (double v : w.data) {
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
        maxabs = std::max(maxabs, std::abs(v));
    }
    CHECK(maxabs > 0.25);  // the draw actually fills the range
}

TEST_CASE("zero input with zero biases embeds to zero") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 3);
    Tensor z = encode(Tensor::zeros({4, 10, 2}), p, c);
    REQUIRE(z.shape == std::vector<int64_t>{4, 3});
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("output shape ignores input length") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 3);
    CHECK(encode(random_blocks(2, 16, 2, 1), p, c).shape == std::vector<int64_t>{2, 3});
    CHECK(encode(random_blocks(2, 32, 2, 1), p, c).shape == std::vector<int64_t>{2, 3});
    CHECK(encode(random_blocks(2, 1, 2, 1), p, c).shape == std::vector<int64_t>{2, 3});
}

TEST_CASE("channel mismatch is a shape error") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 3);
    CHECK_THROWS_AS(encode(random_blocks(2, 16, 3, 1), p, c), ShapeError);
}

TEST_CASE("projection head never touches evaluation embeddings") {
    EncoderConfig with_head = tiny_config();
    with_head.projection = ProjectionHead{6};
    ModelParams p = init_params(with_head, 13);
    REQUIRE(p.tensors.size() == 10);

    EncoderConfig no_head = tiny_config();
    ModelParams stripped;
    for (size_t i = 0; i < 6; ++i) stripped.tensors.push_back(p.tensors[i]);

    Tensor x = random_blocks(3, 12, 2, 5);
    Tensor a = encode(x, p, with_head);
    Tensor b = encode(x, stripped, no_head);
    CHECK(a.data == b.data);

    Graph g;
    EncoderNodes nodes = build_encoder_graph(g, x, p, with_head);
    CHECK(g.value(nodes.embedding).data == a.data);
    CHECK(g.value(nodes.loss_features).data != a.data);
    CHECK(g.value(nodes.loss_features).shape == a.shape);  // head maps back to F
}

TEST_CASE("graph forward agrees with encode bit for bit") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 21);
    Tensor x = random_blocks(4, 9, 2, 6);
    Tensor direct = encode(x, p, c);
    Graph g;
    EncoderNodes nodes = build_encoder_graph(g, x, p, c);
    CHECK(g.value(nodes.embedding).data == direct.data);
    CHECK(nodes.param_ids.size() == p.tensors.size());
    CHECK(nodes.loss_features == nodes.embedding);
}

TEST_CASE("config round-trips through parameter shapes") {
    EncoderConfig c = tiny_config();
    c.projection = ProjectionHead{7};
    ModelParams p = init_params(c, 2);
    EncoderConfig back = config_from_params(p);
    CHECK(back.in_channels == 2);
    CHECK(back.channels == std::vector<int>{4, 5});
    CHECK(back.kernel_sizes == std::vector<int>{3, 3});
    CHECK(back.embed_dim == 3);
    REQUIRE(back.projection.has_value());
    CHECK(back.projection->hidden_dim == 7);
}

TEST_CASE("config validation") {
    EncoderConfig c = tiny_config();
    c.kernel_sizes = {3};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.embed_dim = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.in_channels = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.channels = {};
    c.kernel_sizes = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("model files round-trip bit for bit") {
    EncoderConfig c = tiny_config();
    c.projection = ProjectionHead{6};
    ModelParams p = init_params(c, 31);
    const std::string path = temp_path("model_roundtrip");
    save_model(p, path);
    ModelParams q = load_model(path);
    REQUIRE(q.tensors.size() == p.tensors.size());
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        CHECK(q.tensors[i].name == p.tensors[i].name);
        CHECK(q.tensors[i].value.shape == p.tensors[i].value.shape);
        CHECK(q.tensors[i].value.data == p.tensors[i].value.data);
    }
    std::remove(path.c_str());
}

TEST_CASE("model loader rejects malformed files") {
    EncoderConfig c = tiny_config();
    ModelParams p = init_params(c, 5);
    const std::string path = temp_path("model_bad");

    save_model(p, path);
    {
        std::FILE* f = std::fopen(path.c_str(), "ab");
        std::fputc('x', f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_model(path), FormatError);

    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fwrite("NOTMODEL", 1, 8, f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_model(path), FormatError);

    save_model(p, path);
    {
        // chop the file mid-payload
        std::ifstream in(path, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size() / 2));
    }
    CHECK_THROWS_AS(load_model(path), FormatError);

    CHECK_THROWS_AS(load_model("does_not_exist.model"), FormatError);
    std::remove(path.c_str());
}
