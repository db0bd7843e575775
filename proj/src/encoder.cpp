#include "dicot/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/kernels.hpp"
#include "dicot/rng.hpp"

namespace dicot {

void EncoderConfig::validate() const {
    if (in_channels < 1)
        throw ConfigError("in_channels must be >= 1, got " + std::to_string(in_channels));
    if (channels.empty()) throw ConfigError("encoder needs at least one conv layer");
    if (channels.size() != kernel_sizes.size())
        throw ConfigError("channels (" + std::to_string(channels.size()) + ") and kernel_sizes (" +
                          std::to_string(kernel_sizes.size()) + ") must have equal length");
    for (int c : channels)
        if (c < 1) throw ConfigError("channel counts must be >= 1");
    for (int k : kernel_sizes)
        if (k < 1) throw ConfigError("kernel sizes must be >= 1");
    if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1, got " + std::to_string(embed_dim));
    if (projection && projection->hidden_dim < 1)
        throw ConfigError("projection hidden_dim must be >= 1");
}

Tensor* ModelParams::find(const std::string& name) {
    for (auto& t : tensors)
        if (t.name == name) return &t.value;
    return nullptr;
}

const Tensor* ModelParams::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t.value;
    return nullptr;
}

int64_t ModelParams::total_elements() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.value.numel();
    return n;
}

namespace {

Tensor kaiming_uniform(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = uniform_real(rng, -bound, bound);
    return t;
}

const Tensor& require(const ModelParams& params, const std::string& name) {
    const Tensor* t = params.find(name);
    if (!t) throw FormatError("model is missing tensor '" + name + "'");
    return *t;
}

}  // namespace

ModelParams init_params(const EncoderConfig& config, uint64_t seed) {
    config.validate();
    Rng rng = make_rng(seed);
    ModelParams params;
    int64_t prev = config.in_channels;
    for (size_t i = 0; i < config.channels.size(); ++i) {
        const int64_t cout = config.channels[i];
        const int64_t K = config.kernel_sizes[i];
        const std::string tag = "conv" + std::to_string(i);
        params.tensors.push_back({tag + ".weight", kaiming_uniform({cout, prev, K}, prev * K, rng)});
        params.tensors.push_back({tag + ".bias", Tensor::zeros({cout})});
        prev = cout;
    }
    const int64_t F = config.embed_dim;
    params.tensors.push_back({"proj.weight", kaiming_uniform({F, prev}, prev, rng)});
    params.tensors.push_back({"proj.bias", Tensor::zeros({F})});
    if (config.projection) {
        const int64_t H = config.projection->hidden_dim;
        params.tensors.push_back({"head.fc1.weight", kaiming_uniform({H, F}, F, rng)});
        params.tensors.push_back({"head.fc1.bias", Tensor::zeros({H})});
        params.tensors.push_back({"head.fc2.weight", kaiming_uniform({F, H}, H, rng)});
        params.tensors.push_back({"head.fc2.bias", Tensor::zeros({F})});
    }
    return params;
}

Tensor encode(const Tensor& blocks, const ModelParams& params, const EncoderConfig& config) {
    config.validate();
    if (blocks.rank() != 3)
        throw ShapeError("encode expects N x L x D input, got " + shape_to_string(blocks.shape));
    const Tensor& w0 = require(params, "conv0.weight");
    if (blocks.shape[2] != w0.shape[1])
        throw ShapeError("input has " + std::to_string(blocks.shape[2]) +
                         " channels but the first conv layer expects " + std::to_string(w0.shape[1]));
    Tensor x = blocks;
    for (size_t i = 0; i < config.channels.size(); ++i) {
        const std::string tag = "conv" + std::to_string(i);
        x = kernels::conv1d(x, require(params, tag + ".weight"), Padding::Same);
        x = kernels::bias_add(x, require(params, tag + ".bias"));
        x = kernels::relu(x);
    }
    x = kernels::mean_pool_time(x);
    x = kernels::dense(x, require(params, "proj.weight"));
    x = kernels::bias_add(x, require(params, "proj.bias"));
    return x;
}

EncoderNodes build_encoder_graph(Graph& g, const Tensor& blocks, const ModelParams& params,
                                 const EncoderConfig& config) {
    config.validate();
    if (blocks.rank() != 3)
        throw ShapeError("encoder graph expects N x L x D input, got " + shape_to_string(blocks.shape));

    std::vector<NodeId> ids;
    ids.reserve(params.tensors.size());
    for (const auto& t : params.tensors) ids.push_back(g.leaf(t.value, true));
    auto id_of = [&](const std::string& name) -> NodeId {
        for (size_t i = 0; i < params.tensors.size(); ++i)
            if (params.tensors[i].name == name) return ids[i];
        throw FormatError("model is missing tensor '" + name + "'");
    };

    NodeId x = g.leaf(blocks, false);
    if (blocks.shape[2] != g.value(id_of("conv0.weight")).shape[1])
        throw ShapeError("input has " + std::to_string(blocks.shape[2]) +
                         " channels but the first conv layer expects " +
                         std::to_string(g.value(id_of("conv0.weight")).shape[1]));
    for (size_t i = 0; i < config.channels.size(); ++i) {
        const std::string tag = "conv" + std::to_string(i);
        x = g.conv1d(x, id_of(tag + ".weight"), Padding::Same);
        x = g.bias_add(x, id_of(tag + ".bias"));
        x = g.relu(x);
    }
    x = g.mean_pool_time(x);
    x = g.dense(x, id_of("proj.weight"));
    x = g.bias_add(x, id_of("proj.bias"));

    EncoderNodes nodes;
    nodes.embedding = x;
    nodes.loss_features = x;
    if (config.projection) {
        NodeId h = g.dense(x, id_of("head.fc1.weight"));
        h = g.bias_add(h, id_of("head.fc1.bias"));
        h = g.relu(h);
        h = g.dense(h, id_of("head.fc2.weight"));
        h = g.bias_add(h, id_of("head.fc2.bias"));
        nodes.loss_features = h;
    }
    nodes.param_ids = std::move(ids);
    return nodes;
}

EncoderConfig config_from_params(const ModelParams& params) {
    EncoderConfig config;
    config.channels.clear();
    config.kernel_sizes.clear();
    for (size_t i = 0;; ++i) {
        const Tensor* w = params.find("conv" + std::to_string(i) + ".weight");
        if (!w) break;
        if (w->rank() != 3) throw FormatError("conv weight must be rank 3");
        if (i == 0) config.in_channels = static_cast<int>(w->shape[1]);
        config.channels.push_back(static_cast<int>(w->shape[0]));
        config.kernel_sizes.push_back(static_cast<int>(w->shape[2]));
    }
    if (config.channels.empty()) throw FormatError("model has no conv layers");
    const Tensor& proj = require(params, "proj.weight");
    if (proj.rank() != 2) throw FormatError("proj.weight must be rank 2");
    config.embed_dim = static_cast<int>(proj.shape[0]);
    if (const Tensor* fc1 = params.find("head.fc1.weight")) {
        if (fc1->rank() != 2) throw FormatError("head.fc1.weight must be rank 2");
        config.projection = ProjectionHead{static_cast<int>(fc1->shape[0])};
    }
    config.validate();
    return config;
}

namespace {

constexpr char kModelMagic[8] = {'D', 'I', 'C', 'O', 'T', 'M', '1', '\0'};

void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void read_exact(std::istream& in, char* buf, size_t n, const std::string& what) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError("model file truncated while reading " + what);
}

uint16_t read_u16(std::istream& in, const std::string& what) {
    unsigned char b[2];
    read_exact(in, reinterpret_cast<char*>(b), 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t read_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    read_exact(in, reinterpret_cast<char*>(b), 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& in, const std::string& what) {
    unsigned char b[8];
    read_exact(in, reinterpret_cast<char*>(b), 8, what);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_model(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(kModelMagic, 8);
    write_u32(out, static_cast<uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        if (t.name.size() > 0xffff) throw FormatError("tensor name too long");
        write_u16(out, static_cast<uint16_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        out.put(static_cast<char>(t.value.rank()));
        for (int64_t e : t.value.shape) write_u32(out, static_cast<uint32_t>(e));
        for (double v : t.value.data) write_f64(out, v);
    }
    if (!out) throw FormatError("write failed for '" + path + "'");
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    char magic[8];
    read_exact(in, magic, 8, "magic");
    if (std::memcmp(magic, kModelMagic, 8) != 0)
        throw FormatError("'" + path + "' is not a model file (bad magic)");
    const uint32_t count = read_u32(in, "tensor count");
    ModelParams params;
    params.tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = read_u16(in, "name length");
        std::string name(name_len, '\0');
        read_exact(in, name.data(), name_len, "tensor name");
        char rank_byte;
        read_exact(in, &rank_byte, 1, "rank");
        const int rank = static_cast<unsigned char>(rank_byte);
        if (rank < 1 || rank > 8) throw FormatError("tensor '" + name + "' has invalid rank");
        std::vector<int64_t> shape(static_cast<size_t>(rank));
        for (int a = 0; a < rank; ++a) shape[static_cast<size_t>(a)] = read_u32(in, "extent");
        const int64_t n = shape_numel(shape);
        std::vector<double> data(static_cast<size_t>(n));
        for (int64_t e = 0; e < n; ++e) data[static_cast<size_t>(e)] = read_f64(in, "tensor data");
        params.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    // trailing bytes tolerated only if none
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw FormatError("'" + path + "' has trailing bytes after last tensor");
    return params;
}

}  // namespace dicot
