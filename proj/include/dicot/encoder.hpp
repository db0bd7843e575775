#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dicot/graph.hpp"
#include "dicot/tensor.hpp"

namespace dicot {

struct ProjectionHead {
    int hidden_dim = 64;
};

// Stride-1 same-padded conv stack with ReLU, temporal mean pooling, then a
// linear projection to the embedding. The optional nonlinear head is used
// only while computing the pretraining loss; encode() always bypasses it.
struct EncoderConfig {
    int in_channels = 1;  // data dimension D; set from the dataset before init
    std::vector<int> channels = {32, 64, 128};
    std::vector<int> kernel_sizes = {8, 5, 3};
    int embed_dim = 64;
    std::optional<ProjectionHead> projection;
    void validate() const;
};

struct NamedTensor {
    std::string name;
    Tensor value;
};

struct ModelParams {
    std::vector<NamedTensor> tensors;
    Tensor* find(const std::string& name);
    const Tensor* find(const std::string& name) const;
    int64_t total_elements() const;
};

// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases. Tensors are
// created and filled in a fixed order, so a seed pins every value.
ModelParams init_params(const EncoderConfig& config, uint64_t seed);

// blocks: N x L x D -> N x embed_dim pooled embeddings (head bypassed).
Tensor encode(const Tensor& blocks, const ModelParams& params, const EncoderConfig& config);

struct EncoderNodes {
    std::vector<NodeId> param_ids;  // aligned with ModelParams::tensors
    NodeId embedding;               // pre-head N x F
    NodeId loss_features;           // head output when present, else embedding
};

// Builds the differentiable forward pass on the tape. Forward values agree
// bit for bit with encode() on the pre-head embedding.
EncoderNodes build_encoder_graph(Graph& g, const Tensor& blocks, const ModelParams& params,
                                 const EncoderConfig& config);

// Reconstructs the architecture from tensor names and shapes.
EncoderConfig config_from_params(const ModelParams& params);

// Binary container, little-endian, round-trips bit for bit:
// magic "DICOTM1\0", u32 tensor count, then per tensor u16 name length,
// name bytes, u8 rank, u32 extents, f64 row-major payload.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace dicot
