#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicot/data.hpp"
#include "dicot/encoder.hpp"
#include "dicot/objective.hpp"
#include "dicot/partition.hpp"

namespace dicot {

struct OptimizerConfig {
    double base_lr = 3e-4;
    double weight_decay = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
    double warmup_frac = 0.10;
    int64_t total_iters = 1500;
    int64_t batch_size = 128;
    uint64_t seed = 1;
    void validate() const;
};

struct OptimizerState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    int64_t t = 0;
    static OptimizerState like(const ModelParams& params);
};

struct TrainRecord {
    int64_t iter = 0;
    int k = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
    double wall_seconds = 0.0;
    int64_t partition_retries = 0;
    void write_csv(const std::string& path) const;  // header iter,k,lr,loss
};

// Linear warmup over W = round(warmup_frac * total) iters, then cosine decay
// from base_lr to exactly 0 at t = total_iters.
double lr_at(int64_t t, const OptimizerConfig& cfg);

// Decoupled weight decay with bias-corrected moments:
// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
void adamw_step(ModelParams& params, const std::vector<Tensor>& grads, OptimizerState& state,
                double lr, const OptimizerConfig& cfg);

struct PretrainResult {
    ModelParams params;
    TrainLog log;
};

PretrainResult pretrain(const TimeSeriesBatch& dataset, const EncoderConfig& encoder,
                        const PartitionParams& partition, const LossConfig& loss,
                        const OptimizerConfig& optimizer);

}  // namespace dicot
