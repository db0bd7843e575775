#include "dicot/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/graph.hpp"
#include "dicot/rng.hpp"

namespace dicot {

void OptimizerConfig::validate() const {
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) throw ConfigError("warmup_frac must lie in [0, 1)");
    if (total_iters < 0) throw ConfigError("total_iters must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

OptimizerState OptimizerState::like(const ModelParams& params) {
    OptimizerState s;
    s.m.reserve(params.tensors.size());
    s.v.reserve(params.tensors.size());
    for (const auto& t : params.tensors) {
        s.m.push_back(Tensor::zeros(t.value.shape));
        s.v.push_back(Tensor::zeros(t.value.shape));
    }
    return s;
}

double lr_at(int64_t t, const OptimizerConfig& cfg) {
    if (t < 0 || t > cfg.total_iters)
        throw ConfigError("lr_at: iteration " + std::to_string(t) + " outside [0, " +
                          std::to_string(cfg.total_iters) + "]");
    const int64_t W = static_cast<int64_t>(std::llround(cfg.warmup_frac *
                                                        static_cast<double>(cfg.total_iters)));
    if (W > 0 && t < W)
        return cfg.base_lr * static_cast<double>(t) / static_cast<double>(W);
    if (cfg.total_iters == W) return cfg.base_lr;
    const double pi = std::acos(-1.0);
    const double phase = static_cast<double>(t - W) / static_cast<double>(cfg.total_iters - W);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(pi * phase));
}

void adamw_step(ModelParams& params, const std::vector<Tensor>& grads, OptimizerState& state,
                double lr, const OptimizerConfig& cfg) {
    if (grads.size() != params.tensors.size())
        throw ShapeError("adamw_step: got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.tensors.size()) + " parameter tensors");
    for (size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(params.tensors[i].value))
            throw ShapeError("adamw_step: gradient shape mismatch for '" + params.tensors[i].name + "'");
        if (!grads[i].all_finite())
            throw NumericsError("non-finite gradient for '" + params.tensors[i].name + "'");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < grads.size(); ++i) {
        Tensor& p = params.tensors[i].value;
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        const Tensor& g = grads[i];
        for (size_t e = 0; e < p.data.size(); ++e) {
            m.data[e] = cfg.beta1 * m.data[e] + (1.0 - cfg.beta1) * g.data[e];
            v.data[e] = cfg.beta2 * v.data[e] + (1.0 - cfg.beta2) * g.data[e] * g.data[e];
            const double m_hat = m.data[e] / bc1;
            const double v_hat = v.data[e] / bc2;
            p.data[e] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * p.data[e]);
        }
    }
}

void TrainLog::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    std::fputs("iter,k,lr,loss\n", f);
    for (const auto& r : records)
        std::fprintf(f, "%lld,%d,%.17g,%.17g\n", static_cast<long long>(r.iter), r.k, r.lr, r.loss);
    if (std::fclose(f) != 0) throw FormatError("write failed for '" + path + "'");
}

PretrainResult pretrain(const TimeSeriesBatch& dataset, const EncoderConfig& encoder,
                        const PartitionParams& partition, const LossConfig& loss,
                        const OptimizerConfig& optimizer) {
    partition.validate();
    loss.validate();
    optimizer.validate();
    dataset.validate();
    if (dataset.size() < 1) throw ConfigError("pretrain needs a nonempty dataset");

    EncoderConfig enc = encoder;
    enc.in_channels = static_cast<int>(dataset.dims());
    enc.validate();

    const int64_t N = dataset.size();
    const int64_t T = dataset.window_length();
    const int64_t D = dataset.dims();
    const int64_t B = optimizer.batch_size;
    const int64_t F = enc.embed_dim;

    PretrainResult result;
    result.params = init_params(enc, mix_seed(optimizer.seed, 0));
    OptimizerState state = OptimizerState::like(result.params);
    Rng rng = make_rng(mix_seed(optimizer.seed, 1));

    const auto t_start = std::chrono::steady_clock::now();
    for (int64_t iter = 0; iter < optimizer.total_iters; ++iter) {
        std::vector<int64_t> pick(static_cast<size_t>(B));
        for (int64_t b = 0; b < B; ++b) pick[static_cast<size_t>(b)] = uniform_int(rng, 0, N - 1);

        int drawn_k = 0;
        PartitionPlan plan;
        if (partition.mode == SplitMode::Fixed) {
            drawn_k = partition.k_fixed;
            plan = plan_partition(T, drawn_k, partition.rho);
        } else {
            for (int attempt = 0;; ++attempt) {
                drawn_k = sample_k(partition, rng);
                try {
                    plan = plan_partition(T, drawn_k, partition.rho);
                    break;
                } catch (const InvalidPartition&) {
                    ++result.log.partition_retries;
                    if (attempt + 1 >= 10) throw;
                }
            }
        }

        Tensor batch = Tensor::zeros({B, T, D});
        for (int64_t b = 0; b < B; ++b) {
            const double* src = &dataset.values.data[static_cast<size_t>(pick[static_cast<size_t>(b)] * T * D)];
            std::copy(src, src + T * D, &batch.data[static_cast<size_t>(b * T * D)]);
        }

        SubBlockSet sbs = extract_subblocks(batch, plan);
        const int64_t keff = plan.k;
        Tensor blocks(std::vector<int64_t>{B * keff, plan.L, D}, std::move(sbs.values.data));

        Graph g;
        EncoderNodes nodes = build_encoder_graph(g, blocks, result.params, enc);
        NodeId z = g.reshape(nodes.loss_features, {B, keff, F});
        NodeId S = g.pair_similarity(z, loss.tau);
        NodeId S_flat = g.reshape(S, {B * keff, keff});

        TargetVector tv = targets(static_cast<int>(keff), loss.positive_mode, &rng);
        std::vector<int64_t> tiled(static_cast<size_t>(B * keff));
        for (int64_t i = 0; i < B; ++i)
            for (int64_t j = 0; j < keff; ++j)
                tiled[static_cast<size_t>(i * keff + j)] = tv.primary[static_cast<size_t>(j)];
        NodeId total = g.softmax_cross_entropy(S_flat, tiled);
        if (tv.secondary) {
            for (int64_t i = 0; i < B; ++i)
                for (int64_t j = 0; j < keff; ++j)
                    tiled[static_cast<size_t>(i * keff + j)] = (*tv.secondary)[static_cast<size_t>(j)];
            total = g.scale(g.add(total, g.softmax_cross_entropy(S_flat, tiled)), 0.5);
        }

        const double loss_value = g.value(total).data[0];
        if (!std::isfinite(loss_value))
            throw NumericsError("loss became non-finite at iteration " + std::to_string(iter));
        g.backward(total);

        std::vector<Tensor> grads;
        grads.reserve(nodes.param_ids.size());
        for (NodeId pid : nodes.param_ids) grads.push_back(g.grad(pid));

        const double lr = lr_at(iter, optimizer);
        adamw_step(result.params, grads, state, lr, optimizer);
        result.log.records.push_back({iter, drawn_k, lr, loss_value});
    }
    result.log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace dicot
