#include "dicot/partition.hpp"

#include <cmath>
#include <string>

#include "dicot/errors.hpp"

namespace dicot {

namespace {

// half away from zero; arguments here are always >= 0
int64_t round_half_up(double x) { return static_cast<int64_t>(std::floor(x + 0.5)); }

}  // namespace

void PartitionParams::validate() const {
    if (!(rho >= 0.0 && rho < 1.0))
        throw ConfigError("overlap ratio must lie in [0, 1), got " + std::to_string(rho));
    if (mode == SplitMode::Fixed) {
        if (k_fixed < 2) throw ConfigError("fixed block count must be >= 2, got " + std::to_string(k_fixed));
    } else {
        if (k_min < 2) throw ConfigError("k_min must be >= 2, got " + std::to_string(k_min));
        if (k_max < k_min)
            throw ConfigError("k_max must be >= k_min, got k_min=" + std::to_string(k_min) +
                              " k_max=" + std::to_string(k_max));
    }
}

int sample_k(const PartitionParams& params, Rng& rng) {
    params.validate();
    if (params.mode == SplitMode::Fixed) return params.k_fixed;
    return static_cast<int>(uniform_int(rng, params.k_min, params.k_max));
}

PartitionPlan plan_partition(int64_t T, int k_requested, double rho) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw ConfigError("overlap ratio must lie in [0, 1), got " + std::to_string(rho));
    if (k_requested < 2)
        throw ConfigError("block count must be >= 2, got " + std::to_string(k_requested));
    if (T < 4)
        throw InvalidPartition("window length " + std::to_string(T) + " is too short to partition");

    const double raw = static_cast<double>(T) /
                       (1.0 + static_cast<double>(k_requested - 1) * (1.0 - rho));
    const int64_t L = 2 * round_half_up(raw / 2.0);
    if (L < 2 || L > T)
        throw InvalidPartition("window of length " + std::to_string(T) +
                               " is too short for " + std::to_string(k_requested) + " blocks");
    const int64_t s = round_half_up(static_cast<double>(L) * (1.0 - rho));
    if (s < 1)
        throw InvalidPartition("overlap " + std::to_string(rho) + " leaves no stride for L=" +
                               std::to_string(L));
    const int64_t k_eff = (T - L) / s + 1;
    if (k_eff < 2)
        throw InvalidPartition("window of length " + std::to_string(T) +
                               " only fits one block of length " + std::to_string(L));

    PartitionPlan plan;
    plan.T = T;
    plan.k = static_cast<int>(k_eff);
    plan.L = L;
    plan.s = s;
    return plan;
}

SubBlockSet extract_subblocks(const Tensor& source, const PartitionPlan& plan) {
    if (source.rank() != 3)
        throw ShapeError("extract_subblocks expects a rank-3 batch, got " +
                         shape_to_string(source.shape));
    const int64_t B = source.shape[0], T = source.shape[1], D = source.shape[2];
    if (T != plan.T)
        throw ShapeError("batch window length " + std::to_string(T) +
                         " does not match plan T=" + std::to_string(plan.T));
    const int64_t k = plan.k, L = plan.L, s = plan.s;

    SubBlockSet out;
    out.plan = plan;
    out.values = Tensor::zeros({B, k, L, D});
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            const int64_t start = j * s;
            const double* src = &source.data[static_cast<size_t>((i * T + start) * D)];
            double* dst = &out.values.data[static_cast<size_t>(((i * k + j) * L) * D)];
            std::copy(src, src + L * D, dst);
        }
    }
    return out;
}

}  // namespace dicot
