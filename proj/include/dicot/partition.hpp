#pragma once

#include <cstdint>

#include "dicot/rng.hpp"
#include "dicot/tensor.hpp"

namespace dicot {

enum class SplitMode { Fixed, Uniform };

struct PartitionParams {
    double rho = 0.5;
    SplitMode mode = SplitMode::Uniform;
    int k_fixed = 10;        // Fixed mode
    int k_min = 2;           // Uniform mode, inclusive
    int k_max = 10;
    void validate() const;   // ConfigError on bad ranges
};

struct PartitionPlan {
    int64_t T = 0;   // source window length
    int k = 0;       // effective sub-block count
    int64_t L = 0;   // sub-block length, always even
    int64_t s = 0;   // stride between consecutive block starts
};

// Draws the requested block count for one iteration.
int sample_k(const PartitionParams& params, Rng& rng);

// Solves the overlap geometry for a window of length T: block length
// L = 2*round(T / (2*(1 + (k-1)(1-rho)))), stride s = round(L*(1-rho)),
// effective count k_eff = floor((T-L)/s) + 1. Rounding is half away from
// zero. Throws InvalidPartition when the window cannot host two blocks.
PartitionPlan plan_partition(int64_t T, int k_requested, double rho);

struct SubBlockSet {
    Tensor values;       // B x k x L x D
    PartitionPlan plan;
};

// Strided views copied out of a B x T x D batch:
// values[i,j,t,d] = source[i, j*s + t, d].
SubBlockSet extract_subblocks(const Tensor& source, const PartitionPlan& plan);

}  // namespace dicot
