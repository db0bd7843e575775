#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dicot/rng.hpp"
#include "dicot/tensor.hpp"

namespace dicot {

enum class PositiveMode { Preceding, Next, Bidirectional, Shuffled };

struct LossConfig {
    double tau = 0.07;
    PositiveMode positive_mode = PositiveMode::Preceding;
    void validate() const;
};

// One positive index per anchor position. Bidirectional carries both
// directions; the loss is the mean of the two single-direction losses.
struct TargetVector {
    std::vector<int64_t> primary;
    std::optional<std::vector<int64_t>> secondary;
};

// z: B x k x F -> B x k x k scores scaled by 1/tau.
Tensor similarity(const Tensor& z, double tau);

// Preceding: [0, 0, 1, ..., k-2]. Next: [1, 2, ..., k-1, k-1].
// Bidirectional: both. Shuffled: random derangement-style draw (position 0
// unconstrained, j > 0 never targets itself); requires an rng.
TargetVector targets(int k, PositiveMode mode, Rng* rng = nullptr);

// Mean cross-entropy over all B*k anchors of log-softmax rows of S.
double dicot_loss(const Tensor& S, const TargetVector& tv);

// Analytic gradient wrt S, same shape. Row j of instance i holds
// (p - onehot(target_j)) / (B*k); bidirectional averages both directions.
Tensor dicot_loss_grad(const Tensor& S, const TargetVector& tv);

}  // namespace dicot
