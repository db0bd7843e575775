#pragma once

#include "dicot/tensor.hpp"

namespace dicot {

enum class Padding { Same, Valid };

namespace kernels {

// x: N x T x Cin, w: Cout x Cin x K. Cross-correlation, stride 1.
// Same padding keeps T (pad_left = (K-1)/2), valid yields T-K+1.
Tensor conv1d(const Tensor& x, const Tensor& w, Padding pad);

// b has one axis matching the last extent of x (rank 2 or 3).
Tensor bias_add(const Tensor& x, const Tensor& b);

Tensor relu(const Tensor& x);

// N x T x C -> N x C, or T x C -> C.
Tensor mean_pool_time(const Tensor& x);

// x: N x Cin, w: F x Cin -> N x F.
Tensor dense(const Tensor& x, const Tensor& w);

// z: B x k x F -> B x k x k with S[b,j,p] = <z[b,j], z[b,p]> / tau.
// The output is exactly symmetric in (j, p).
Tensor pair_similarity(const Tensor& z, double tau);

}  // namespace kernels
}  // namespace dicot
