#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicot/tensor.hpp"

namespace dicot {

struct BenchPoint {
    std::string method;  // "dicot" | "timestep"
    int64_t B = 0;
    int64_t T = 0;
    int k = 0;
    int F = 0;
    double median_seconds = 0.0;
    int64_t bytes = 0;  // analytic score+input footprint
    bool skipped = false;
};

// Timestep-level contrast stand-in: the full (BT) x (BT) score matrix with
// single preceding-timestep positives (the first timestep self-targets),
// softmax cross entropy averaged over all BT anchors.
double timestep_contrast_loss(const Tensor& z, double tau,
                              int64_t budget_bytes = 1'500'000'000);

// The dicot-side timing kernel (similarity + loss on B x k x F), exposed so
// tests can cross-check it against the objective module.
double bench_dicot_loss(const Tensor& z, double tau);

int64_t timestep_score_elements(int64_t B, int64_t T);

struct ScalingConfig {
    std::vector<int64_t> T_values{64, 128, 256, 512};
    std::vector<int64_t> B_values{8, 16, 32, 64};
    int k = 10;
    int F = 64;
    int repeats = 5;
    int64_t budget_bytes = 1'500'000'000;
    bool use_f32 = false;
    uint64_t seed = 1;
    void validate() const;
};

struct ScalingResult {
    std::vector<BenchPoint> points;
    double dicot_slope_T = 0.0;     // time vs T at B = B_values.front()
    double timestep_slope_T = 0.0;  // same cells, baseline kernel
    double dicot_slope_B = 0.0;     // time vs B at T = T_values.front()
};

// Loss-only timing on pregenerated random embeddings, single-threaded, one
// warmup repeat discarded, median of `repeats`; a cell whose spread
// (max-min)/median reaches 25% is re-measured up to 3 times. Cells whose
// score matrix exceeds the byte budget are recorded as skipped.
ScalingResult run_scaling(const ScalingConfig& config);

// Rows `method,B,T,k,F,median_seconds,bytes`; skipped cells write nan.
void write_bench_csv(const ScalingResult& result, const std::string& path);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace dicot
