#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicot/tensor.hpp"

namespace dicot {

// A collection of windows sharing T and D. Labels are dense in [0, C);
// -1 marks an unlabeled window. labels may be empty for unlabeled corpora.
struct TimeSeriesBatch {
    Tensor values;                // B x T x D
    std::vector<int64_t> labels;  // empty or length B
    int64_t n_classes = 0;

    int64_t size() const { return values.shape.empty() ? 0 : values.shape[0]; }
    int64_t window_length() const { return values.shape[1]; }
    int64_t dims() const { return values.shape[2]; }
    void validate() const;
};

struct SyntheticSpec {
    int64_t n_per_class = 500;
    int64_t T = 128;
    int64_t D = 3;
    int64_t C = 4;
    double noise_sigma = 0.3;
    double cycles_base = 2.0;
    uint64_t seed = 1;
    void validate() const;
};

// UCR-style text rows: label then T values, tab or comma separated, one
// window per line, univariate. Labels remap to 0..C-1 in sorted order.
TimeSeriesBatch load_ucr_tsv(const std::string& path);

// Binary container: magic "DICOTD1\0", u32 LE N/T/D/C, N*T*D f32 LE values
// (instance, time, channel), N i32 LE labels (-1 = unlabeled).
TimeSeriesBatch load_binary(const std::string& path);
void save_binary(const TimeSeriesBatch& batch, const std::string& path);

// Class c, channel d, timestep t:
//   sin(2*pi*(c+1)*cycles_base*t/T + phi) + eps
// phi drawn once per window, eps per sample. Class-major layout, balanced.
TimeSeriesBatch gen_synthetic(const SyntheticSpec& spec);

}  // namespace dicot
