#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace dicot {

std::string shape_to_string(const std::vector<int64_t>& shape);

// Validates extents (every extent >= 1) and returns the element count.
int64_t shape_numel(const std::vector<int64_t>& shape);

// Dense row-major tensor of 64-bit floats. Scalars use shape {1}.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int64_t> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<int64_t> shape_in);
    static Tensor full(std::vector<int64_t> shape_in, double value);
    static Tensor scalar(double value);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t extent(int axis) const;
    bool empty() const { return data.empty(); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
    double at(int64_t i) const { return data[static_cast<size_t>(i)]; }

    // Row-major offsets for the common ranks.
    double& at2(int64_t i, int64_t j) { return data[static_cast<size_t>(i * shape[1] + j)]; }
    double at2(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * shape[1] + j)]; }
    double& at3(int64_t i, int64_t j, int64_t k) {
        return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    double at3(int64_t i, int64_t j, int64_t k) const {
        return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    double& at4(int64_t i, int64_t j, int64_t k, int64_t l) {
        return data[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
    double at4(int64_t i, int64_t j, int64_t k, int64_t l) const {
        return data[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
};

}  // namespace dicot
