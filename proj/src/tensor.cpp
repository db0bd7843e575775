#include "dicot/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dicot/errors.hpp"

namespace dicot {

std::string shape_to_string(const std::vector<int64_t>& shape) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e < 1) throw ShapeError("tensor extent must be >= 1, got shape " + shape_to_string(shape));
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    int64_t n = shape_numel(shape);
    if (n != static_cast<int64_t>(data.size())) {
        throw ShapeError("tensor data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
    }
}

Tensor Tensor::zeros(std::vector<int64_t> shape_in) {
    int64_t n = shape_numel(shape_in);
    Tensor t;
    t.shape = std::move(shape_in);
    t.data.assign(static_cast<size_t>(n), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<int64_t> shape_in, double value) {
    Tensor t = zeros(std::move(shape_in));
    for (double& v : t.data) v = value;
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t;
    t.shape = {1};
    t.data = {value};
    return t;
}

int64_t Tensor::extent(int axis) const {
    if (axis < 0 || axis >= rank()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(shape));
    }
    return shape[static_cast<size_t>(axis)];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace dicot
