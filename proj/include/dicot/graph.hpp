#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dicot/kernels.hpp"
#include "dicot/tensor.hpp"

namespace dicot {

using NodeId = int32_t;

// Reverse-mode tape over dense tensors. Ops append nodes in topological
// order; backward() walks the tape once in reverse, accumulating adjoints
// additively into every input that requires a gradient. Single-threaded and
// deterministic: the same inputs replay to bit-identical values and grads.
class Graph {
public:
    NodeId leaf(Tensor value, bool requires_grad = false);

    NodeId conv1d(NodeId x, NodeId w, Padding pad);
    NodeId bias_add(NodeId x, NodeId b);
    NodeId relu(NodeId x);
    NodeId mean_pool_time(NodeId x);
    NodeId dense(NodeId x, NodeId w);
    NodeId reshape(NodeId x, std::vector<int64_t> shape);
    NodeId pair_similarity(NodeId z, double tau);
    // logits: N x C, targets: N class indices. Returns the scalar mean
    // cross-entropy, computed with max-subtracted log-softmax.
    NodeId softmax_cross_entropy(NodeId logits, std::vector<int64_t> targets);
    NodeId mean_all(NodeId x);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId x, double c);

    // loss must be scalar (ContractError otherwise).
    void backward(NodeId loss);

    const Tensor& value(NodeId id) const;
    // Valid after backward() for nodes created with requires_grad (or
    // depending on one); ContractError otherwise.
    const Tensor& grad(NodeId id) const;
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::vector<NodeId> inputs;
        std::function<void(Graph&, const Node&)> backprop;
        Tensor saved;  // op-specific forward cache
        std::vector<int64_t> itargets;
    };

    NodeId push(Node node);
    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    Tensor& grad_buf(NodeId id);

    std::vector<Node> nodes_;
};

// Max over coordinates of |analytic - numeric| / max(1, |numeric|), with the
// numeric gradient taken by central differences at the given step.
double grad_check(const std::function<double(const Tensor&)>& f,
                  const Tensor& analytic_grad, const Tensor& x, double step);

}  // namespace dicot
