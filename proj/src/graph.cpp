#include "dicot/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dicot/errors.hpp"

namespace dicot {

NodeId Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::Node& Graph::node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
const Graph::Node& Graph::node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }

Tensor& Graph::grad_buf(NodeId id) { return nodes_[static_cast<size_t>(id)].grad; }

const Tensor& Graph::value(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw ContractError("node id " + std::to_string(id) + " out of range");
    return node(id).value;
}

const Tensor& Graph::grad(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw ContractError("node id " + std::to_string(id) + " out of range");
    const Node& n = node(id);
    if (!n.requires_grad || n.grad.empty())
        throw ContractError("gradient not available for node " + std::to_string(id) +
                            "; run backward() on a graph that reaches it");
    return n.grad;
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    shape_numel(n.value.shape);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

NodeId Graph::conv1d(NodeId x, NodeId w, Padding pad) {
    Node n;
    n.value = kernels::conv1d(value(x), value(w), pad);
    n.inputs = {x, w};
    n.requires_grad = node(x).requires_grad || node(w).requires_grad;
    n.backprop = [x, w, pad](Graph& g, const Node& self) {
        const Tensor& xv = g.value(x);
        const Tensor& wv = g.value(w);
        const Tensor& go = self.grad;
        const int64_t N = xv.shape[0], T = xv.shape[1], Cin = xv.shape[2];
        const int64_t Cout = wv.shape[0], K = wv.shape[2];
        const int64_t pad_left = (pad == Padding::Same) ? (K - 1) / 2 : 0;
        const int64_t Tout = go.shape[1];

        // wt[kk][ci][co] mirrors the forward layout so co stays contiguous.
        std::vector<double> wt(static_cast<size_t>(K * Cin * Cout));
        for (int64_t co = 0; co < Cout; ++co)
            for (int64_t ci = 0; ci < Cin; ++ci)
                for (int64_t kk = 0; kk < K; ++kk)
                    wt[static_cast<size_t>((kk * Cin + ci) * Cout + co)] = wv.at3(co, ci, kk);
        std::vector<double> dwt(static_cast<size_t>(K * Cin * Cout), 0.0);

        const bool need_dx = g.node(x).requires_grad;
        const bool need_dw = g.node(w).requires_grad;
        Tensor* dx = need_dx ? &g.grad_buf(x) : nullptr;
        for (int64_t nn = 0; nn < N; ++nn) {
            for (int64_t t = 0; t < Tout; ++t) {
                const double* grow = &go.data[static_cast<size_t>((nn * Tout + t) * Cout)];
                for (int64_t kk = 0; kk < K; ++kk) {
                    const int64_t tin = t + kk - pad_left;
                    if (tin < 0 || tin >= T) continue;
                    const double* xrow = &xv.data[static_cast<size_t>((nn * T + tin) * Cin)];
                    double* dxrow = need_dx ? &dx->data[static_cast<size_t>((nn * T + tin) * Cin)] : nullptr;
                    for (int64_t ci = 0; ci < Cin; ++ci) {
                        const double* wr = &wt[static_cast<size_t>((kk * Cin + ci) * Cout)];
                        if (need_dx) {
                            double acc = 0.0;
                            for (int64_t co = 0; co < Cout; ++co) acc += grow[co] * wr[co];
                            dxrow[ci] += acc;
                        }
                        if (need_dw) {
                            double* dwr = &dwt[static_cast<size_t>((kk * Cin + ci) * Cout)];
                            const double xval = xrow[ci];
                            for (int64_t co = 0; co < Cout; ++co) dwr[co] += xval * grow[co];
                        }
                    }
                }
            }
        }
        if (need_dw) {
            Tensor& dw = g.grad_buf(w);
            for (int64_t co = 0; co < Cout; ++co)
                for (int64_t ci = 0; ci < Cin; ++ci)
                    for (int64_t kk = 0; kk < K; ++kk)
                        dw.at3(co, ci, kk) += dwt[static_cast<size_t>((kk * Cin + ci) * Cout + co)];
        }
    };
    return push(std::move(n));
}

NodeId Graph::bias_add(NodeId x, NodeId b) {
    Node n;
    n.value = kernels::bias_add(value(x), value(b));
    n.inputs = {x, b};
    n.requires_grad = node(x).requires_grad || node(b).requires_grad;
    n.backprop = [x, b](Graph& g, const Node& self) {
        const Tensor& go = self.grad;
        const int64_t C = go.shape.back();
        const int64_t rows = go.numel() / C;
        if (g.node(x).requires_grad) {
            Tensor& dx = g.grad_buf(x);
            for (size_t i = 0; i < go.data.size(); ++i) dx.data[i] += go.data[i];
        }
        if (g.node(b).requires_grad) {
            Tensor& db = g.grad_buf(b);
            for (int64_t r = 0; r < rows; ++r) {
                const double* grow = &go.data[static_cast<size_t>(r * C)];
                for (int64_t c = 0; c < C; ++c) db.data[static_cast<size_t>(c)] += grow[c];
            }
        }
    };
    return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    Node n;
    n.value = kernels::relu(value(x));
    n.inputs = {x};
    n.requires_grad = node(x).requires_grad;
    n.backprop = [x](Graph& g, const Node& self) {
        if (!g.node(x).requires_grad) return;
        const Tensor& xv = g.value(x);
        Tensor& dx = g.grad_buf(x);
        // subgradient 0 at exactly 0
        for (size_t i = 0; i < xv.data.size(); ++i)
            if (xv.data[i] > 0.0) dx.data[i] += self.grad.data[i];
    };
    return push(std::move(n));
}

NodeId Graph::mean_pool_time(NodeId x) {
    Node n;
    n.value = kernels::mean_pool_time(value(x));
    n.inputs = {x};
    n.requires_grad = node(x).requires_grad;
    n.backprop = [x](Graph& g, const Node& self) {
        if (!g.node(x).requires_grad) return;
        const Tensor& xv = g.value(x);
        Tensor& dx = g.grad_buf(x);
        if (xv.rank() == 2) {
            const int64_t T = xv.shape[0], C = xv.shape[1];
            for (int64_t t = 0; t < T; ++t)
                for (int64_t c = 0; c < C; ++c)
                    dx.at2(t, c) += self.grad.data[static_cast<size_t>(c)] / static_cast<double>(T);
        } else {
            const int64_t N = xv.shape[0], T = xv.shape[1], C = xv.shape[2];
            for (int64_t nn = 0; nn < N; ++nn) {
                const double* grow = &self.grad.data[static_cast<size_t>(nn * C)];
                for (int64_t t = 0; t < T; ++t) {
                    double* dxrow = &dx.data[static_cast<size_t>((nn * T + t) * C)];
                    for (int64_t c = 0; c < C; ++c) dxrow[c] += grow[c] / static_cast<double>(T);
                }
            }
        }
    };
    return push(std::move(n));
}

NodeId Graph::dense(NodeId x, NodeId w) {
    Node n;
    n.value = kernels::dense(value(x), value(w));
    n.inputs = {x, w};
    n.requires_grad = node(x).requires_grad || node(w).requires_grad;
    n.backprop = [x, w](Graph& g, const Node& self) {
        const Tensor& xv = g.value(x);
        const Tensor& wv = g.value(w);
        const Tensor& go = self.grad;
        const int64_t N = xv.shape[0], Cin = xv.shape[1], F = wv.shape[0];
        if (g.node(x).requires_grad) {
            Tensor& dx = g.grad_buf(x);
            for (int64_t nn = 0; nn < N; ++nn) {
                double* dxrow = &dx.data[static_cast<size_t>(nn * Cin)];
                const double* grow = &go.data[static_cast<size_t>(nn * F)];
                for (int64_t f = 0; f < F; ++f) {
                    const double gv = grow[f];
                    const double* wrow = &wv.data[static_cast<size_t>(f * Cin)];
                    for (int64_t c = 0; c < Cin; ++c) dxrow[c] += gv * wrow[c];
                }
            }
        }
        if (g.node(w).requires_grad) {
            Tensor& dw = g.grad_buf(w);
            for (int64_t nn = 0; nn < N; ++nn) {
                const double* xrow = &xv.data[static_cast<size_t>(nn * Cin)];
                const double* grow = &go.data[static_cast<size_t>(nn * F)];
                for (int64_t f = 0; f < F; ++f) {
                    const double gv = grow[f];
                    double* dwrow = &dw.data[static_cast<size_t>(f * Cin)];
                    for (int64_t c = 0; c < Cin; ++c) dwrow[c] += gv * xrow[c];
                }
            }
        }
    };
    return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, std::vector<int64_t> shape) {
    const Tensor& xv = value(x);
    if (shape_numel(shape) != xv.numel()) {
        throw ShapeError("reshape from " + shape_to_string(xv.shape) + " to " +
                         shape_to_string(shape) + " changes element count");
    }
    Node n;
    n.value = Tensor(shape, xv.data);
    n.inputs = {x};
    n.requires_grad = node(x).requires_grad;
    n.backprop = [x](Graph& g, const Node& self) {
        if (!g.node(x).requires_grad) return;
        Tensor& dx = g.grad_buf(x);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += self.grad.data[i];
    };
    return push(std::move(n));
}

NodeId Graph::pair_similarity(NodeId z, double tau) {
    Node n;
    n.value = kernels::pair_similarity(value(z), tau);
    n.inputs = {z};
    n.requires_grad = node(z).requires_grad;
    n.backprop = [z, tau](Graph& g, const Node& self) {
        if (!g.node(z).requires_grad) return;
        const Tensor& zv = g.value(z);
        const Tensor& go = self.grad;
        Tensor& dz = g.grad_buf(z);
        const int64_t B = zv.shape[0], k = zv.shape[1], F = zv.shape[2];
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t j = 0; j < k; ++j) {
                double* drow = &dz.data[static_cast<size_t>((b * k + j) * F)];
                for (int64_t p = 0; p < k; ++p) {
                    const double coeff = (go.at3(b, j, p) + go.at3(b, p, j)) / tau;
                    if (coeff == 0.0) continue;
                    const double* zp = &zv.data[static_cast<size_t>((b * k + p) * F)];
                    for (int64_t f = 0; f < F; ++f) drow[f] += coeff * zp[f];
                }
            }
        }
    };
    return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::vector<int64_t> targets) {
    const Tensor& lv = value(logits);
    if (lv.rank() != 2)
        throw ShapeError("softmax_cross_entropy expects rank-2 logits, got " + shape_to_string(lv.shape));
    const int64_t N = lv.shape[0], C = lv.shape[1];
    if (static_cast<int64_t>(targets.size()) != N)
        throw ShapeError("targets size " + std::to_string(targets.size()) +
                         " does not match logits rows " + std::to_string(N));
    for (int64_t t : targets)
        if (t < 0 || t >= C)
            throw ShapeError("target index " + std::to_string(t) + " out of range for " +
                             std::to_string(C) + " classes");

    Node n;
    n.saved = Tensor::zeros({N, C});  // softmax probabilities
    double total = 0.0;
    for (int64_t i = 0; i < N; ++i) {
        const double* row = &lv.data[static_cast<size_t>(i * C)];
        double m = row[0];
        for (int64_t c = 1; c < C; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (int64_t c = 0; c < C; ++c) sum += std::exp(row[c] - m);
        const double lse = m + std::log(sum);
        total += lse - row[targets[static_cast<size_t>(i)]];
        for (int64_t c = 0; c < C; ++c)
            n.saved.at2(i, c) = std::exp(row[c] - lse);
    }
    n.value = Tensor::scalar(total / static_cast<double>(N));
    n.inputs = {logits};
    n.requires_grad = node(logits).requires_grad;
    n.itargets = std::move(targets);
    n.backprop = [logits](Graph& g, const Node& self) {
        if (!g.node(logits).requires_grad) return;
        Tensor& dl = g.grad_buf(logits);
        const int64_t N = dl.shape[0], C = dl.shape[1];
        const double gout = self.grad.data[0] / static_cast<double>(N);
        for (int64_t i = 0; i < N; ++i) {
            const double* prow = &self.saved.data[static_cast<size_t>(i * C)];
            double* drow = &dl.data[static_cast<size_t>(i * C)];
            for (int64_t c = 0; c < C; ++c) drow[c] += gout * prow[c];
            drow[self.itargets[static_cast<size_t>(i)]] -= gout;
        }
    };
    return push(std::move(n));
}

NodeId Graph::mean_all(NodeId x) {
    const Tensor& xv = value(x);
    double s = 0.0;
    for (double v : xv.data) s += v;
    Node n;
    n.value = Tensor::scalar(s / static_cast<double>(xv.numel()));
    n.inputs = {x};
    n.requires_grad = node(x).requires_grad;
    n.backprop = [x](Graph& g, const Node& self) {
        if (!g.node(x).requires_grad) return;
        Tensor& dx = g.grad_buf(x);
        const double gv = self.grad.data[0] / static_cast<double>(dx.numel());
        for (double& v : dx.data) v += gv;
    };
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
        throw ShapeError("add shape mismatch: " + shape_to_string(av.shape) + " vs " +
                         shape_to_string(bv.shape));
    Node n;
    n.value = av;
    for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += bv.data[i];
    n.inputs = {a, b};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.backprop = [a, b](Graph& g, const Node& self) {
        for (NodeId in : {a, b}) {
            if (!g.node(in).requires_grad) continue;
            Tensor& d = g.grad_buf(in);
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += self.grad.data[i];
        }
    };
    return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double c) {
    Node n;
    n.value = value(x);
    for (double& v : n.value.data) v *= c;
    n.inputs = {x};
    n.requires_grad = node(x).requires_grad;
    n.backprop = [x, c](Graph& g, const Node& self) {
        if (!g.node(x).requires_grad) return;
        Tensor& dx = g.grad_buf(x);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += c * self.grad.data[i];
    };
    return push(std::move(n));
}

void Graph::backward(NodeId loss) {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
        throw ContractError("backward: node id out of range");
    if (node(loss).value.numel() != 1)
        throw ContractError("backward requires a scalar loss, got shape " +
                            shape_to_string(node(loss).value.shape));
    for (NodeId id = 0; id <= loss; ++id) {
        Node& n = node(id);
        if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape);
    }
    if (!node(loss).requires_grad)
        throw ContractError("backward: loss does not depend on any gradient leaf");
    node(loss).grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = node(id);
        if (n.requires_grad && n.backprop) n.backprop(*this, n);
    }
}

double grad_check(const std::function<double(const Tensor&)>& f,
                  const Tensor& analytic_grad, const Tensor& x, double step) {
    if (!analytic_grad.same_shape(x))
        throw ShapeError("grad_check: analytic gradient shape " +
                         shape_to_string(analytic_grad.shape) + " does not match input " +
                         shape_to_string(x.shape));
    double worst = 0.0;
    Tensor probe = x;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double orig = probe.at(i);
        probe.at(i) = orig + step;
        const double fp = f(probe);
        probe.at(i) = orig - step;
        const double fm = f(probe);
        probe.at(i) = orig;
        const double numeric = (fp - fm) / (2.0 * step);
        const double err = std::abs(analytic_grad.at(i) - numeric) / std::max(1.0, std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace dicot
