#include "dicot/kernels.hpp"

#include <string>

#include "dicot/errors.hpp"

namespace dicot {
namespace kernels {

namespace {

// Weights transposed to [K][Cin][Cout] so the innermost loop runs over
// contiguous output channels.
std::vector<double> transpose_w(const Tensor& w) {
    const int64_t Cout = w.shape[0], Cin = w.shape[1], K = w.shape[2];
    std::vector<double> wt(static_cast<size_t>(K * Cin * Cout));
    for (int64_t co = 0; co < Cout; ++co)
        for (int64_t ci = 0; ci < Cin; ++ci)
            for (int64_t kk = 0; kk < K; ++kk)
                wt[static_cast<size_t>((kk * Cin + ci) * Cout + co)] = w.at3(co, ci, kk);
    return wt;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, Padding pad) {
    if (x.rank() != 3) throw ShapeError("conv1d input must be rank 3, got " + shape_to_string(x.shape));
    if (w.rank() != 3) throw ShapeError("conv1d weight must be rank 3, got " + shape_to_string(w.shape));
    const int64_t N = x.shape[0], T = x.shape[1], Cin = x.shape[2];
    const int64_t Cout = w.shape[0], K = w.shape[2];
    if (w.shape[1] != Cin) {
        throw ShapeError("conv1d channel mismatch: input has " + std::to_string(Cin) +
                         " channels, weight expects " + std::to_string(w.shape[1]));
    }
    const int64_t pad_left = (pad == Padding::Same) ? (K - 1) / 2 : 0;
    const int64_t Tout = (pad == Padding::Same) ? T : T - K + 1;
    if (Tout < 1) {
        throw ShapeError("conv1d valid padding needs T >= K, got T=" + std::to_string(T) +
                         " K=" + std::to_string(K));
    }

    const std::vector<double> wt = transpose_w(w);
    Tensor out = Tensor::zeros({N, Tout, Cout});
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t t = 0; t < Tout; ++t) {
            double* orow = &out.data[static_cast<size_t>((n * Tout + t) * Cout)];
            for (int64_t kk = 0; kk < K; ++kk) {
                const int64_t tin = t + kk - pad_left;
                if (tin < 0 || tin >= T) continue;
                const double* xrow = &x.data[static_cast<size_t>((n * T + tin) * Cin)];
                const double* wrow = &wt[static_cast<size_t>(kk * Cin * Cout)];
                for (int64_t ci = 0; ci < Cin; ++ci) {
                    const double xv = xrow[ci];
                    const double* wr = wrow + ci * Cout;
                    for (int64_t co = 0; co < Cout; ++co) orow[co] += xv * wr[co];
                }
            }
        }
    }
    return out;
}

Tensor bias_add(const Tensor& x, const Tensor& b) {
    if (b.rank() != 1) throw ShapeError("bias must be rank 1, got " + shape_to_string(b.shape));
    if (x.rank() < 1) throw ShapeError("bias_add input must have at least one axis");
    const int64_t C = x.shape.back();
    if (b.shape[0] != C) {
        throw ShapeError("bias size " + std::to_string(b.shape[0]) +
                         " does not match trailing extent " + std::to_string(C));
    }
    Tensor out = x;
    const int64_t rows = x.numel() / C;
    for (int64_t r = 0; r < rows; ++r) {
        double* row = &out.data[static_cast<size_t>(r * C)];
        for (int64_t c = 0; c < C; ++c) row[c] += b.data[static_cast<size_t>(c)];
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) {
        if (v < 0.0) v = 0.0;
    }
    return out;
}

Tensor mean_pool_time(const Tensor& x) {
    if (x.rank() == 2) {
        const int64_t T = x.shape[0], C = x.shape[1];
        Tensor out = Tensor::zeros({C});
        for (int64_t t = 0; t < T; ++t)
            for (int64_t c = 0; c < C; ++c) out.data[static_cast<size_t>(c)] += x.at2(t, c);
        for (double& v : out.data) v /= static_cast<double>(T);
        return out;
    }
    if (x.rank() == 3) {
        const int64_t N = x.shape[0], T = x.shape[1], C = x.shape[2];
        Tensor out = Tensor::zeros({N, C});
        for (int64_t n = 0; n < N; ++n) {
            double* orow = &out.data[static_cast<size_t>(n * C)];
            for (int64_t t = 0; t < T; ++t) {
                const double* xrow = &x.data[static_cast<size_t>((n * T + t) * C)];
                for (int64_t c = 0; c < C; ++c) orow[c] += xrow[c];
            }
            for (int64_t c = 0; c < C; ++c) orow[c] /= static_cast<double>(T);
        }
        return out;
    }
    throw ShapeError("mean_pool_time expects rank 2 or 3, got " + shape_to_string(x.shape));
}

Tensor dense(const Tensor& x, const Tensor& w) {
    if (x.rank() != 2) throw ShapeError("dense input must be rank 2, got " + shape_to_string(x.shape));
    if (w.rank() != 2) throw ShapeError("dense weight must be rank 2, got " + shape_to_string(w.shape));
    const int64_t N = x.shape[0], Cin = x.shape[1], F = w.shape[0];
    if (w.shape[1] != Cin) {
        throw ShapeError("dense feature mismatch: input has " + std::to_string(Cin) +
                         ", weight expects " + std::to_string(w.shape[1]));
    }
    Tensor out = Tensor::zeros({N, F});
    for (int64_t n = 0; n < N; ++n) {
        const double* xrow = &x.data[static_cast<size_t>(n * Cin)];
        double* orow = &out.data[static_cast<size_t>(n * F)];
        for (int64_t f = 0; f < F; ++f) {
            const double* wrow = &w.data[static_cast<size_t>(f * Cin)];
            double acc = 0.0;
            for (int64_t c = 0; c < Cin; ++c) acc += xrow[c] * wrow[c];
            orow[f] = acc;
        }
    }
    return out;
}

Tensor pair_similarity(const Tensor& z, double tau) {
    if (tau <= 0.0) throw ConfigError("temperature must be > 0, got " + std::to_string(tau));
    if (z.rank() != 3) throw ShapeError("pair_similarity expects rank 3, got " + shape_to_string(z.shape));
    const int64_t B = z.shape[0], k = z.shape[1], F = z.shape[2];
    Tensor out = Tensor::zeros({B, k, k});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t j = 0; j < k; ++j) {
            const double* zj = &z.data[static_cast<size_t>((b * k + j) * F)];
            for (int64_t p = j; p < k; ++p) {
                const double* zp = &z.data[static_cast<size_t>((b * k + p) * F)];
                double acc = 0.0;
                for (int64_t f = 0; f < F; ++f) acc += zj[f] * zp[f];
                const double s = acc / tau;
                out.at3(b, j, p) = s;
                out.at3(b, p, j) = s;
            }
        }
    }
    return out;
}

}  // namespace kernels
}  // namespace dicot
