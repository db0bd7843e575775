#include "dicot/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/kernels.hpp"

namespace dicot {

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw ConfigError("temperature must be > 0, got " + std::to_string(tau));
}

Tensor similarity(const Tensor& z, double tau) { return kernels::pair_similarity(z, tau); }

TargetVector targets(int k, PositiveMode mode, Rng* rng) {
    if (k < 2) throw ConfigError("target vector needs k >= 2, got " + std::to_string(k));
    TargetVector tv;
    switch (mode) {
        case PositiveMode::Preceding: {
            tv.primary.resize(static_cast<size_t>(k));
            tv.primary[0] = 0;
            for (int j = 1; j < k; ++j) tv.primary[static_cast<size_t>(j)] = j - 1;
            break;
        }
        case PositiveMode::Next: {
            tv.primary.resize(static_cast<size_t>(k));
            for (int j = 0; j + 1 < k; ++j) tv.primary[static_cast<size_t>(j)] = j + 1;
            tv.primary[static_cast<size_t>(k - 1)] = k - 1;
            break;
        }
        case PositiveMode::Bidirectional: {
            tv = targets(k, PositiveMode::Preceding);
            tv.secondary = targets(k, PositiveMode::Next).primary;
            break;
        }
        case PositiveMode::Shuffled: {
            if (rng == nullptr)
                throw ConfigError("shuffled positives need a random generator");
            tv.primary.resize(static_cast<size_t>(k));
            tv.primary[0] = uniform_int(*rng, 0, k - 1);
            for (int j = 1; j < k; ++j) {
                // uniform over {0..k-1} \ {j}
                int64_t r = uniform_int(*rng, 0, k - 2);
                if (r >= j) ++r;
                tv.primary[static_cast<size_t>(j)] = r;
            }
            break;
        }
    }
    return tv;
}

namespace {

void check_inputs(const Tensor& S, const std::vector<int64_t>& t) {
    if (S.rank() != 3 || S.shape[1] != S.shape[2])
        throw ShapeError("score tensor must be B x k x k, got " + shape_to_string(S.shape));
    const int64_t k = S.shape[1];
    if (static_cast<int64_t>(t.size()) != k)
        throw ShapeError("target vector length " + std::to_string(t.size()) +
                         " does not match k=" + std::to_string(k));
    for (int64_t v : t)
        if (v < 0 || v >= k)
            throw ShapeError("target index " + std::to_string(v) + " out of range for k=" +
                             std::to_string(k));
    if (!S.all_finite()) throw NumericsError("score tensor contains non-finite values");
}

double one_direction_loss(const Tensor& S, const std::vector<int64_t>& t) {
    const int64_t B = S.shape[0], k = S.shape[1];
    double total = 0.0;
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            const double* row = &S.data[static_cast<size_t>((i * k + j) * k)];
            double m = row[0];
            for (int64_t p = 1; p < k; ++p) m = std::max(m, row[p]);
            double sum = 0.0;
            for (int64_t p = 0; p < k; ++p) sum += std::exp(row[p] - m);
            total += m + std::log(sum) - row[t[static_cast<size_t>(j)]];
        }
    }
    return total / static_cast<double>(B * k);
}

void one_direction_grad(const Tensor& S, const std::vector<int64_t>& t, double weight,
                        Tensor& out) {
    const int64_t B = S.shape[0], k = S.shape[1];
    const double scale = weight / static_cast<double>(B * k);
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            const double* row = &S.data[static_cast<size_t>((i * k + j) * k)];
            double* orow = &out.data[static_cast<size_t>((i * k + j) * k)];
            double m = row[0];
            for (int64_t p = 1; p < k; ++p) m = std::max(m, row[p]);
            double sum = 0.0;
            for (int64_t p = 0; p < k; ++p) sum += std::exp(row[p] - m);
            for (int64_t p = 0; p < k; ++p) orow[p] += scale * (std::exp(row[p] - m) / sum);
            orow[t[static_cast<size_t>(j)]] -= scale;
        }
    }
}

}  // namespace

double dicot_loss(const Tensor& S, const TargetVector& tv) {
    check_inputs(S, tv.primary);
    double loss = one_direction_loss(S, tv.primary);
    if (tv.secondary) {
        check_inputs(S, *tv.secondary);
        loss = 0.5 * (loss + one_direction_loss(S, *tv.secondary));
    }
    if (!std::isfinite(loss)) throw NumericsError("loss is not finite");
    return loss;
}

Tensor dicot_loss_grad(const Tensor& S, const TargetVector& tv) {
    check_inputs(S, tv.primary);
    Tensor out = Tensor::zeros(S.shape);
    if (tv.secondary) {
        check_inputs(S, *tv.secondary);
        one_direction_grad(S, tv.primary, 0.5, out);
        one_direction_grad(S, *tv.secondary, 0.5, out);
    } else {
        one_direction_grad(S, tv.primary, 1.0, out);
    }
    return out;
}

}  // namespace dicot
