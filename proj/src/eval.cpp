#include "dicot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/kernels.hpp"
#include "dicot/rng.hpp"
#include "dicot/trainer.hpp"

namespace dicot {

void EmbeddingMatrix::validate() const {
    if (values.rank() != 2)
        throw ShapeError("embeddings must be N x F, got " + shape_to_string(values.shape));
    if (!labels.empty() && static_cast<int64_t>(labels.size()) != size())
        throw ShapeError("embedding label count does not match row count");
    if (!values.all_finite()) throw NumericsError("embeddings contain non-finite values");
}

EmbeddingMatrix embed_windows(const TimeSeriesBatch& dataset, const ModelParams& params,
                              const EncoderConfig& config) {
    dataset.validate();
    const int64_t N = dataset.size(), T = dataset.window_length(), D = dataset.dims();
    const int64_t F = config.embed_dim;
    EmbeddingMatrix out;
    out.values = Tensor::zeros({N, F});
    out.labels = dataset.labels;

    const int64_t chunk = 256;
    for (int64_t lo = 0; lo < N; lo += chunk) {
        const int64_t hi = std::min(N, lo + chunk);
        Tensor part = Tensor::zeros({hi - lo, T, D});
        std::copy(dataset.values.data.begin() + lo * T * D,
                  dataset.values.data.begin() + hi * T * D, part.data.begin());
        Tensor z = encode(part, params, config);
        std::copy(z.data.begin(), z.data.end(), out.values.data.begin() + lo * F);
    }
    out.validate();
    return out;
}

StandardizeStats standardize_fit(const Tensor& emb) {
    if (emb.rank() != 2) throw ShapeError("standardize expects N x F, got " + shape_to_string(emb.shape));
    const int64_t N = emb.shape[0], F = emb.shape[1];
    StandardizeStats stats;
    stats.mean.assign(static_cast<size_t>(F), 0.0);
    stats.stddev.assign(static_cast<size_t>(F), 0.0);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f) stats.mean[static_cast<size_t>(f)] += emb.at2(n, f);
    for (double& m : stats.mean) m /= static_cast<double>(N);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f) {
            const double d = emb.at2(n, f) - stats.mean[static_cast<size_t>(f)];
            stats.stddev[static_cast<size_t>(f)] += d * d;
        }
    for (double& s : stats.stddev) s = std::sqrt(s / static_cast<double>(N));
    return stats;
}

Tensor standardize_apply(const Tensor& emb, const StandardizeStats& stats) {
    if (emb.rank() != 2) throw ShapeError("standardize expects N x F, got " + shape_to_string(emb.shape));
    const int64_t N = emb.shape[0], F = emb.shape[1];
    if (static_cast<size_t>(F) != stats.mean.size())
        throw ShapeError("standardize stats were fit for " + std::to_string(stats.mean.size()) +
                         " features, input has " + std::to_string(F));
    Tensor out = Tensor::zeros({N, F});
    for (int64_t f = 0; f < F; ++f) {
        const double mu = stats.mean[static_cast<size_t>(f)];
        const double sd = stats.stddev[static_cast<size_t>(f)];
        if (sd < 1e-12) continue;  // degenerate feature maps to 0
        for (int64_t n = 0; n < N; ++n) out.at2(n, f) = (emb.at2(n, f) - mu) / sd;
    }
    return out;
}

KnnResult knn1(const Tensor& train_emb, const std::vector<int64_t>& train_labels,
               const Tensor& test_emb, const std::vector<int64_t>& test_labels) {
    if (train_emb.rank() != 2 || test_emb.rank() != 2)
        throw ShapeError("knn1 expects rank-2 embeddings");
    const int64_t Ntr = train_emb.shape[0], F = train_emb.shape[1];
    const int64_t Nte = test_emb.shape[0];
    if (Ntr < 1) throw ConfigError("knn1 reference set is empty");
    if (test_emb.shape[1] != F)
        throw ShapeError("knn1 feature mismatch: " + std::to_string(F) + " vs " +
                         std::to_string(test_emb.shape[1]));
    if (static_cast<int64_t>(train_labels.size()) != Ntr)
        throw ShapeError("knn1 reference labels do not match reference rows");
    if (!test_labels.empty() && static_cast<int64_t>(test_labels.size()) != Nte)
        throw ShapeError("knn1 test labels do not match test rows");

    KnnResult result;
    result.predictions.resize(static_cast<size_t>(Nte));
    int64_t correct = 0;
    for (int64_t i = 0; i < Nte; ++i) {
        const double* x = &test_emb.data[static_cast<size_t>(i * F)];
        double best = 0.0;
        int64_t best_idx = -1;
        for (int64_t r = 0; r < Ntr; ++r) {
            const double* y = &train_emb.data[static_cast<size_t>(r * F)];
            double d2 = 0.0;
            for (int64_t f = 0; f < F; ++f) {
                const double d = x[f] - y[f];
                d2 += d * d;
            }
            if (best_idx < 0 || d2 < best) {
                best = d2;
                best_idx = r;
            }
        }
        result.predictions[static_cast<size_t>(i)] = train_labels[static_cast<size_t>(best_idx)];
        if (!test_labels.empty() &&
            result.predictions[static_cast<size_t>(i)] == test_labels[static_cast<size_t>(i)])
            ++correct;
    }
    if (!test_labels.empty())
        result.accuracy = static_cast<double>(correct) / static_cast<double>(Nte);
    return result;
}

namespace {

// class id -> member indices, ascending class then index; -1 skipped
std::map<int64_t, std::vector<int64_t>> by_class(const std::vector<int64_t>& labels) {
    std::map<int64_t, std::vector<int64_t>> groups;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) groups[labels[i]].push_back(static_cast<int64_t>(i));
    return groups;
}

// first m of a seeded partial shuffle
std::vector<int64_t> draw_without_replacement(std::vector<int64_t> pool, int64_t m, Rng& rng) {
    const int64_t n = static_cast<int64_t>(pool.size());
    if (m >= n) return pool;
    for (int64_t i = 0; i < m; ++i) {
        const int64_t j = uniform_int(rng, i, n - 1);
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(m));
    return pool;
}

}  // namespace

std::vector<int64_t> subsample_per_class(const std::vector<int64_t>& labels, int64_t m_per_class,
                                         uint64_t seed) {
    if (m_per_class < 1) throw ConfigError("m_per_class must be >= 1");
    Rng rng = make_rng(seed);
    std::vector<int64_t> out;
    for (auto& [cls, members] : by_class(labels)) {
        (void)cls;
        auto picked = draw_without_replacement(members, m_per_class, rng);
        out.insert(out.end(), picked.begin(), picked.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int64_t> subsample_fraction(const std::vector<int64_t>& labels, double frac,
                                        uint64_t seed) {
    if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
    auto groups = by_class(labels);
    int64_t n_labeled = 0;
    for (auto& [cls, members] : groups) {
        (void)cls;
        n_labeled += static_cast<int64_t>(members.size());
    }
    if (n_labeled == 0) throw ConfigError("no labeled instances to subsample");
    const int64_t target = std::max<int64_t>(1, std::llround(frac * static_cast<double>(n_labeled)));

    // proportional counts by largest remainder, then a floor of 1 per class
    std::vector<int64_t> class_ids;
    std::vector<int64_t> base;
    std::vector<double> remainder;
    int64_t assigned = 0;
    for (auto& [cls, members] : groups) {
        const double share = static_cast<double>(target) * static_cast<double>(members.size()) /
                             static_cast<double>(n_labeled);
        class_ids.push_back(cls);
        base.push_back(static_cast<int64_t>(std::floor(share)));
        remainder.push_back(share - std::floor(share));
        assigned += base.back();
    }
    std::vector<size_t> order(class_ids.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
    for (size_t oi = 0; oi < order.size() && assigned < target; ++oi) {
        ++base[order[oi]];
        ++assigned;
    }

    Rng rng = make_rng(seed);
    std::vector<int64_t> out;
    size_t gi = 0;
    for (auto& [cls, members] : groups) {
        (void)cls;
        int64_t m = std::max<int64_t>(1, base[gi]);
        m = std::min<int64_t>(m, static_cast<int64_t>(members.size()));
        auto picked = draw_without_replacement(members, m, rng);
        out.insert(out.end(), picked.begin(), picked.end());
        ++gi;
    }
    std::sort(out.begin(), out.end());
    return out;
}

double linear_probe(const Tensor& train_emb, const std::vector<int64_t>& train_labels,
                    const Tensor& test_emb, const std::vector<int64_t>& test_labels) {
    if (train_emb.rank() != 2 || test_emb.rank() != 2)
        throw ShapeError("linear_probe expects rank-2 embeddings");
    const int64_t Ntr = train_emb.shape[0], F = train_emb.shape[1];
    const int64_t Nte = test_emb.shape[0];
    if (static_cast<int64_t>(train_labels.size()) != Ntr ||
        static_cast<int64_t>(test_labels.size()) != Nte)
        throw ShapeError("linear_probe label counts do not match embeddings");
    if (test_emb.shape[1] != F) throw ShapeError("linear_probe feature mismatch");

    std::map<int64_t, int64_t> remap;
    for (int64_t l : train_labels)
        if (l >= 0) remap.emplace(l, 0);
    if (remap.size() < 2) throw ConfigError("linear_probe needs at least two classes in train labels");
    int64_t next_id = 0;
    for (auto& kv : remap) kv.second = next_id++;
    const int64_t C = next_id;

    const StandardizeStats stats = standardize_fit(train_emb);
    const Tensor Xtr = standardize_apply(train_emb, stats);
    const Tensor Xte = standardize_apply(test_emb, stats);

    constexpr double kLambda = 1e-4;
    constexpr double kLr = 1e-2;
    constexpr int kIters = 500;

    ModelParams probe;
    probe.tensors.push_back({"W", Tensor::zeros({C, F})});
    probe.tensors.push_back({"b", Tensor::zeros({C})});
    OptimizerState state = OptimizerState::like(probe);
    OptimizerConfig cfg;  // betas/eps defaults; decay handled via the L2 term
    cfg.weight_decay = 0.0;

    std::vector<int64_t> y(static_cast<size_t>(Ntr));
    for (int64_t n = 0; n < Ntr; ++n) y[static_cast<size_t>(n)] = remap.at(train_labels[static_cast<size_t>(n)]);

    for (int it = 0; it < kIters; ++it) {
        const Tensor logits = kernels::bias_add(kernels::dense(Xtr, probe.tensors[0].value),
                                                probe.tensors[1].value);
        Tensor G = Tensor::zeros({Ntr, C});
        for (int64_t n = 0; n < Ntr; ++n) {
            const double* row = &logits.data[static_cast<size_t>(n * C)];
            double m = row[0];
            for (int64_t c = 1; c < C; ++c) m = std::max(m, row[c]);
            double sum = 0.0;
            for (int64_t c = 0; c < C; ++c) sum += std::exp(row[c] - m);
            double* grow = &G.data[static_cast<size_t>(n * C)];
            for (int64_t c = 0; c < C; ++c) grow[c] = std::exp(row[c] - m) / sum;
            grow[y[static_cast<size_t>(n)]] -= 1.0;
        }
        for (double& v : G.data) v /= static_cast<double>(Ntr);

        std::vector<Tensor> grads;
        grads.push_back(Tensor::zeros({C, F}));
        grads.push_back(Tensor::zeros({C}));
        for (int64_t n = 0; n < Ntr; ++n) {
            const double* xrow = &Xtr.data[static_cast<size_t>(n * F)];
            const double* grow = &G.data[static_cast<size_t>(n * C)];
            for (int64_t c = 0; c < C; ++c) {
                double* wrow = &grads[0].data[static_cast<size_t>(c * F)];
                const double gv = grow[c];
                for (int64_t f = 0; f < F; ++f) wrow[f] += gv * xrow[f];
                grads[1].data[static_cast<size_t>(c)] += gv;
            }
        }
        const Tensor& W = probe.tensors[0].value;
        for (size_t e = 0; e < W.data.size(); ++e) grads[0].data[e] += 2.0 * kLambda * W.data[e];

        adamw_step(probe, grads, state, kLr, cfg);
    }

    const Tensor logits = kernels::bias_add(kernels::dense(Xte, probe.tensors[0].value),
                                            probe.tensors[1].value);
    int64_t correct = 0;
    for (int64_t n = 0; n < Nte; ++n) {
        const double* row = &logits.data[static_cast<size_t>(n * C)];
        int64_t arg = 0;
        for (int64_t c = 1; c < C; ++c)
            if (row[c] > row[arg]) arg = c;
        // map prediction back to the original label id
        int64_t pred = -1;
        for (const auto& kv : remap)
            if (kv.second == arg) {
                pred = kv.first;
                break;
            }
        if (pred == test_labels[static_cast<size_t>(n)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(Nte);
}

namespace {

double dist2(const double* a, const double* b, int64_t F) {
    double d2 = 0.0;
    for (int64_t f = 0; f < F; ++f) {
        const double d = a[f] - b[f];
        d2 += d * d;
    }
    return d2;
}

}  // namespace

std::vector<int64_t> kmeans(const Tensor& emb, int n_clusters, uint64_t seed, int max_iter) {
    if (emb.rank() != 2) throw ShapeError("kmeans expects N x F embeddings");
    const int64_t N = emb.shape[0], F = emb.shape[1];
    if (n_clusters < 1) throw ConfigError("kmeans needs n_clusters >= 1");
    if (n_clusters > N)
        throw ConfigError("kmeans: n_clusters " + std::to_string(n_clusters) + " exceeds N=" +
                          std::to_string(N));
    Rng rng = make_rng(seed);
    const int64_t K = n_clusters;

    // k-means++ seeding
    Tensor centers = Tensor::zeros({K, F});
    std::vector<double> d2(static_cast<size_t>(N), 0.0);
    {
        const int64_t first = uniform_int(rng, 0, N - 1);
        std::copy(emb.data.begin() + first * F, emb.data.begin() + (first + 1) * F,
                  centers.data.begin());
        for (int64_t n = 0; n < N; ++n)
            d2[static_cast<size_t>(n)] = dist2(&emb.data[static_cast<size_t>(n * F)],
                                               &centers.data[0], F);
        for (int64_t c = 1; c < K; ++c) {
            double total = 0.0;
            for (double v : d2) total += v;
            int64_t pick;
            if (total > 0.0) {
                const double r = uniform_real(rng, 0.0, total);
                double cum = 0.0;
                pick = N - 1;
                for (int64_t n = 0; n < N; ++n) {
                    cum += d2[static_cast<size_t>(n)];
                    if (cum >= r) {
                        pick = n;
                        break;
                    }
                }
            } else {
                pick = uniform_int(rng, 0, N - 1);
            }
            double* crow = &centers.data[static_cast<size_t>(c * F)];
            std::copy(emb.data.begin() + pick * F, emb.data.begin() + (pick + 1) * F, crow);
            for (int64_t n = 0; n < N; ++n) {
                const double d = dist2(&emb.data[static_cast<size_t>(n * F)], crow, F);
                if (d < d2[static_cast<size_t>(n)]) d2[static_cast<size_t>(n)] = d;
            }
        }
    }

    std::vector<int64_t> assign(static_cast<size_t>(N), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (int64_t n = 0; n < N; ++n) {
            const double* x = &emb.data[static_cast<size_t>(n * F)];
            int64_t arg = 0;
            double best = dist2(x, &centers.data[0], F);
            for (int64_t c = 1; c < K; ++c) {
                const double d = dist2(x, &centers.data[static_cast<size_t>(c * F)], F);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            if (assign[static_cast<size_t>(n)] != arg) {
                assign[static_cast<size_t>(n)] = arg;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<int64_t> counts(static_cast<size_t>(K), 0);
        Tensor sums = Tensor::zeros({K, F});
        for (int64_t n = 0; n < N; ++n) {
            const int64_t c = assign[static_cast<size_t>(n)];
            ++counts[static_cast<size_t>(c)];
            const double* x = &emb.data[static_cast<size_t>(n * F)];
            double* srow = &sums.data[static_cast<size_t>(c * F)];
            for (int64_t f = 0; f < F; ++f) srow[f] += x[f];
        }
        for (int64_t c = 0; c < K; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) continue;
            double* crow = &centers.data[static_cast<size_t>(c * F)];
            const double* srow = &sums.data[static_cast<size_t>(c * F)];
            for (int64_t f = 0; f < F; ++f)
                crow[f] = srow[f] / static_cast<double>(counts[static_cast<size_t>(c)]);
        }
        for (int64_t c = 0; c < K; ++c) {
            if (counts[static_cast<size_t>(c)] != 0) continue;
            // re-seed to the farthest point from its own centroid
            int64_t far_idx = 0;
            double far_d = -1.0;
            for (int64_t n = 0; n < N; ++n) {
                const double d = dist2(&emb.data[static_cast<size_t>(n * F)],
                                       &centers.data[static_cast<size_t>(assign[n] * F)], F);
                if (d > far_d) {
                    far_d = d;
                    far_idx = n;
                }
            }
            std::copy(emb.data.begin() + far_idx * F, emb.data.begin() + (far_idx + 1) * F,
                      centers.data.begin() + c * F);
            assign[static_cast<size_t>(far_idx)] = c;
        }
    }
    return assign;
}

double kmeans_inertia(const Tensor& emb, const std::vector<int64_t>& assign) {
    if (emb.rank() != 2) throw ShapeError("kmeans_inertia expects N x F embeddings");
    const int64_t N = emb.shape[0], F = emb.shape[1];
    if (static_cast<int64_t>(assign.size()) != N)
        throw ShapeError("assignment length does not match embedding rows");
    int64_t K = 0;
    for (int64_t a : assign) K = std::max(K, a + 1);
    Tensor sums = Tensor::zeros({K, F});
    std::vector<int64_t> counts(static_cast<size_t>(K), 0);
    for (int64_t n = 0; n < N; ++n) {
        const int64_t c = assign[static_cast<size_t>(n)];
        ++counts[static_cast<size_t>(c)];
        for (int64_t f = 0; f < F; ++f) sums.at2(c, f) += emb.at2(n, f);
    }
    double inertia = 0.0;
    for (int64_t n = 0; n < N; ++n) {
        const int64_t c = assign[static_cast<size_t>(n)];
        for (int64_t f = 0; f < F; ++f) {
            const double d = emb.at2(n, f) - sums.at2(c, f) / static_cast<double>(counts[static_cast<size_t>(c)]);
            inertia += d * d;
        }
    }
    return inertia;
}

namespace {

struct Contingency {
    std::vector<std::vector<int64_t>> n;  // RxS counts
    std::vector<int64_t> row, col;
    int64_t total = 0;
};

Contingency contingency(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
    if (a.size() != b.size())
        throw ShapeError("cluster label vectors differ in length: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    if (a.empty()) throw ShapeError("cluster label vectors are empty");
    std::map<int64_t, int64_t> ra, rb;
    for (int64_t v : a) ra.emplace(v, 0);
    for (int64_t v : b) rb.emplace(v, 0);
    int64_t next = 0;
    for (auto& kv : ra) kv.second = next++;
    next = 0;
    for (auto& kv : rb) kv.second = next++;

    Contingency c;
    c.row.assign(ra.size(), 0);
    c.col.assign(rb.size(), 0);
    c.n.assign(ra.size(), std::vector<int64_t>(rb.size(), 0));
    for (size_t i = 0; i < a.size(); ++i) {
        const int64_t x = ra.at(a[i]);
        const int64_t y = rb.at(b[i]);
        ++c.n[static_cast<size_t>(x)][static_cast<size_t>(y)];
        ++c.row[static_cast<size_t>(x)];
        ++c.col[static_cast<size_t>(y)];
        ++c.total;
    }
    return c;
}

double entropy(const std::vector<int64_t>& counts, int64_t total) {
    double h = 0.0;
    for (int64_t v : counts) {
        if (v == 0) continue;
        const double p = static_cast<double>(v) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double nmi(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
    const Contingency c = contingency(a, b);
    const double ha = entropy(c.row, c.total);
    const double hb = entropy(c.col, c.total);
    if (ha == 0.0 || hb == 0.0) return 0.0;
    double mi = 0.0;
    const double n = static_cast<double>(c.total);
    for (size_t i = 0; i < c.row.size(); ++i) {
        for (size_t j = 0; j < c.col.size(); ++j) {
            const int64_t nij = c.n[i][j];
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / n;
            mi += pij * std::log(n * static_cast<double>(nij) /
                                 (static_cast<double>(c.row[i]) * static_cast<double>(c.col[j])));
        }
    }
    const double v = mi / (0.5 * (ha + hb));
    return std::min(1.0, std::max(0.0, v));
}

double ari(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
    const Contingency c = contingency(a, b);
    auto comb2 = [](int64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); };
    double index = 0.0;
    for (const auto& row : c.n)
        for (int64_t v : row) index += comb2(v);
    double sum_a = 0.0, sum_b = 0.0;
    for (int64_t v : c.row) sum_a += comb2(v);
    for (int64_t v : c.col) sum_b += comb2(v);
    const double pairs = comb2(c.total);
    if (pairs == 0.0) return 0.0;
    const double expected = sum_a * sum_b / pairs;
    const double maximum = 0.5 * (sum_a + sum_b);
    const double denom = maximum - expected;
    if (std::abs(denom) < 1e-300) return 0.0;
    return (index - expected) / denom;
}

TimeSeriesBatch select_channels(const TimeSeriesBatch& dataset, const std::vector<int64_t>& idx) {
    dataset.validate();
    if (idx.empty()) throw ConfigError("channel selection is empty");
    const int64_t D = dataset.dims();
    for (int64_t i : idx)
        if (i < 0 || i >= D)
            throw ConfigError("channel index " + std::to_string(i) + " outside [0, " +
                              std::to_string(D) + ")");
    const int64_t N = dataset.size(), T = dataset.window_length();
    const int64_t Dn = static_cast<int64_t>(idx.size());
    TimeSeriesBatch out;
    out.labels = dataset.labels;
    out.n_classes = dataset.n_classes;
    out.values = Tensor::zeros({N, T, Dn});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t t = 0; t < T; ++t)
            for (int64_t d = 0; d < Dn; ++d)
                out.values.at3(n, t, d) = dataset.values.at3(n, t, idx[static_cast<size_t>(d)]);
    out.validate();
    return out;
}

void save_embeddings_csv(const EmbeddingMatrix& emb, const std::string& path) {
    emb.validate();
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    const int64_t N = emb.size(), F = emb.dim();
    for (int64_t i = 0; i < F; ++i) std::fprintf(f, "f%lld,", static_cast<long long>(i));
    std::fputs("label\n", f);
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t i = 0; i < F; ++i) std::fprintf(f, "%.17g,", emb.values.at2(n, i));
        const long long label = emb.labels.empty() ? -1LL : static_cast<long long>(emb.labels[static_cast<size_t>(n)]);
        std::fprintf(f, "%lld\n", label);
    }
    if (std::fclose(f) != 0) throw FormatError("write failed for '" + path + "'");
}

EmbeddingMatrix load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> head;
    size_t pos = 0;
    while (pos <= line.size()) {
        size_t next = line.find(',', pos);
        if (next == std::string::npos) next = line.size();
        head.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    if (head.size() < 2 || head.back() != "label")
        throw FormatError("embedding CSV must end with a 'label' column");
    const int64_t F = static_cast<int64_t>(head.size()) - 1;
    for (int64_t i = 0; i < F; ++i)
        if (head[static_cast<size_t>(i)] != "f" + std::to_string(i))
            throw FormatError("embedding CSV header column " + std::to_string(i) +
                              " must be f" + std::to_string(i));

    std::vector<double> values;
    std::vector<int64_t> labels;
    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> toks;
        pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            toks.push_back(line.substr(pos, next - pos));
            pos = next + 1;
        }
        if (static_cast<int64_t>(toks.size()) != F + 1)
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(F + 1) + " fields, got " + std::to_string(toks.size()));
        try {
            for (int64_t i = 0; i < F; ++i) {
                const double v = std::stod(toks[static_cast<size_t>(i)]);
                if (!std::isfinite(v))
                    throw FormatError("line " + std::to_string(line_no) + ": non-finite value");
                values.push_back(v);
            }
            labels.push_back(std::stoll(toks.back()));
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception&) {
            throw FormatError("line " + std::to_string(line_no) + ": cannot parse embedding row");
        }
    }
    if (labels.empty()) throw FormatError("'" + path + "' has no embedding rows");
    EmbeddingMatrix emb;
    emb.values = Tensor({static_cast<int64_t>(labels.size()), F}, std::move(values));
    emb.labels = std::move(labels);
    emb.validate();
    return emb;
}

void save_embeddings_bin(const EmbeddingMatrix& emb, const std::string& path) {
    emb.validate();
    ModelParams container;
    container.tensors.push_back({"values", emb.values});
    Tensor labels = Tensor::zeros({emb.size()});
    for (int64_t i = 0; i < emb.size(); ++i)
        labels.at(i) = emb.labels.empty() ? -1.0 : static_cast<double>(emb.labels[static_cast<size_t>(i)]);
    container.tensors.push_back({"labels", labels});
    save_model(container, path);
}

EmbeddingMatrix load_embeddings_bin(const std::string& path) {
    const ModelParams container = load_model(path);
    const Tensor* values = container.find("values");
    const Tensor* labels = container.find("labels");
    if (!values || !labels) throw FormatError("'" + path + "' is not an embedding container");
    if (values->rank() != 2 || labels->rank() != 1 || labels->shape[0] != values->shape[0])
        throw FormatError("embedding container has inconsistent shapes");
    EmbeddingMatrix emb;
    emb.values = *values;
    emb.labels.resize(static_cast<size_t>(labels->shape[0]));
    for (int64_t i = 0; i < labels->shape[0]; ++i)
        emb.labels[static_cast<size_t>(i)] = static_cast<int64_t>(labels->at(i));
    emb.validate();
    return emb;
}

}  // namespace dicot
