#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicot/data.hpp"
#include "dicot/encoder.hpp"
#include "dicot/tensor.hpp"

namespace dicot {

struct EmbeddingMatrix {
    Tensor values;                // N x F
    std::vector<int64_t> labels;  // empty or length N, -1 = unlabeled
    int64_t size() const { return values.shape.empty() ? 0 : values.shape[0]; }
    int64_t dim() const { return values.shape[1]; }
    void validate() const;
};

// One embedding per full window, projection head bypassed.
EmbeddingMatrix embed_windows(const TimeSeriesBatch& dataset, const ModelParams& params,
                              const EncoderConfig& config);

struct StandardizeStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population std; entries < 1e-12 zero the feature
};

StandardizeStats standardize_fit(const Tensor& train_emb);
Tensor standardize_apply(const Tensor& emb, const StandardizeStats& stats);

struct KnnResult {
    std::vector<int64_t> predictions;
    double accuracy = -1.0;  // -1 when test labels are unknown
};

// Euclidean 1-nearest-neighbour; distance ties break to the lowest
// reference index. Pass test_labels to get an accuracy.
KnnResult knn1(const Tensor& train_emb, const std::vector<int64_t>& train_labels,
               const Tensor& test_emb, const std::vector<int64_t>& test_labels = {});

// Uniform without replacement inside each class; classes smaller than
// m_per_class contribute everything. Returned indices are sorted.
std::vector<int64_t> subsample_per_class(const std::vector<int64_t>& labels, int64_t m_per_class,
                                         uint64_t seed);

// Stratified sample of round(frac * N) indices with proportional per-class
// counts (largest remainder), each present class keeps at least one.
std::vector<int64_t> subsample_fraction(const std::vector<int64_t>& labels, double frac,
                                        uint64_t seed);

// Multinomial logistic regression on standardized embeddings: softmax cross
// entropy plus lambda * ||W||^2 (lambda = 1e-4), full batch, AdamW stepper
// at lr 1e-2 for 500 iterations from zero init. Returns test accuracy.
double linear_probe(const Tensor& train_emb, const std::vector<int64_t>& train_labels,
                    const Tensor& test_emb, const std::vector<int64_t>& test_labels);

// k-means++ seeding, Lloyd iterations until the assignment fixpoint or
// max_iter; an emptied cluster is re-seeded to the farthest point.
std::vector<int64_t> kmeans(const Tensor& emb, int n_clusters, uint64_t seed, int max_iter = 100);

double kmeans_inertia(const Tensor& emb, const std::vector<int64_t>& assign);

// Arithmetic-mean entropy normalization, natural logs; 0 when either side
// carries no information.
double nmi(const std::vector<int64_t>& a, const std::vector<int64_t>& b);
// Contingency-table adjusted Rand index; 0 when the adjustment denominator
// vanishes.
double ari(const std::vector<int64_t>& a, const std::vector<int64_t>& b);

TimeSeriesBatch select_channels(const TimeSeriesBatch& dataset, const std::vector<int64_t>& idx);

// CSV header f0..f{F-1},label; binary reuses the model tensor container
// with tensors "values" (N x F) and "labels" (N).
void save_embeddings_csv(const EmbeddingMatrix& emb, const std::string& path);
EmbeddingMatrix load_embeddings_csv(const std::string& path);
void save_embeddings_bin(const EmbeddingMatrix& emb, const std::string& path);
EmbeddingMatrix load_embeddings_bin(const std::string& path);

}  // namespace dicot
