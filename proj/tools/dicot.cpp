#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dicot/bench.hpp"
#include "dicot/config.hpp"
#include "dicot/data.hpp"
#include "dicot/encoder.hpp"
#include "dicot/errors.hpp"
#include "dicot/eval.hpp"
#include "dicot/objective.hpp"
#include "dicot/partition.hpp"
#include "dicot/trainer.hpp"

namespace {

using namespace dicot;

struct ReportRow {
    std::string task;
    std::string metric;
    double value = 0.0;
    std::string seed;
};

void emit_report(const std::vector<ReportRow>& rows, const std::string& out_path) {
    std::string text = "task,metric,value,seed\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%s\n", r.task.c_str(), r.metric.c_str(),
                      r.value, r.seed.c_str());
        text += buf;
    }
    std::fputs(text.c_str(), stdout);
    if (!out_path.empty()) {
        std::FILE* f = std::fopen(out_path.c_str(), "wb");
        if (!f) throw FormatError("cannot open '" + out_path + "' for writing");
        std::fputs(text.c_str(), f);
        if (std::fclose(f) != 0) throw FormatError("write failed for '" + out_path + "'");
    }
}

void append_mean(std::vector<ReportRow>& rows, const std::string& task, const std::string& metric) {
    double sum = 0.0;
    int64_t n = 0;
    for (const auto& r : rows)
        if (r.task == task && r.metric == metric) {
            sum += r.value;
            ++n;
        }
    if (n > 0) rows.push_back({task, metric, sum / static_cast<double>(n), "mean"});
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

TimeSeriesBatch load_dataset(const std::string& path) {
    if (has_suffix(path, ".tsv") || has_suffix(path, ".txt") || has_suffix(path, ".csv"))
        return load_ucr_tsv(path);
    return load_binary(path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    if (has_suffix(path, ".csv")) return load_embeddings_csv(path);
    return load_embeddings_bin(path);
}

std::vector<uint64_t> parse_seeds(const std::string& text) {
    std::vector<uint64_t> seeds;
    for (int64_t v : parse_int_list(text, "seeds")) seeds.push_back(static_cast<uint64_t>(v));
    return seeds;
}

std::vector<int64_t> labeled_check(const EmbeddingMatrix& emb, const std::string& which) {
    if (emb.labels.empty()) throw ConfigError(which + " embeddings carry no labels");
    for (int64_t l : emb.labels)
        if (l < 0) throw ConfigError(which + " embeddings contain unlabeled rows");
    return emb.labels;
}

struct PretrainFlags {
    std::string config_path, data_path, out_path, log_path, select_channels;
    std::string channels, kernels, split_mode, positive_mode, projection;
    std::optional<int64_t> seed, iters, batch_size, k_fixed, k_min, k_max, embed_dim, projection_hidden;
    std::optional<double> tau, rho, base_lr, weight_decay, warmup_frac;
};

RunConfig resolve_config(const PretrainFlags& fl) {
    RunConfig cfg;
    if (!fl.config_path.empty()) cfg = load_run_config(fl.config_path);
    if (!fl.channels.empty()) apply_config_key(cfg, "channels", fl.channels);
    if (!fl.kernels.empty()) apply_config_key(cfg, "kernel_sizes", fl.kernels);
    if (!fl.split_mode.empty()) apply_config_key(cfg, "split_mode", fl.split_mode);
    if (!fl.positive_mode.empty()) apply_config_key(cfg, "positive_mode", fl.positive_mode);
    if (!fl.projection.empty()) apply_config_key(cfg, "projection", fl.projection);
    if (fl.seed) cfg.optimizer.seed = static_cast<uint64_t>(*fl.seed);
    if (fl.iters) cfg.optimizer.total_iters = *fl.iters;
    if (fl.batch_size) cfg.optimizer.batch_size = *fl.batch_size;
    if (fl.k_fixed) cfg.partition.k_fixed = static_cast<int>(*fl.k_fixed);
    if (fl.k_min) cfg.partition.k_min = static_cast<int>(*fl.k_min);
    if (fl.k_max) cfg.partition.k_max = static_cast<int>(*fl.k_max);
    if (fl.embed_dim) cfg.encoder.embed_dim = static_cast<int>(*fl.embed_dim);
    if (fl.projection_hidden) {
        if (!cfg.encoder.projection) cfg.encoder.projection = ProjectionHead{};
        cfg.encoder.projection->hidden_dim = static_cast<int>(*fl.projection_hidden);
    }
    if (fl.tau) cfg.loss.tau = *fl.tau;
    if (fl.rho) cfg.partition.rho = *fl.rho;
    if (fl.base_lr) cfg.optimizer.base_lr = *fl.base_lr;
    if (fl.weight_decay) cfg.optimizer.weight_decay = *fl.weight_decay;
    if (fl.warmup_frac) cfg.optimizer.warmup_frac = *fl.warmup_frac;
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"Di-COT: self-supervised time-series representations via "
                 "divide-and-contrast pretraining"};
    app.require_subcommand(1);

    // partition
    auto* sub_partition = app.add_subcommand("partition", "Solve the sub-block geometry for one window");
    int64_t pt_T = 0;
    int pt_k = 0;
    double pt_rho = 0.5;
    sub_partition->add_option("--T", pt_T, "window length")->required();
    sub_partition->add_option("--k", pt_k, "requested block count")->required();
    sub_partition->add_option("--rho", pt_rho, "overlap ratio")->capture_default_str();
    sub_partition->callback([&]() {
        const PartitionPlan plan = plan_partition(pt_T, pt_k, pt_rho);
        std::printf("L=%lld s=%lld k_eff=%d\n", static_cast<long long>(plan.L),
                    static_cast<long long>(plan.s), plan.k);
        for (int j = 0; j < plan.k; ++j)
            std::printf("block %d: [%lld, %lld)\n", j, static_cast<long long>(j * plan.s),
                        static_cast<long long>(j * plan.s + plan.L));
    });

    // gen-synth
    auto* sub_gen = app.add_subcommand("gen-synth", "Generate the phase-randomized sine corpus");
    SyntheticSpec gen_spec;
    std::string gen_out;
    sub_gen->add_option("--n-per-class", gen_spec.n_per_class, "windows per class")->capture_default_str();
    sub_gen->add_option("--T", gen_spec.T, "window length")->capture_default_str();
    sub_gen->add_option("--D", gen_spec.D, "channels")->capture_default_str();
    sub_gen->add_option("--C", gen_spec.C, "classes")->capture_default_str();
    sub_gen->add_option("--noise", gen_spec.noise_sigma, "noise sigma")->capture_default_str();
    sub_gen->add_option("--cycles", gen_spec.cycles_base, "base cycles of class 0")->capture_default_str();
    sub_gen->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
    sub_gen->add_option("--out", gen_out, "output dataset (.bin)")->required();
    sub_gen->callback([&]() {
        const TimeSeriesBatch batch = gen_synthetic(gen_spec);
        save_binary(batch, gen_out);
        std::printf("wrote %lld windows (T=%lld D=%lld C=%lld) to %s\n",
                    static_cast<long long>(batch.size()), static_cast<long long>(batch.window_length()),
                    static_cast<long long>(batch.dims()), static_cast<long long>(batch.n_classes),
                    gen_out.c_str());
    });

    // convert
    auto* sub_convert = app.add_subcommand("convert", "Convert a dataset between formats");
    std::string cv_from = "tsv", cv_to = "bin", cv_in, cv_out;
    sub_convert->add_option("--from", cv_from, "source format (tsv)")->capture_default_str();
    sub_convert->add_option("--to", cv_to, "target format (bin)")->capture_default_str();
    sub_convert->add_option("--in", cv_in, "input path")->required();
    sub_convert->add_option("--out", cv_out, "output path")->required();
    sub_convert->callback([&]() {
        if (cv_from != "tsv" || cv_to != "bin")
            throw ConfigError("only tsv -> bin conversion is supported");
        const TimeSeriesBatch batch = load_ucr_tsv(cv_in);
        save_binary(batch, cv_out);
        std::printf("wrote %lld windows to %s\n", static_cast<long long>(batch.size()), cv_out.c_str());
    });

    // pretrain
    auto* sub_pretrain = app.add_subcommand("pretrain", "Self-supervised pretraining");
    PretrainFlags fl;
    sub_pretrain->add_option("--config", fl.config_path, "run config file");
    sub_pretrain->add_option("--data", fl.data_path, "training dataset")->required();
    sub_pretrain->add_option("--out", fl.out_path, "output model path")->required();
    sub_pretrain->add_option("--log", fl.log_path, "training log CSV");
    sub_pretrain->add_option("--select-channels", fl.select_channels, "comma list of channel indices");
    sub_pretrain->add_option("--channels", fl.channels, "conv channels override, comma list");
    sub_pretrain->add_option("--kernels", fl.kernels, "conv kernel sizes override, comma list");
    sub_pretrain->add_option("--split-mode", fl.split_mode, "uniform|fixed");
    sub_pretrain->add_option("--positive-mode", fl.positive_mode, "preceding|next|bidirectional|shuffled");
    sub_pretrain->add_option("--projection", fl.projection, "none|nonlinear");
    sub_pretrain->add_option("--projection-hidden", fl.projection_hidden, "head hidden width");
    sub_pretrain->add_option("--seed", fl.seed, "training seed");
    sub_pretrain->add_option("--iters", fl.iters, "total iterations");
    sub_pretrain->add_option("--batch-size", fl.batch_size, "windows per iteration");
    sub_pretrain->add_option("--k-fixed", fl.k_fixed, "fixed block count");
    sub_pretrain->add_option("--k-min", fl.k_min, "uniform k lower bound");
    sub_pretrain->add_option("--k-max", fl.k_max, "uniform k upper bound");
    sub_pretrain->add_option("--embed-dim", fl.embed_dim, "embedding dimension");
    sub_pretrain->add_option("--tau", fl.tau, "softmax temperature");
    sub_pretrain->add_option("--rho", fl.rho, "overlap ratio");
    sub_pretrain->add_option("--base-lr", fl.base_lr, "peak learning rate");
    sub_pretrain->add_option("--weight-decay", fl.weight_decay, "decoupled weight decay");
    sub_pretrain->add_option("--warmup-frac", fl.warmup_frac, "warmup fraction");
    sub_pretrain->callback([&]() {
        const RunConfig cfg = resolve_config(fl);
        cfg.validate();
        TimeSeriesBatch data = load_dataset(fl.data_path);
        if (!fl.select_channels.empty())
            data = select_channels(data, parse_int_list(fl.select_channels, "select-channels"));
        const PretrainResult result = pretrain(data, cfg.encoder, cfg.partition, cfg.loss, cfg.optimizer);
        save_model(result.params, fl.out_path);
        if (!fl.log_path.empty()) result.log.write_csv(fl.log_path);
        const double final_loss =
            result.log.records.empty() ? 0.0 : result.log.records.back().loss;
        std::printf("pretrained %lld iters in %.1fs, final loss %.6f, retries %lld, model %s\n",
                    static_cast<long long>(cfg.optimizer.total_iters), result.log.wall_seconds,
                    final_loss, static_cast<long long>(result.log.partition_retries),
                    fl.out_path.c_str());
    });

    // embed
    auto* sub_embed = app.add_subcommand("embed", "Embed whole windows with a frozen model");
    std::string em_model, em_data, em_out, em_format = "auto", em_select;
    sub_embed->add_option("--model", em_model, "model file")->required();
    sub_embed->add_option("--data", em_data, "dataset to embed")->required();
    sub_embed->add_option("--out", em_out, "output embeddings")->required();
    sub_embed->add_option("--format", em_format, "csv|bin|auto (by extension)")->capture_default_str();
    sub_embed->add_option("--select-channels", em_select, "comma list of channel indices");
    sub_embed->callback([&]() {
        const ModelParams params = load_model(em_model);
        const EncoderConfig config = config_from_params(params);
        TimeSeriesBatch data = load_dataset(em_data);
        if (!em_select.empty())
            data = select_channels(data, parse_int_list(em_select, "select-channels"));
        const EmbeddingMatrix emb = embed_windows(data, params, config);
        const bool csv = em_format == "csv" || (em_format == "auto" && has_suffix(em_out, ".csv"));
        if (csv)
            save_embeddings_csv(emb, em_out);
        else
            save_embeddings_bin(emb, em_out);
        std::printf("wrote %lld x %lld embeddings to %s\n", static_cast<long long>(emb.size()),
                    static_cast<long long>(emb.dim()), em_out.c_str());
    });

    // eval-knn
    auto* sub_knn = app.add_subcommand("eval-knn", "Budgeted 1NN classification");
    std::string kn_emb, kn_test_emb, kn_seeds = "1,2,3,4,5", kn_out;
    int64_t kn_budget = 10;
    sub_knn->add_option("--emb", kn_emb, "reference embeddings (train)")->required();
    sub_knn->add_option("--test-emb", kn_test_emb, "test embeddings; omitted = held-out split of --emb");
    sub_knn->add_option("--budget", kn_budget, "labeled references per class")->capture_default_str();
    sub_knn->add_option("--seeds", kn_seeds, "comma list")->capture_default_str();
    sub_knn->add_option("--out", kn_out, "report CSV path");
    sub_knn->callback([&]() {
        const EmbeddingMatrix emb = load_embeddings(kn_emb);
        const std::vector<int64_t> labels = labeled_check(emb, "reference");
        const StandardizeStats stats = standardize_fit(emb.values);
        const Tensor train_std = standardize_apply(emb.values, stats);

        std::vector<ReportRow> rows;
        for (uint64_t seed : parse_seeds(kn_seeds)) {
            const std::vector<int64_t> ref_idx = subsample_per_class(labels, kn_budget, seed);
            Tensor ref = Tensor::zeros({static_cast<int64_t>(ref_idx.size()), emb.dim()});
            std::vector<int64_t> ref_labels;
            for (size_t i = 0; i < ref_idx.size(); ++i) {
                std::copy(&train_std.data[static_cast<size_t>(ref_idx[i] * emb.dim())],
                          &train_std.data[static_cast<size_t>((ref_idx[i] + 1) * emb.dim())],
                          &ref.data[i * static_cast<size_t>(emb.dim())]);
                ref_labels.push_back(labels[static_cast<size_t>(ref_idx[i])]);
            }
            Tensor test;
            std::vector<int64_t> test_labels;
            if (!kn_test_emb.empty()) {
                const EmbeddingMatrix test_emb = load_embeddings(kn_test_emb);
                test_labels = labeled_check(test_emb, "test");
                test = standardize_apply(test_emb.values, stats);
            } else {
                std::vector<char> in_ref(static_cast<size_t>(emb.size()), 0);
                for (int64_t i : ref_idx) in_ref[static_cast<size_t>(i)] = 1;
                std::vector<int64_t> rest;
                for (int64_t i = 0; i < emb.size(); ++i)
                    if (!in_ref[static_cast<size_t>(i)]) rest.push_back(i);
                if (rest.empty()) throw ConfigError("budget covers every row; nothing left to classify");
                test = Tensor::zeros({static_cast<int64_t>(rest.size()), emb.dim()});
                for (size_t i = 0; i < rest.size(); ++i) {
                    std::copy(&train_std.data[static_cast<size_t>(rest[i] * emb.dim())],
                              &train_std.data[static_cast<size_t>((rest[i] + 1) * emb.dim())],
                              &test.data[i * static_cast<size_t>(emb.dim())]);
                    test_labels.push_back(labels[static_cast<size_t>(rest[i])]);
                }
            }
            const KnnResult res = knn1(ref, ref_labels, test, test_labels);
            rows.push_back({"knn1", "accuracy", res.accuracy, std::to_string(seed)});
        }
        append_mean(rows, "knn1", "accuracy");
        emit_report(rows, kn_out);
    });

    // eval-linear
    auto* sub_linear = app.add_subcommand("eval-linear", "Linear probe on frozen embeddings");
    std::string li_train, li_test, li_out;
    sub_linear->add_option("--train-emb", li_train, "train embeddings")->required();
    sub_linear->add_option("--test-emb", li_test, "test embeddings")->required();
    sub_linear->add_option("--out", li_out, "report CSV path");
    sub_linear->callback([&]() {
        const EmbeddingMatrix train = load_embeddings(li_train);
        const EmbeddingMatrix test = load_embeddings(li_test);
        const double acc = linear_probe(train.values, labeled_check(train, "train"), test.values,
                                        labeled_check(test, "test"));
        std::vector<ReportRow> rows{{"linear", "accuracy", acc, "0"}};
        append_mean(rows, "linear", "accuracy");
        emit_report(rows, li_out);
    });

    // eval-lowlabel
    auto* sub_low = app.add_subcommand("eval-lowlabel", "Linear probe under a label fraction");
    std::string lo_train, lo_test, lo_seeds = "1,2,3,4,5", lo_out;
    double lo_frac = 0.01;
    sub_low->add_option("--train-emb", lo_train, "train embeddings")->required();
    sub_low->add_option("--test-emb", lo_test, "test embeddings")->required();
    sub_low->add_option("--frac", lo_frac, "labeled fraction")->capture_default_str();
    sub_low->add_option("--seeds", lo_seeds, "comma list")->capture_default_str();
    sub_low->add_option("--out", lo_out, "report CSV path");
    sub_low->callback([&]() {
        const EmbeddingMatrix train = load_embeddings(lo_train);
        const EmbeddingMatrix test = load_embeddings(lo_test);
        const std::vector<int64_t> train_labels = labeled_check(train, "train");
        const std::vector<int64_t> test_labels = labeled_check(test, "test");
        std::vector<ReportRow> rows;
        for (uint64_t seed : parse_seeds(lo_seeds)) {
            const std::vector<int64_t> idx = subsample_fraction(train_labels, lo_frac, seed);
            Tensor sub = Tensor::zeros({static_cast<int64_t>(idx.size()), train.dim()});
            std::vector<int64_t> sub_labels;
            for (size_t i = 0; i < idx.size(); ++i) {
                std::copy(&train.values.data[static_cast<size_t>(idx[i] * train.dim())],
                          &train.values.data[static_cast<size_t>((idx[i] + 1) * train.dim())],
                          &sub.data[i * static_cast<size_t>(train.dim())]);
                sub_labels.push_back(train_labels[static_cast<size_t>(idx[i])]);
            }
            const double acc = linear_probe(sub, sub_labels, test.values, test_labels);
            rows.push_back({"lowlabel", "accuracy", acc, std::to_string(seed)});
        }
        append_mean(rows, "lowlabel", "accuracy");
        emit_report(rows, lo_out);
    });

    // eval-cluster
    auto* sub_cluster = app.add_subcommand("eval-cluster", "k-means clustering scored by NMI/ARI");
    std::string cl_emb, cl_seeds = "1,2,3,4,5", cl_out;
    int cl_clusters = 0;
    sub_cluster->add_option("--emb", cl_emb, "embeddings with labels")->required();
    sub_cluster->add_option("--clusters", cl_clusters, "cluster count (default: #classes)");
    sub_cluster->add_option("--seeds", cl_seeds, "comma list")->capture_default_str();
    sub_cluster->add_option("--out", cl_out, "report CSV path");
    sub_cluster->callback([&]() {
        const EmbeddingMatrix emb = load_embeddings(cl_emb);
        const std::vector<int64_t> labels = labeled_check(emb, "clustering");
        int n_clusters = cl_clusters;
        if (n_clusters <= 0) {
            int64_t c = 0;
            for (int64_t l : labels) c = std::max(c, l + 1);
            n_clusters = static_cast<int>(c);
        }
        std::vector<ReportRow> rows;
        for (uint64_t seed : parse_seeds(cl_seeds)) {
            const std::vector<int64_t> assign = kmeans(emb.values, n_clusters, seed);
            rows.push_back({"cluster", "nmi", nmi(assign, labels), std::to_string(seed)});
            rows.push_back({"cluster", "ari", ari(assign, labels), std::to_string(seed)});
        }
        append_mean(rows, "cluster", "nmi");
        append_mean(rows, "cluster", "ari");
        emit_report(rows, cl_out);
    });

    // transfer
    auto* sub_transfer = app.add_subcommand("transfer", "Cross-dataset probe with a frozen model");
    std::string tr_model, tr_train, tr_test, tr_select, tr_out;
    uint64_t tr_seed = 1;
    sub_transfer->add_option("--model", tr_model, "pretrained model (source domain)")->required();
    sub_transfer->add_option("--train-data", tr_train, "target-domain train dataset")->required();
    sub_transfer->add_option("--test-data", tr_test, "target-domain test dataset")->required();
    sub_transfer->add_option("--select-channels", tr_select, "channel alignment, comma list");
    sub_transfer->add_option("--seed", tr_seed, "seed echoed in the report")->capture_default_str();
    sub_transfer->add_option("--out", tr_out, "report CSV path");
    sub_transfer->callback([&]() {
        const ModelParams params = load_model(tr_model);
        const EncoderConfig config = config_from_params(params);
        TimeSeriesBatch train = load_dataset(tr_train);
        TimeSeriesBatch test = load_dataset(tr_test);
        if (!tr_select.empty()) {
            const auto idx = parse_int_list(tr_select, "select-channels");
            train = select_channels(train, idx);
            test = select_channels(test, idx);
        }
        const EmbeddingMatrix train_emb = embed_windows(train, params, config);
        const EmbeddingMatrix test_emb = embed_windows(test, params, config);
        const double acc = linear_probe(train_emb.values, labeled_check(train_emb, "train"),
                                        test_emb.values, labeled_check(test_emb, "test"));
        std::vector<ReportRow> rows{{"transfer", "accuracy", acc, std::to_string(tr_seed)}};
        append_mean(rows, "transfer", "accuracy");
        emit_report(rows, tr_out);
    });

    // bench
    auto* sub_bench = app.add_subcommand("bench", "Loss-cost scaling sweep");
    ScalingConfig bench_cfg;
    std::string bn_out;
    sub_bench->add_option("--out", bn_out, "scaling CSV path")->required();
    sub_bench->add_flag("--f32", bench_cfg.use_f32, "time 32-bit kernels");
    sub_bench->add_option("--budget-bytes", bench_cfg.budget_bytes, "score-matrix byte budget")->capture_default_str();
    sub_bench->add_option("--repeats", bench_cfg.repeats, "timing repeats per cell")->capture_default_str();
    sub_bench->add_option("--k", bench_cfg.k, "sub-block count")->capture_default_str();
    sub_bench->add_option("--F", bench_cfg.F, "embedding dimension")->capture_default_str();
    sub_bench->add_option("--seed", bench_cfg.seed, "embedding seed")->capture_default_str();
    sub_bench->callback([&]() {
        const ScalingResult result = run_scaling(bench_cfg);
        write_bench_csv(result, bn_out);
        std::printf("dicot slope vs T: %.3f\n", result.dicot_slope_T);
        std::printf("timestep slope vs T: %.3f\n", result.timestep_slope_T);
        std::printf("dicot slope vs B: %.3f\n", result.dicot_slope_B);
        std::printf("wrote %zu cells to %s\n", result.points.size(), bn_out.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc == 3 && std::strcmp(argv[1], "--help") == 0 && std::strcmp(argv[2], "config") == 0) {
        std::fputs(dicot::config_help().c_str(), stdout);
        return 0;
    }
    try {
        return run(argc, argv);
    } catch (const dicot::Error& e) {
        std::fprintf(stderr, "ERROR %s: %s\n", e.kind().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ERROR Internal: %s\n", e.what());
        return 1;
    }
}
