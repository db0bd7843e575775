#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "dicot/config.hpp"
#include "dicot/data.hpp"
#include "dicot/encoder.hpp"
#include "dicot/errors.hpp"
#include "dicot/eval.hpp"
#include "dicot/objective.hpp"
#include "dicot/partition.hpp"
#include "dicot/rng.hpp"
#include "dicot/trainer.hpp"

namespace py = pybind11;
using namespace dicot;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& arr) {
    std::vector<int64_t> shape(static_cast<size_t>(arr.ndim()));
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        shape[static_cast<size_t>(i)] = static_cast<int64_t>(arr.shape(i));
    std::vector<double> data(arr.data(), arr.data() + arr.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> arr(shape);
    std::memcpy(arr.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
    return arr;
}

TimeSeriesBatch to_batch(const DoubleArray& values, const std::vector<int64_t>& labels) {
    Tensor v = to_tensor(values);
    if (v.rank() != 3) throw ShapeError("values must be a B x T x D array");
    TimeSeriesBatch b;
    b.values = std::move(v);
    b.labels = labels;
    for (int64_t l : labels) b.n_classes = std::max(b.n_classes, l + 1);
    b.validate();
    return b;
}

TargetVector make_targets(int k, const std::string& mode, std::optional<uint64_t> seed) {
    PositiveMode pm = parse_positive_mode(mode);
    if (pm == PositiveMode::Shuffled) {
        if (!seed) throw ConfigError("shuffled targets need a seed");
        Rng rng = make_rng(*seed);
        return targets(k, pm, &rng);
    }
    return targets(k, pm);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Self-supervised time-series representation learning core";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(PyExc_ValueError, (e.kind() + ": " + e.what()).c_str());
        }
    });

    py::class_<PartitionPlan>(m, "PartitionPlan")
        .def_readonly("T", &PartitionPlan::T)
        .def_readonly("k", &PartitionPlan::k)
        .def_readonly("L", &PartitionPlan::L)
        .def_readonly("s", &PartitionPlan::s)
        .def("__repr__", [](const PartitionPlan& p) {
            return "PartitionPlan(T=" + std::to_string(p.T) + ", k=" + std::to_string(p.k) +
                   ", L=" + std::to_string(p.L) + ", s=" + std::to_string(p.s) + ")";
        });

    m.def("plan_partition", &plan_partition, py::arg("T"), py::arg("k"), py::arg("rho") = 0.5);

    m.def(
        "extract_subblocks",
        [](const DoubleArray& values, const PartitionPlan& plan) {
            return to_array(extract_subblocks(to_tensor(values), plan).values);
        },
        py::arg("values"), py::arg("plan"));

    m.def(
        "targets",
        [](int k, const std::string& mode, std::optional<uint64_t> seed) {
            TargetVector tv = make_targets(k, mode, seed);
            return py::make_tuple(tv.primary, tv.secondary);
        },
        py::arg("k"), py::arg("mode") = "preceding", py::arg("seed") = py::none());

    m.def(
        "similarity",
        [](const DoubleArray& z, double tau) { return to_array(similarity(to_tensor(z), tau)); },
        py::arg("z"), py::arg("tau") = 0.07);

    m.def(
        "dicot_loss",
        [](const DoubleArray& scores, const std::string& mode, std::optional<uint64_t> seed) {
            Tensor S = to_tensor(scores);
            if (S.rank() != 3) throw ShapeError("scores must be B x k x k");
            return dicot_loss(S, make_targets(static_cast<int>(S.shape[1]), mode, seed));
        },
        py::arg("scores"), py::arg("mode") = "preceding", py::arg("seed") = py::none());

    m.def(
        "dicot_loss_grad",
        [](const DoubleArray& scores, const std::string& mode, std::optional<uint64_t> seed) {
            Tensor S = to_tensor(scores);
            if (S.rank() != 3) throw ShapeError("scores must be B x k x k");
            return to_array(
                dicot_loss_grad(S, make_targets(static_cast<int>(S.shape[1]), mode, seed)));
        },
        py::arg("scores"), py::arg("mode") = "preceding", py::arg("seed") = py::none());

    py::class_<ModelParams>(m, "ModelParams")
        .def("names",
             [](const ModelParams& p) {
                 std::vector<std::string> out;
                 for (const auto& t : p.tensors) out.push_back(t.name);
                 return out;
             })
        .def("tensor",
             [](const ModelParams& p, const std::string& name) {
                 const Tensor* t = p.find(name);
                 if (!t) throw ConfigError("no tensor named '" + name + "'");
                 return to_array(*t);
             })
        .def("total_elements", &ModelParams::total_elements)
        .def("save", &save_model, py::arg("path"))
        .def_static("load", &load_model, py::arg("path"))
        .def("__repr__", [](const ModelParams& p) {
            return "ModelParams(" + std::to_string(p.tensors.size()) + " tensors, " +
                   std::to_string(p.total_elements()) + " elements)";
        });

    m.def(
        "init_params",
        [](int in_channels, const std::vector<int>& channels, const std::vector<int>& kernel_sizes,
           int embed_dim, std::optional<int> projection_hidden, uint64_t seed) {
            EncoderConfig cfg;
            cfg.in_channels = in_channels;
            cfg.channels = channels;
            cfg.kernel_sizes = kernel_sizes;
            cfg.embed_dim = embed_dim;
            if (projection_hidden) cfg.projection = ProjectionHead{*projection_hidden};
            return init_params(cfg, seed);
        },
        py::arg("in_channels"), py::arg("channels") = std::vector<int>{32, 64, 128},
        py::arg("kernel_sizes") = std::vector<int>{8, 5, 3}, py::arg("embed_dim") = 64,
        py::arg("projection_hidden") = py::none(), py::arg("seed") = 1);

    m.def(
        "encode",
        [](const DoubleArray& blocks, const ModelParams& params) {
            return to_array(encode(to_tensor(blocks), params, config_from_params(params)));
        },
        py::arg("blocks"), py::arg("params"));

    m.def(
        "gen_synthetic",
        [](int64_t n_per_class, int64_t T, int64_t D, int64_t C, double noise_sigma,
           double cycles_base, uint64_t seed) {
            SyntheticSpec spec;
            spec.n_per_class = n_per_class;
            spec.T = T;
            spec.D = D;
            spec.C = C;
            spec.noise_sigma = noise_sigma;
            spec.cycles_base = cycles_base;
            spec.seed = seed;
            TimeSeriesBatch b = gen_synthetic(spec);
            return py::make_tuple(to_array(b.values), b.labels);
        },
        py::arg("n_per_class") = 500, py::arg("T") = 128, py::arg("D") = 3, py::arg("C") = 4,
        py::arg("noise_sigma") = 0.3, py::arg("cycles_base") = 2.0, py::arg("seed") = 1);

    m.def(
        "load_dataset",
        [](const std::string& path) {
            TimeSeriesBatch b = load_binary(path);
            return py::make_tuple(to_array(b.values), b.labels);
        },
        py::arg("path"));

    m.def(
        "save_dataset",
        [](const DoubleArray& values, const std::vector<int64_t>& labels,
           const std::string& path) { save_binary(to_batch(values, labels), path); },
        py::arg("values"), py::arg("labels"), py::arg("path"));

    m.def(
        "load_ucr_tsv",
        [](const std::string& path) {
            TimeSeriesBatch b = load_ucr_tsv(path);
            return py::make_tuple(to_array(b.values), b.labels);
        },
        py::arg("path"));

    m.def(
        "pretrain",
        [](const DoubleArray& values, const std::vector<int64_t>& labels,
           const std::vector<int>& channels, const std::vector<int>& kernel_sizes, int embed_dim,
           std::optional<int> projection_hidden, double tau, const std::string& positive_mode,
           double rho, int k_min, int k_max, double lr, double weight_decay, double warmup_frac,
           int64_t iters, int64_t batch_size, uint64_t seed) {
            TimeSeriesBatch ds = to_batch(values, labels);
            EncoderConfig enc;
            enc.channels = channels;
            enc.kernel_sizes = kernel_sizes;
            enc.embed_dim = embed_dim;
            if (projection_hidden) enc.projection = ProjectionHead{*projection_hidden};
            PartitionParams part;
            part.rho = rho;
            part.k_min = k_min;
            part.k_max = k_max;
            LossConfig lc;
            lc.tau = tau;
            lc.positive_mode = parse_positive_mode(positive_mode);
            OptimizerConfig opt;
            opt.base_lr = lr;
            opt.weight_decay = weight_decay;
            opt.warmup_frac = warmup_frac;
            opt.total_iters = iters;
            opt.batch_size = batch_size;
            opt.seed = seed;
            PretrainResult r = pretrain(ds, enc, part, lc, opt);
            std::vector<double> losses;
            losses.reserve(r.log.records.size());
            for (const auto& rec : r.log.records) losses.push_back(rec.loss);
            return py::make_tuple(r.params, losses);
        },
        py::arg("values"), py::arg("labels") = std::vector<int64_t>{},
        py::arg("channels") = std::vector<int>{32, 64, 128},
        py::arg("kernel_sizes") = std::vector<int>{8, 5, 3}, py::arg("embed_dim") = 64,
        py::arg("projection_hidden") = py::none(), py::arg("tau") = 0.07,
        py::arg("positive_mode") = "preceding", py::arg("rho") = 0.5, py::arg("k_min") = 2,
        py::arg("k_max") = 10, py::arg("lr") = 3e-4, py::arg("weight_decay") = 3e-4,
        py::arg("warmup_frac") = 0.10, py::arg("iters") = 1500, py::arg("batch_size") = 128,
        py::arg("seed") = 1);

    m.def(
        "knn1",
        [](const DoubleArray& train_emb, const std::vector<int64_t>& train_labels,
           const DoubleArray& test_emb, const std::vector<int64_t>& test_labels) {
            KnnResult r = knn1(to_tensor(train_emb), train_labels, to_tensor(test_emb), test_labels);
            return py::make_tuple(r.predictions, r.accuracy);
        },
        py::arg("train_emb"), py::arg("train_labels"), py::arg("test_emb"),
        py::arg("test_labels") = std::vector<int64_t>{});

    m.def(
        "linear_probe",
        [](const DoubleArray& train_emb, const std::vector<int64_t>& train_labels,
           const DoubleArray& test_emb, const std::vector<int64_t>& test_labels) {
            return linear_probe(to_tensor(train_emb), train_labels, to_tensor(test_emb),
                                test_labels);
        },
        py::arg("train_emb"), py::arg("train_labels"), py::arg("test_emb"),
        py::arg("test_labels"));

    m.def(
        "kmeans",
        [](const DoubleArray& emb, int n_clusters, uint64_t seed, int max_iter) {
            return kmeans(to_tensor(emb), n_clusters, seed, max_iter);
        },
        py::arg("emb"), py::arg("n_clusters"), py::arg("seed") = 1, py::arg("max_iter") = 100);

    m.def("nmi", &nmi, py::arg("a"), py::arg("b"));
    m.def("ari", &ari, py::arg("a"), py::arg("b"));

    m.def(
        "standardize",
        [](const DoubleArray& train_emb, const DoubleArray& emb) {
            StandardizeStats st = standardize_fit(to_tensor(train_emb));
            return to_array(standardize_apply(to_tensor(emb), st));
        },
        py::arg("train_emb"), py::arg("emb"));

    m.def("subsample_per_class", &subsample_per_class, py::arg("labels"), py::arg("m_per_class"),
          py::arg("seed"));
    m.def("subsample_fraction", &subsample_fraction, py::arg("labels"), py::arg("frac"),
          py::arg("seed"));
}
