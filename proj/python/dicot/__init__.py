"""Self-supervised time-series representation learning.

Thin python surface over the C++ core: stochastic overlapping sub-block
partitioning, the temporal-contrastive objective, the conv encoder with
its trainer, and the evaluation toolkit (1NN, linear probe, k-means with
NMI/ARI, stratified subsampling).
"""

from ._core import (
    ModelParams,
    PartitionPlan,
    ari,
    dicot_loss,
    dicot_loss_grad,
    encode,
    extract_subblocks,
    gen_synthetic,
    init_params,
    kmeans,
    knn1,
    linear_probe,
    load_dataset,
    load_ucr_tsv,
    nmi,
    plan_partition,
    pretrain,
    save_dataset,
    similarity,
    standardize,
    subsample_fraction,
    subsample_per_class,
    targets,
)

__all__ = [
    "ModelParams",
    "PartitionPlan",
    "ari",
    "dicot_loss",
    "dicot_loss_grad",
    "encode",
    "extract_subblocks",
    "gen_synthetic",
    "init_params",
    "kmeans",
    "knn1",
    "linear_probe",
    "load_dataset",
    "load_ucr_tsv",
    "nmi",
    "plan_partition",
    "pretrain",
    "save_dataset",
    "similarity",
    "standardize",
    "subsample_fraction",
    "subsample_per_class",
    "targets",
]

__version__ = "0.1.0"
