import math

import numpy as np
import pytest

import dicot


def test_partition_plan_pinned_geometry():
    p = dicot.plan_partition(100, 10, 0.5)
    assert (p.L, p.s, p.k) == (18, 9, 10)
    assert p.T == 100
    q = dicot.plan_partition(50, 4, 0.5)
    assert (q.L, q.s, q.k) == (20, 10, 4)


def test_partition_rejects_impossible_window():
    with pytest.raises(ValueError, match="InvalidPartition"):
        dicot.plan_partition(4, 10, 0.5)
    with pytest.raises(ValueError, match="ConfigError"):
        dicot.plan_partition(100, 1, 0.5)


def test_extract_subblocks_strides():
    x = np.arange(8, dtype=float).reshape(1, 8, 1)
    plan = dicot.plan_partition(8, 3, 0.5)  # L=4 s=2 k=3
    blocks = dicot.extract_subblocks(x, plan)
    assert blocks.shape == (1, 3, 4, 1)
    np.testing.assert_array_equal(blocks[0, 1, :, 0], [2.0, 3.0, 4.0, 5.0])


def test_targets_modes():
    primary, secondary = dicot.targets(4, "preceding")
    assert primary == [0, 0, 1, 2]
    assert secondary is None
    primary, secondary = dicot.targets(4, "bidirectional")
    assert primary == [0, 0, 1, 2]
    assert secondary == [1, 2, 3, 3]
    primary, _ = dicot.targets(5, "shuffled", seed=7)
    assert all(p != j for j, p in enumerate(primary) if j > 0)


def test_loss_matches_pinned_value():
    z = np.array([[[1.0], [2.0]]])  # B=1, k=2, F=1
    scores = dicot.similarity(z, tau=1.0)
    np.testing.assert_allclose(scores[0], [[1.0, 2.0], [2.0, 4.0]])
    loss = dicot.dicot_loss(scores)
    assert abs(loss - 1.7200948492805979) < 1e-15


def test_uniform_scores_give_log_k():
    scores = np.full((2, 5, 5), 0.3)
    assert abs(dicot.dicot_loss(scores) - math.log(5)) < 1e-12


def test_grad_rows_sum_to_zero_with_contrastive_signs():
    rng = np.random.default_rng(0)
    scores = rng.normal(size=(2, 4, 4))
    g = dicot.dicot_loss_grad(scores)
    np.testing.assert_allclose(g.sum(axis=2), 0.0, atol=1e-14)
    primary, _ = dicot.targets(4, "preceding")
    for i in range(2):
        for j, t in enumerate(primary):
            assert g[i, j, t] < 0
            assert all(g[i, j, p] > 0 for p in range(4) if p != t)


def test_bidirectional_is_mean_of_directions():
    rng = np.random.default_rng(1)
    scores = rng.normal(size=(3, 6, 6))
    bi = dicot.dicot_loss(scores, mode="bidirectional")
    pre = dicot.dicot_loss(scores, mode="preceding")
    nxt = dicot.dicot_loss(scores, mode="next")
    assert abs(bi - 0.5 * (pre + nxt)) < 1e-12


def test_synthetic_shapes_and_determinism():
    values, labels = dicot.gen_synthetic(n_per_class=5, T=32, D=2, C=3, seed=9)
    assert values.shape == (15, 32, 2)
    assert sorted(set(labels)) == [0, 1, 2]
    again, _ = dicot.gen_synthetic(n_per_class=5, T=32, D=2, C=3, seed=9)
    np.testing.assert_array_equal(values, again)


def test_pretrain_embed_roundtrip(tmp_path):
    values, labels = dicot.gen_synthetic(n_per_class=8, T=40, D=1, C=2, noise_sigma=0.1, seed=3)
    params, losses = dicot.pretrain(
        values,
        labels,
        channels=[4, 8],
        kernel_sizes=[5, 3],
        embed_dim=4,
        k_max=4,
        iters=4,
        batch_size=4,
        seed=2,
    )
    assert len(losses) == 4
    assert all(np.isfinite(losses))
    emb = dicot.encode(values, params)
    assert emb.shape == (16, 4)

    path = str(tmp_path / "model.bin")
    params.save(path)
    loaded = dicot.ModelParams.load(path)
    assert loaded.names() == params.names()
    np.testing.assert_array_equal(loaded.tensor("conv0.weight"), params.tensor("conv0.weight"))
    np.testing.assert_array_equal(dicot.encode(values, loaded), emb)


def test_pretrain_is_seed_deterministic():
    values, labels = dicot.gen_synthetic(n_per_class=6, T=40, D=1, C=2, seed=5)
    a, la = dicot.pretrain(values, labels, channels=[4], kernel_sizes=[3], embed_dim=3,
                           k_max=4, iters=3, batch_size=4, seed=11)
    b, lb = dicot.pretrain(values, labels, channels=[4], kernel_sizes=[3], embed_dim=3,
                           k_max=4, iters=3, batch_size=4, seed=11)
    assert la == lb
    np.testing.assert_array_equal(a.tensor("proj.weight"), b.tensor("proj.weight"))


def test_dataset_file_roundtrip(tmp_path):
    values, labels = dicot.gen_synthetic(n_per_class=4, T=16, D=2, C=2, seed=1)
    path = str(tmp_path / "data.bin")
    dicot.save_dataset(values, labels, path)
    loaded_values, loaded_labels = dicot.load_dataset(path)
    assert loaded_labels == labels
    np.testing.assert_allclose(loaded_values, values, atol=1e-6)  # f32 storage


def test_knn_and_metrics():
    train = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]])
    test = np.array([[0.05, 0.0], [5.05, 5.0]])
    preds, acc = dicot.knn1(train, [0, 0, 1, 1], test, [0, 1])
    assert preds == [0, 1]
    assert acc == 1.0

    assert dicot.nmi([0, 1, 1, 2], [0, 1, 1, 2]) == pytest.approx(1.0)
    assert dicot.ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    assert dicot.nmi([3, 3, 3, 3], [0, 1, 0, 1]) == 0.0


def test_kmeans_recovers_blobs():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(20, 3)) * 0.1
    b = rng.normal(size=(20, 3)) * 0.1 + 10.0
    emb = np.vstack([a, b])
    truth = [0] * 20 + [1] * 20
    assign = dicot.kmeans(emb, 2, seed=3)
    assert dicot.ari(assign, truth) == pytest.approx(1.0)


def test_linear_probe_separable():
    rng = np.random.default_rng(6)
    train = np.vstack([rng.normal(size=(30, 4)) - 3.0, rng.normal(size=(30, 4)) + 3.0])
    test = np.vstack([rng.normal(size=(10, 4)) - 3.0, rng.normal(size=(10, 4)) + 3.0])
    acc = dicot.linear_probe(train, [0] * 30 + [1] * 30, test, [0] * 10 + [1] * 10)
    assert acc == 1.0


def test_subsampling_contracts():
    labels = [0] * 10 + [1] * 10
    picked = dicot.subsample_per_class(labels, 3, seed=1)
    assert len(picked) == 6
    assert sum(1 for i in picked if labels[i] == 0) == 3
    frac = dicot.subsample_fraction(labels, 0.5, seed=1)
    assert len(frac) == 10
