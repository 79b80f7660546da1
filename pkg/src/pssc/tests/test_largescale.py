import numpy as np
import pytest

from pssc.affinity import build_affinity, spectral_cluster
from pssc.config import AffinityConfig
from pssc.errors import ConfigurationError, ContractViolationError
from pssc.largescale import knn_predict, plan_split, run_largescale
from pssc.linalg import SeededRng
from pssc.trainer import train_pssc


def test_plan_split_partitions_indices(rng):
    plan = plan_split(20, 8, rng)
    assert len(plan.core_indices) == 8 and len(plan.rest_indices) == 12
    assert not set(plan.core_indices) & set(plan.rest_indices)
    assert sorted(np.concatenate([plan.core_indices, plan.rest_indices])) == \
        list(range(20))


def test_plan_split_rejects_oversized_core(rng):
    with pytest.raises(ConfigurationError):
        plan_split(5, 6, rng)


def test_knn_query_equal_to_core_point():
    Z_core = np.array([[0.0, 5.0, 10.0]])
    labels = knn_predict(Z_core, [2, 1, 0], Z_core)
    assert list(labels) == [2, 1, 0]


def test_knn_tie_breaks():
    Z_core = np.array([[-1.0, 1.0]])
    assert list(knn_predict(Z_core, [2, 0], np.array([[0.0]]), neighbors=2)) == [0]
    # equal distances with one neighbor: the smaller core index wins
    assert list(knn_predict(Z_core, [2, 0], np.array([[0.0]]))) == [2]


def test_knn_matches_brute_force_scan(np_rng):
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    core = np.vstack([c + np_rng.normal(size=(15, 2)) for c in centers])
    core_labels = np.repeat([0, 1, 2], 15)
    queries = np_rng.uniform(-2.0, 6.0, size=(50, 2))
    expected = [core_labels[int(np.argmin(np.sum((core - q) ** 2, axis=1)))]
                for q in queries]
    assert list(knn_predict(core.T, core_labels, queries.T)) == expected


def test_knn_rejects_bad_input():
    with pytest.raises(ContractViolationError):
        knn_predict(np.zeros((2, 0)), [], np.zeros((2, 1)))
    with pytest.raises(ContractViolationError):
        knn_predict(np.zeros((2, 1)), [0], np.zeros((2, 1)), neighbors=0)
    assert knn_predict(np.zeros((2, 1)), [0], np.zeros((2, 0))).size == 0


def test_full_subset_matches_base_pipeline(small_dataset, small_train_cfg):
    aff_cfg = AffinityConfig(k=2, q=2, kmeans_restarts=3)
    root = SeededRng(5)
    result, plan, _, _ = run_largescale(small_dataset.X, 2, small_dataset.n,
                                        small_train_cfg, aff_cfg, root)
    assert plan.rest_indices.size == 0

    params, _ = train_pssc(small_dataset.X, small_train_cfg, 2,
                           root.child('init'))
    base = spectral_cluster(build_affinity(params.C, aff_cfg), 2, 3,
                            root.child('kmeans'))
    assert np.array_equal(result.labels, base.labels)


def test_duplicate_of_core_sample_inherits_label(small_dataset,
                                                 small_train_cfg):
    aff_cfg = AffinityConfig(k=2, q=2, kmeans_restarts=3)
    root = SeededRng(6)
    m = small_dataset.n // 2
    plan = plan_split(small_dataset.n, m, root.child('split'))
    X = small_dataset.X.copy()
    source, copy = plan.core_indices[0], plan.rest_indices[0]
    X[:, copy] = X[:, source]

    result, used_plan, _, _ = run_largescale(X, 2, m, small_train_cfg,
                                             aff_cfg, root)
    assert np.array_equal(used_plan.core_indices, plan.core_indices)
    assert result.labels[copy] == result.labels[source]
    assert len(result.labels) == small_dataset.n
    assert np.array_equal(result.core_indices, plan.core_indices)


def test_subset_smaller_than_cluster_count(small_dataset, small_train_cfg):
    with pytest.raises(ConfigurationError):
        run_largescale(small_dataset.X, 2, 1, small_train_cfg,
                       AffinityConfig(k=2, q=2), SeededRng(0))
