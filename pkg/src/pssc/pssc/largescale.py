"""Out-of-sample clustering: train on a random subset, label the rest by
nearest neighbors in the learned latent space.

Only the subset ever passes through the self-expression layer; every sample
is encoded with the trained encoder alone, and each remaining sample takes
the vote of its nearest subset samples.
"""
from dataclasses import dataclass
import logging

import numpy as np
from scipy.spatial.distance import cdist

from .affinity import ClusterResult, build_affinity, spectral_cluster
from .errors import ConfigurationError, ContractViolationError
from .linalg import as_mat
from .model import encode
from .trainer import train_pssc

logger = logging.getLogger(__name__)

DEFAULT_SUBSET = 5000


@dataclass
class SplitPlan:
    core_indices: np.ndarray
    rest_indices: np.ndarray
    seed: int


def plan_split(n, m, rng):
    """Samples m of n indices uniformly without replacement as the core."""
    if not 1 <= m <= n:
        raise ConfigurationError(f'Subset size m = {m} must be in [1, {n}].')
    core = rng.choice(n, m)
    rest = np.setdiff1d(np.arange(n), core)
    return SplitPlan(core_indices=core, rest_indices=rest, seed=rng.seed)


def knn_predict(Z_core, Y_core, Z_query, neighbors=1):
    """Majority vote among the nearest core columns (Euclidean).

    Distance ties go to the smaller core index, vote ties to the smaller
    label.

    Raises: ContractViolationError for an empty core or neighbors < 1.
    """
    Z_core = as_mat(Z_core, 'Z_core')
    Z_query = as_mat(Z_query, 'Z_query')
    Y_core = np.asarray(Y_core, dtype=np.int64).ravel()
    if Z_core.shape[1] == 0:
        raise ContractViolationError('knn_predict needs a non-empty core set.')
    if neighbors < 1:
        raise ContractViolationError(f'neighbors must be >= 1, got {neighbors}.')
    if Y_core.size != Z_core.shape[1]:
        raise ContractViolationError(
                f'{Y_core.size} core labels for {Z_core.shape[1]} core samples.')
    if Z_query.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)

    neighbors = min(neighbors, Z_core.shape[1])
    distances = cdist(Z_query.T, Z_core.T, 'sqeuclidean')
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :neighbors]
    n_labels = int(Y_core.max()) + 1
    votes = np.zeros((Z_query.shape[1], n_labels), dtype=np.int64)
    for column in range(neighbors):
        np.add.at(votes, (np.arange(Z_query.shape[1]), Y_core[nearest[:, column]]), 1)
    return np.argmax(votes, axis=1)


def run_largescale(X, k, m, train_cfg, aff_cfg, rng, neighbors=1):
    """Clusters all n columns of X after training on a random subset of m.

    Returns: (ClusterResult over all n samples, SplitPlan, trained
      PsscParams, training traces). The result's affinity covers the core
      samples only and `core_indices` records which they are.

    Raises: ConfigurationError unless k <= m <= n.
    """
    X = as_mat(X, 'X')
    n = X.shape[1]
    if m < k:
        raise ConfigurationError(f'Subset size m = {m} is smaller than k = {k}.')
    plan = plan_split(n, m, rng.child('split'))
    logger.info(f'training on {m} of {n} samples')

    X_core = X[:, plan.core_indices]
    params, traces = train_pssc(X_core, train_cfg, k, rng.child('init'))
    A = build_affinity(params.C, aff_cfg)
    core_result = spectral_cluster(A, k, aff_cfg.kmeans_restarts,
                                   rng.child('kmeans'))

    Z = encode(params, X)
    labels = np.empty(n, dtype=np.int64)
    labels[plan.core_indices] = core_result.labels
    labels[plan.rest_indices] = knn_predict(
            Z[:, plan.core_indices], core_result.labels,
            Z[:, plan.rest_indices], neighbors)
    result = ClusterResult(labels=labels, A=A, inertia=core_result.inertia,
                           core_indices=plan.core_indices)
    return result, plan, params, traces
