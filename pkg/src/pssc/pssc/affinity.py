"""Affinity construction from C and normalized spectral clustering."""
from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans
from sklearn.preprocessing import normalize

from .errors import ConfigurationError, ContractViolationError
from .graph import normalized_laplacian, similarity_from_coeff
from .linalg import as_mat, check_symmetric, eigh_sym, svd

logger = logging.getLogger(__name__)

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-9


@dataclass
class ClusterResult:
    """Labels in [0, k), the affinity they were computed from, and the k-means
    objective of the chosen restart. `core_indices` is set by the large-scale
    path to the samples the affinity covers."""
    labels: np.ndarray
    A: np.ndarray
    inertia: float
    core_indices: Optional[np.ndarray] = None


def affinity_from_similarity(S, m, alpha_exp=1.0, row_normalize=True):
    """Block-structure-enhancing affinity from a similarity matrix.

    Keeps the top `m` singular pairs of S, forms Z = U_m sigma_m^(1/2),
    optionally scales its rows to unit length (zero rows stay zero) and
    returns |Z Z^T|^alpha, symmetrized.
    """
    S = as_mat(S, 'S')
    n = S.shape[0]
    if not 1 <= m <= n:
        raise ConfigurationError(f'SVD rank m = {m} must be in [1, {n}].')
    U, sigma, _ = svd(S)
    Z = U[:, :m] * np.sqrt(sigma[:m])[None, :]
    if row_normalize:
        Z = normalize(Z, norm='l2', axis=1)
    A = np.abs(Z @ Z.T) ** alpha_exp
    return 0.5 * (A + A.T)


def build_affinity(C, cfg, m=None):
    """Affinity matrix of the self-expression coefficients.

    Arguments:
      C: n x n coefficient matrix.
      cfg: AffinityConfig supplying k, q, alpha_exp and row_normalize.
      m: SVD rank; defaults to k * q + 1.

    Raises: ConfigurationError if m exceeds n.
    """
    S = similarity_from_coeff(C)
    m = cfg.m if m is None else m
    if m > S.shape[0]:
        raise ConfigurationError(
                f'm = k*q + 1 = {m} exceeds the number of samples '
                f'{S.shape[0]}; lower k or q.')
    return affinity_from_similarity(S, m, cfg.alpha_exp, cfg.row_normalize)


def _farthest_point_centers(points, k, first):
    centers = [first]
    closest = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(closest))
        centers.append(nxt)
        closest = np.minimum(closest, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[centers]


def kmeans_restarts(points, k, restarts, rng):
    """Runs k-means from `restarts` seeded farthest-point initializations.

    Returns: (labels, inertia) of the restart with the lowest inertia; ties
      go to the earliest restart.
    """
    best_labels, best_inertia = None, np.inf
    firsts = rng.integers(points.shape[0], size=restarts)
    for restart, first in enumerate(firsts):
        init = _farthest_point_centers(points, k, int(first))
        km = KMeans(n_clusters=k, init=init, n_init=1,
                    max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL,
                    algorithm='lloyd')
        km.fit(points)
        logger.debug(f'k-means restart {restart}: inertia {km.inertia_:.6g}')
        if km.inertia_ < best_inertia:
            best_labels, best_inertia = km.labels_.astype(np.int64), km.inertia_
    return best_labels, float(best_inertia)


def spectral_embedding(A, k):
    """Row-normalized eigenvectors of the k smallest normalized-Laplacian
    eigenvalues, signs fixed so each vector's largest-magnitude entry is
    non-negative."""
    graph = normalized_laplacian(A)
    _, vectors = eigh_sym(graph.L_n)
    vectors = vectors[:, :k].copy()
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(k)])
    signs[signs == 0] = 1.0
    vectors *= signs[None, :]
    return normalize(vectors, norm='l2', axis=1)


def spectral_cluster(A, k, restarts, rng):
    """Normalized spectral clustering of a symmetric non-negative affinity.

    Raises: ConfigurationError if k > n; ContractViolationError if A is
      asymmetric or has negative entries.
    """
    A = as_mat(A, 'A')
    check_symmetric(A, 'A')
    if np.any(A < 0):
        raise ContractViolationError('Affinity has negative entries.')
    if k > A.shape[0]:
        raise ConfigurationError(
                f'Cannot form k = {k} clusters from {A.shape[0]} samples.')
    embedding = spectral_embedding(A, k)
    labels, inertia = kmeans_restarts(embedding, k, restarts, rng)
    return ClusterResult(labels=labels, A=A, inertia=inertia)
