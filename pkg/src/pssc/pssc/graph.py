"""Similarity graphs built from self-expression coefficients.

The coefficient matrix C of the self-expression layer defines a raw similarity
S = (|C| + |C|^T) / 2. The locality term of the objective uses the symmetric
normalized Laplacian of S and the pseudo-graph term uses the normalized
similarity rescaled into [0, 1]. Both are differentiable in C; the `*_backward`
functions here carry gradients from those quantities back to C.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .linalg import as_mat, check_square, check_symmetric

DEGREE_EPS = 1e-8


@dataclass
class SimilarityGraph:
    """S, its normalized forms and the per-vertex degree terms.

    Attributes:
      S: Raw symmetric non-negative similarity, zero diagonal.
      S_n: D^{-1/2} S D^{-1/2}.
      L_n: D^{-1/2} (D - S) D^{-1/2}.
      degrees: Row sums of S (or the frozen degrees the graph was built with).
      inv_sqrt: 1 / sqrt(degrees + eps).
      eps: Guard added to the degrees before the inverse square root.
      frozen_degrees: True if `degrees` were supplied rather than computed
          from S, in which case no gradient flows through them.
    """
    S: np.ndarray
    S_n: np.ndarray
    L_n: np.ndarray
    degrees: np.ndarray
    inv_sqrt: np.ndarray
    eps: float = DEGREE_EPS
    frozen_degrees: bool = False


def similarity_from_coeff(C):
    """Returns S = (|C| + |C|^T) / 2 with the diagonal forced to zero."""
    C = as_mat(C, 'C')
    check_square(C, 'C')
    abs_c = np.abs(C)
    S = 0.5 * (abs_c + abs_c.T)
    np.fill_diagonal(S, 0.0)
    return S


def similarity_backward(C, grad_S):
    """Pulls a gradient w.r.t. S back to C.

    The subgradient of |c| at c = 0 is taken as 0 and the diagonal of the
    result is zero, since diag(C) is held at zero.
    """
    grad_C = 0.5 * (grad_S + grad_S.T) * np.sign(C)
    np.fill_diagonal(grad_C, 0.0)
    return grad_C


def normalized_laplacian(S, eps=DEGREE_EPS, degrees=None):
    """Builds the symmetric normalized Laplacian of a similarity matrix.

    Arguments:
      S: Symmetric non-negative n x n similarity.
      eps: Guard added to each degree before the inverse square root so that
          isolated vertices produce zero rows rather than a division blow-up.
      degrees: Optional degrees to normalize with instead of the row sums of S
          (used to freeze the normalization across epochs).

    Returns: A SimilarityGraph.

    Raises: ContractViolationError if S is asymmetric or has negative entries.
    """
    S = as_mat(S, 'S')
    check_symmetric(S, 'S')
    if np.any(S < 0):
        raise ContractViolationError('S has negative entries.')

    frozen = degrees is not None
    if frozen:
        degrees = np.asarray(degrees, dtype=np.float64)
        if degrees.shape != (S.shape[0],):
            raise ContractViolationError(
                    f'Frozen degrees have shape {degrees.shape}, expected '
                    f'({S.shape[0]},).')
    else:
        degrees = S.sum(axis=1)

    inv_sqrt = 1.0 / np.sqrt(degrees + eps)
    S_n = inv_sqrt[:, None] * S * inv_sqrt[None, :]
    L_n = np.diag(degrees * inv_sqrt ** 2) - S_n
    return SimilarityGraph(S=S, S_n=S_n, L_n=L_n, degrees=degrees,
                           inv_sqrt=inv_sqrt, eps=eps, frozen_degrees=frozen)


def laplacian_backward(graph, grad_S_n=None, grad_L_n=None):
    """Pulls gradients w.r.t. S_n and/or L_n back to the raw similarity S.

    Both incoming gradients treat every matrix entry as an independent input.
    """
    n = graph.S.shape[0]
    g_sn = np.zeros((n, n)) if grad_S_n is None else np.array(grad_S_n)
    g_diag = np.zeros(n)
    if grad_L_n is not None:
        g_sn -= grad_L_n
        g_diag = np.diag(grad_L_n).copy()

    r = graph.inv_sqrt
    grad_S = g_sn * np.outer(r, r)
    if graph.frozen_degrees:
        return grad_S

    shifted = graph.degrees + graph.eps
    weighted = g_sn * graph.S
    grad_r = weighted @ r + weighted.T @ r
    # d/dd of d/(d+eps) and of (d+eps)^{-1/2}
    grad_d = g_diag * graph.eps / shifted ** 2
    grad_d += grad_r * (-0.5) * shifted ** -1.5
    grad_S += grad_d[:, None]
    return grad_S


def contrastive_target(graph):
    """Rescales S_n into [0, 1] by its largest entry for the pair loss.

    Returns: (S_bar, peak, peak_index) where peak is the max of S_n (0 if S_n
      is all zero, in which case S_bar = S_n) and peak_index its position.
    """
    S_n = graph.S_n
    flat = int(np.argmax(S_n))
    peak_index = np.unravel_index(flat, S_n.shape)
    peak = float(S_n[peak_index])
    if peak <= 0.0:
        return S_n.copy(), 0.0, peak_index
    S_bar = np.clip(S_n / peak, 0.0, 1.0)
    return S_bar, peak, peak_index


def contrastive_target_backward(graph, grad_S_bar, peak, peak_index):
    """Pulls a gradient w.r.t. S_bar back to S_n, including the max rescale."""
    if peak <= 0.0:
        return np.array(grad_S_bar)
    grad_S_n = grad_S_bar / peak
    grad_peak = -float(np.sum(grad_S_bar * graph.S_n)) / peak ** 2
    grad_S_n[peak_index] += grad_peak
    return grad_S_n


def weighted_recon_quadform(X, Xhat, S):
    """Locality-weighted reconstruction error over all sample pairs.

    Evaluates Tr[(X - Xhat) D (X - Xhat)^T] + 2 Tr(X L Xhat^T) with D the degree
    matrix of S and L = D - S, which equals sum_ij S_ij ||X_i - Xhat_j||^2 for
    symmetric S (samples are columns).

    Raises: ContractViolationError on shape mismatch, asymmetric S or
      negative entries in S.
    """
    X = as_mat(X, 'X')
    Xhat = as_mat(Xhat, 'Xhat')
    S = as_mat(S, 'S')
    if X.shape != Xhat.shape:
        raise ContractViolationError(
                f'X {X.shape} and Xhat {Xhat.shape} differ in shape.')
    if S.shape != (X.shape[1], X.shape[1]):
        raise ContractViolationError(
                f'S has shape {S.shape}, expected {(X.shape[1],) * 2}.')
    check_symmetric(S, 'S')
    if np.any(S < 0):
        raise ContractViolationError('S has negative entries.')

    degrees = S.sum(axis=1)
    residual = X - Xhat
    laplacian = np.diag(degrees) - S
    return float(np.sum(degrees * np.sum(residual ** 2, axis=0))
                 + 2.0 * np.sum(laplacian * (X.T @ Xhat)))
