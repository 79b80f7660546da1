"""Dense float64 matrix helpers and seeded randomness.

Every matrix in this package is a 2-D ``numpy.ndarray`` of dtype float64
("Mat"); samples are stored as columns. The wrappers here add the checks the
rest of the package relies on (finiteness, symmetry, convergence) on top of
the LAPACK routines exposed by scipy.
"""
import zlib

import numpy as np
import scipy.linalg
import scipy.special

from .errors import ContractViolationError, FactorizationError

SYMMETRY_TOL = 1e-10


class SeededRng:
    """Deterministic random stream built on numpy's PCG64 generator.

    Two instances built from the same seed yield the same values on every
    platform. Named children (`child`) give each pipeline stage its own
    independent stream derived from the root seed, so adding draws in one
    stage never shifts the values another stage sees.
    """

    def __init__(self, seed=0, spawn_key=()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._spawn_key = tuple(spawn_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, name):
        """Returns a new SeededRng for the stage called `name`."""
        key = zlib.crc32(name.encode('utf-8'))
        return SeededRng(self.seed, self._spawn_key + (key,))

    def normal(self, scale=1.0, size=None):
        return self.generator.normal(0.0, scale, size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size=size)

    def integers(self, high, size=None):
        return self.generator.integers(0, high, size=size)

    def choice(self, n, size):
        """Samples `size` distinct indices from range(n), sorted ascending."""
        return np.sort(self.generator.choice(n, size=size, replace=False))


def as_mat(values, name='matrix'):
    """Converts `values` to a finite 2-D float64 array.

    Raises: ContractViolationError if the input is not 2-D or holds NaN/Inf.
    """
    mat = np.asarray(values, dtype=np.float64)
    if mat.ndim != 2:
        raise ContractViolationError(
                f'{name} must be 2-D, got shape {mat.shape}.')
    check_finite(mat, name)
    return mat


def check_finite(mat, name='matrix'):
    if not np.all(np.isfinite(mat)):
        bad = np.argwhere(~np.isfinite(mat))[0]
        raise ContractViolationError(
                f'{name} has a non-finite entry at {tuple(int(i) for i in bad)}.')
    return mat


def check_square(mat, name='matrix'):
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ContractViolationError(
                f'{name} must be square, got shape {mat.shape}.')
    return mat


def check_symmetric(mat, name='matrix', tol=SYMMETRY_TOL):
    check_square(mat, name)
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    asym = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
    if asym > tol * scale:
        raise ContractViolationError(
                f'{name} is not symmetric (max |M - M^T| = {asym:.3e}).')
    return mat


def svd(mat):
    """Thin singular value decomposition M = U diag(sigma) V^T.

    Arguments:
      mat: Finite 2-D array.

    Returns: (U, sigma, V) with sigma non-increasing and non-negative and U, V
      holding orthonormal columns. V is returned un-transposed.

    Raises: FactorizationError if LAPACK fails to converge with both the
      divide-and-conquer and the plain QR-iteration drivers.
    """
    mat = as_mat(mat)
    try:
        u, sigma, vt = scipy.linalg.svd(mat, full_matrices=False,
                                        lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        try:
            u, sigma, vt = scipy.linalg.svd(mat, full_matrices=False,
                                            lapack_driver='gesvd')
        except np.linalg.LinAlgError as err:
            raise FactorizationError(f'SVD did not converge: {err}')
    return u, sigma, vt.T


def eigh_sym(mat):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Raises: ContractViolationError if `mat` is not symmetric within 1e-10
      (relative to its largest entry); FactorizationError on non-convergence.
    """
    mat = as_mat(mat)
    check_symmetric(mat)
    try:
        values, vectors = scipy.linalg.eigh(0.5 * (mat + mat.T))
    except np.linalg.LinAlgError as err:
        raise FactorizationError(f'Symmetric eigensolver failed: {err}')
    return values, vectors


def softmax_rows(mat):
    """Row-wise softmax (max-shifted, so large logits never overflow)."""
    return scipy.special.softmax(as_mat(mat), axis=1)


def solve_spd(mat, rhs):
    """Solves mat @ x = rhs for a symmetric positive definite `mat`.

    Raises: FactorizationError if the Cholesky factorization fails.
    """
    try:
        return scipy.linalg.solve(as_mat(mat), rhs, assume_a='pos')
    except np.linalg.LinAlgError as err:
        raise FactorizationError(f'Positive definite solve failed: {err}')
