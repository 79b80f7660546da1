import numpy as np
import pytest

from conftest import random_symmetric_nonneg
from pssc.errors import ContractViolationError
from pssc.graph import (contrastive_target, normalized_laplacian,
                        similarity_from_coeff, weighted_recon_quadform)


def brute_force_quadform(X, Xhat, S):
    n = X.shape[1]
    return sum(S[i, j] * np.sum((X[:, i] - Xhat[:, j]) ** 2)
               for i in range(n) for j in range(n))


def test_similarity_of_zero_is_zero():
    assert np.array_equal(similarity_from_coeff(np.zeros((3, 3))),
                          np.zeros((3, 3)))


def test_similarity_absolute_symmetrization():
    S = similarity_from_coeff(np.array([[0.0, 2.0], [-2.0, 0.0]]))
    np.testing.assert_array_equal(S, [[0.0, 2.0], [2.0, 0.0]])


def test_similarity_matches_elementwise(np_rng):
    C = np_rng.normal(size=(6, 6))
    np.fill_diagonal(C, 0.0)
    S = similarity_from_coeff(C)
    for i in range(6):
        for j in range(6):
            expected = 0.0 if i == j else 0.5 * (abs(C[i, j]) + abs(C[j, i]))
            assert S[i, j] == pytest.approx(expected, abs=1e-15)


def test_similarity_invariances(np_rng):
    C = np_rng.normal(size=(7, 7))
    flips = np_rng.choice([-1.0, 1.0], size=C.shape)
    S = similarity_from_coeff(C)
    np.testing.assert_array_equal(S, similarity_from_coeff(C.T))
    np.testing.assert_array_equal(S, similarity_from_coeff(C * flips))


def test_similarity_rejects_non_square():
    with pytest.raises(ContractViolationError):
        similarity_from_coeff(np.zeros((2, 3)))


def test_laplacian_unit_degrees():
    graph = normalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(graph.L_n, [[1.0, -1.0], [-1.0, 1.0]],
                               atol=1e-7)
    np.testing.assert_allclose(graph.degrees, [1.0, 1.0])


def test_laplacian_isolated_vertex():
    S = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    graph = normalized_laplacian(S)
    assert np.all(np.isfinite(graph.L_n))
    assert np.array_equal(graph.L_n[2], np.zeros(3))
    assert np.array_equal(graph.L_n[:, 2], np.zeros(3))


def test_laplacian_spectrum_in_range(np_rng):
    for _ in range(50):
        graph = normalized_laplacian(random_symmetric_nonneg(np_rng, 8))
        values = np.linalg.eigvalsh(graph.L_n)
        assert values.min() >= -1e-8 and values.max() <= 2 + 1e-8
        np.testing.assert_allclose(graph.S_n, graph.S_n.T, atol=1e-15)


def test_laplacian_rejects_negative_entries():
    with pytest.raises(ContractViolationError):
        normalized_laplacian(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_laplacian_with_frozen_degrees(np_rng):
    S = random_symmetric_nonneg(np_rng, 5)
    frozen = normalized_laplacian(S, degrees=np.full(5, 2.0))
    assert frozen.frozen_degrees
    np.testing.assert_allclose(frozen.S_n, S / (2.0 + frozen.eps))


def test_unnormalized_laplacian_is_psd(np_rng):
    for _ in range(100):
        S = random_symmetric_nonneg(np_rng, 9)
        L = np.diag(S.sum(axis=1)) - S
        x = np_rng.normal(size=9)
        assert x @ L @ x >= -1e-10


def test_quadform_zero_similarity(np_rng):
    X = np_rng.normal(size=(3, 4))
    assert weighted_recon_quadform(X, np_rng.normal(size=(3, 4)),
                                   np.zeros((4, 4))) == 0.0


def test_quadform_perfect_reconstruction(np_rng):
    X = np_rng.normal(size=(3, 5))
    S = random_symmetric_nonneg(np_rng, 5)
    expected = sum(S[i, j] * np.sum((X[:, i] - X[:, j]) ** 2)
                   for i in range(5) for j in range(5))
    assert weighted_recon_quadform(X, X, S) == pytest.approx(expected,
                                                             rel=1e-8)


def test_quadform_matches_double_sum(np_rng):
    for _ in range(200):
        X = np_rng.normal(size=(4, 7))
        Xhat = np_rng.normal(size=(4, 7))
        S = random_symmetric_nonneg(np_rng, 7, zero_diag=False)
        assert weighted_recon_quadform(X, Xhat, S) == pytest.approx(
                brute_force_quadform(X, Xhat, S), rel=1e-8)


def test_quadform_rejects_shape_mismatch(np_rng):
    with pytest.raises(ContractViolationError):
        weighted_recon_quadform(np.zeros((3, 4)), np.zeros((3, 5)),
                                np.zeros((4, 4)))


def test_contrastive_target_in_unit_range(np_rng):
    graph = normalized_laplacian(random_symmetric_nonneg(np_rng, 6))
    S_bar, peak, index = contrastive_target(graph)
    assert S_bar.max() == pytest.approx(1.0)
    assert S_bar.min() >= 0.0
    assert peak == graph.S_n[index]
    assert np.all(np.diag(S_bar) == 0.0)


def test_contrastive_target_of_empty_graph():
    S_bar, peak, _ = contrastive_target(normalized_laplacian(np.zeros((3, 3))))
    assert peak == 0.0 and not S_bar.any()
