from itertools import permutations

import numpy as np
import pytest

from pssc.errors import ContractViolationError
from pssc.evaluation import (PSNR_CAP, acc, default_peak, evaluate, nmi,
                             psnr, purity)


def brute_force_acc(true_labels, pred_labels, k):
    best = 0
    for perm in permutations(range(k)):
        mapped = np.array(perm)[pred_labels]
        best = max(best, int(np.sum(mapped == true_labels)))
    return best / len(true_labels)


def test_acc_examples():
    assert acc([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert acc([2, 0, 1], [2, 0, 1]) == 1.0
    assert acc([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5


def test_acc_matches_exhaustive_search(np_rng):
    for _ in range(100):
        k = int(np_rng.integers(1, 6))
        n = int(np_rng.integers(1, 9))
        true_labels = np_rng.integers(0, k, size=n)
        pred_labels = np_rng.integers(0, k, size=n)
        assert acc(true_labels, pred_labels) == \
            brute_force_acc(true_labels, pred_labels, k)


def test_metrics_reject_length_mismatch():
    for metric in (acc, nmi, purity):
        with pytest.raises(ContractViolationError):
            metric([0, 1], [0, 1, 1])
    with pytest.raises(ContractViolationError):
        acc([], [])


def test_nmi_examples(np_rng):
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert nmi([0, 0, 1, 1], [0, 0, 0, 0]) == pytest.approx(0.0)
    assert nmi([0, 0, 0], [1, 1, 1]) == 1.0
    a = np_rng.integers(0, 2, size=10 ** 4)
    b = np_rng.integers(0, 2, size=10 ** 4)
    assert nmi(a, b) < 0.01
    assert nmi(a, b, average='geometric') < 0.01


def test_purity_examples():
    assert purity([0, 1, 2], [0, 1, 2]) == 1.0
    assert purity([0, 0, 1, 1], [0, 0, 0, 0]) == 0.5
    # clusters {a a b} and {b b c}
    assert purity([0, 0, 1, 1, 1, 2], [0, 0, 0, 1, 1, 1]) == 4 / 6


def test_metrics_ignore_label_names(np_rng):
    true_labels = np_rng.integers(0, 4, size=30)
    pred_labels = np_rng.integers(0, 4, size=30)
    renamed = np.array([3, 0, 2, 1])[pred_labels]
    assert acc(true_labels, pred_labels) == acc(true_labels, renamed)
    assert nmi(true_labels, pred_labels) == pytest.approx(
            nmi(true_labels, renamed))
    assert purity(true_labels, pred_labels) == purity(true_labels, renamed)


def test_perfect_accuracy_means_perfect_purity(np_rng):
    labels = np_rng.integers(0, 3, size=20)
    assert acc(labels, labels) == 1.0 and purity(labels, labels) == 1.0


def test_psnr_examples():
    X = np.zeros((4, 5))
    assert psnr(X, X, 1.0) == PSNR_CAP
    assert psnr(X, np.full((4, 5), 0.1), 1.0) == pytest.approx(20.0)
    assert psnr(X, np.full((4, 5), np.sqrt(0.0279)), 1.0) == \
        pytest.approx(15.54, abs=0.01)


def test_psnr_rejects_bad_input():
    with pytest.raises(ContractViolationError):
        psnr(np.zeros((2, 2)), np.zeros((2, 3)), 1.0)
    with pytest.raises(ContractViolationError):
        psnr(np.zeros((2, 2)), np.ones((2, 2)), 0.0)


def test_default_peak():
    assert default_peak(np.array([[0.0, 255.0]])) == 255.0
    assert default_peak(np.ones((2, 2))) == 1.0


def test_evaluate_fills_what_it_can():
    report = evaluate(true_labels=[0, 1], pred_labels=[1, 0])
    assert report.acc == 1.0 and report.psnr is None
    X = np.array([[0.0, 1.0]])
    report = evaluate(X=X, Xhat=X + 0.1)
    assert report.acc is None
    assert report.psnr == pytest.approx(20.0)
