"""Clustering and reconstruction quality metrics."""
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from .errors import ContractViolationError
from .linalg import as_mat

PSNR_CAP = 99.0


@dataclass
class MetricReport:
    acc: Optional[float] = None
    nmi: Optional[float] = None
    purity: Optional[float] = None
    psnr: Optional[float] = None

    def as_dict(self):
        return asdict(self)


def _check_labels(true_labels, pred_labels):
    true_labels = np.asarray(true_labels).ravel()
    pred_labels = np.asarray(pred_labels).ravel()
    if true_labels.size != pred_labels.size:
        raise ContractViolationError(
                f'Label vectors differ in length ({true_labels.size} vs '
                f'{pred_labels.size}).')
    if true_labels.size == 0:
        raise ContractViolationError('Need at least one labeled sample.')
    return true_labels, pred_labels


def acc(true_labels, pred_labels):
    """Best fraction of matches over one-to-one relabelings of the prediction,
    found with the Hungarian method on the contingency table."""
    true_labels, pred_labels = _check_labels(true_labels, pred_labels)
    table = contingency_matrix(true_labels, pred_labels)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / true_labels.size


def nmi(true_labels, pred_labels, average='arithmetic'):
    """Mutual information normalized by the mean (arithmetic by default,
    or geometric) of the two entropies; 1.0 when both partitions are
    trivial."""
    true_labels, pred_labels = _check_labels(true_labels, pred_labels)
    return float(normalized_mutual_info_score(true_labels, pred_labels,
                                              average_method=average))


def purity(true_labels, pred_labels):
    true_labels, pred_labels = _check_labels(true_labels, pred_labels)
    table = contingency_matrix(true_labels, pred_labels)
    return float(table.max(axis=0).sum()) / true_labels.size


def psnr(X, Xhat, peak):
    """10 log10(peak^2 / MSE), capped at 99 (also when MSE is zero)."""
    X = as_mat(X, 'X')
    Xhat = as_mat(Xhat, 'Xhat')
    if X.shape != Xhat.shape:
        raise ContractViolationError(
                f'X {X.shape} and Xhat {Xhat.shape} differ in shape.')
    if peak <= 0:
        raise ContractViolationError(f'PSNR peak must be positive, got {peak}.')
    mse = float(np.mean((X - Xhat) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(peak ** 2 / mse))


def default_peak(X):
    """Dynamic range of the data, or 1.0 for constant data."""
    span = float(np.max(X) - np.min(X))
    return span if span > 0 else 1.0


def evaluate(true_labels=None, pred_labels=None, X=None, Xhat=None,
             peak=None, nmi_average='arithmetic'):
    """Collects every metric the inputs allow into a MetricReport."""
    report = MetricReport()
    if true_labels is not None and pred_labels is not None:
        report.acc = acc(true_labels, pred_labels)
        report.nmi = nmi(true_labels, pred_labels, nmi_average)
        report.purity = purity(true_labels, pred_labels)
    if X is not None and Xhat is not None:
        report.psnr = psnr(X, Xhat, default_peak(X) if peak is None else peak)
    return report
