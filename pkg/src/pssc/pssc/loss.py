"""Objective terms and their exact reverse-mode gradients.

The full objective is

    recon + locality + gamma1 * selfexpr + gamma2 * graph + gamma3 * label

with recon = ||X - Xhat||_F^2, locality = 2 Tr(X L_n Xhat^T) (samples as
columns), selfexpr = ||Z - ZC||_F^2, graph a soft-weighted contrastive loss of
classifier outputs against the learned similarity, and label the
cross-entropy on confident pseudo-labels. Gradients reach C through the
decoder path, the self-expression residual, and the graph quantities
S -> S_n -> L_n.
"""
from dataclasses import dataclass, asdict

import numpy as np

from . import graph as graph_ops
from .errors import ContractViolationError, DivergenceError
from .linalg import as_mat, check_symmetric
from .model import FULL, PRETRAIN, forward

LOG_CLAMP = 1e-12
RANGE_TOL = 1e-12


@dataclass
class LossBreakdown:
    recon: float = 0.0
    locality: float = 0.0
    selfexpr: float = 0.0
    graph: float = 0.0
    label: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return asdict(self)


def _check_same_shape(a, b, names):
    if a.shape != b.shape:
        raise ContractViolationError(
                f'{names[0]} {a.shape} and {names[1]} {b.shape} differ in shape.')


def loss_locality(X, Xhat, L_n):
    """Returns ||X - Xhat||_F^2 + 2 Tr(X L_n Xhat^T)."""
    X = as_mat(X, 'X')
    Xhat = as_mat(Xhat, 'Xhat')
    L_n = as_mat(L_n, 'L_n')
    _check_same_shape(X, Xhat, ('X', 'Xhat'))
    if L_n.shape != (X.shape[1], X.shape[1]):
        raise ContractViolationError(
                f'L_n has shape {L_n.shape}, expected {(X.shape[1],) * 2}.')
    check_symmetric(L_n, 'L_n')
    return float(np.sum((X - Xhat) ** 2) + 2.0 * np.sum(L_n * (X.T @ Xhat)))


def loss_selfexpr(Z, C):
    """Returns ||Z - ZC||_F^2.

    Raises: ContractViolationError if C is not n x n for the n columns of Z
      or if diag(C) is not zero.
    """
    Z = as_mat(Z, 'Z')
    C = as_mat(C, 'C')
    if C.shape != (Z.shape[1], Z.shape[1]):
        raise ContractViolationError(
                f'C has shape {C.shape}, expected {(Z.shape[1],) * 2}.')
    if np.any(np.diag(C) != 0.0):
        raise ContractViolationError('diag(C) must be zero.')
    return float(np.sum((Z - Z @ C) ** 2))


def _pair_count(n, normalize):
    return max(1, n * (n - 1) // 2) if normalize else 1


def _graph_terms(F, S_bar, margin, normalize):
    """Value of the pair loss plus its gradients w.r.t. F and S_bar."""
    n = F.shape[0]
    if n < 2:
        return 0.0, np.zeros_like(F), np.zeros_like(S_bar)
    scale = 1.0 / _pair_count(n, normalize)

    sq_norms = np.sum(F ** 2, axis=1)
    sq_dist = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * F @ F.T,
                         0.0)
    np.fill_diagonal(sq_dist, 0.0)
    dist = np.sqrt(sq_dist)
    hinge = np.maximum(margin - dist, 0.0)
    np.fill_diagonal(hinge, 0.0)

    # each unordered pair appears twice in the ordered sums below
    terms = S_bar * sq_dist + (1.0 - S_bar) * hinge ** 2
    np.fill_diagonal(terms, 0.0)
    value = 0.5 * scale * float(np.sum(terms))

    grad_S_bar = 0.5 * scale * (sq_dist - hinge ** 2)
    np.fill_diagonal(grad_S_bar, 0.0)

    with np.errstate(divide='ignore', invalid='ignore'):
        pull = np.where(dist > 0.0, hinge / dist, 0.0)
    coeff = 2.0 * S_bar - 2.0 * (1.0 - S_bar) * pull
    np.fill_diagonal(coeff, 0.0)
    grad_F = scale * (coeff.sum(axis=1)[:, None] * F - coeff @ F)
    return value, grad_F, grad_S_bar


def _check_pair_target(S_bar, n):
    S_bar = as_mat(S_bar, 'S_bar')
    if S_bar.shape != (n, n):
        raise ContractViolationError(
                f'S_bar has shape {S_bar.shape}, expected {(n, n)}.')
    check_symmetric(S_bar, 'S_bar')
    if S_bar.size and (S_bar.min() < -RANGE_TOL or S_bar.max() > 1 + RANGE_TOL):
        raise ContractViolationError(
                f'S_bar entries must lie in [0, 1] (range '
                f'[{S_bar.min():.3e}, {S_bar.max():.3e}]).')
    return S_bar


def loss_graph(F, S_bar, margin=1.0, normalize=True):
    """Soft-weighted contrastive loss between classifier outputs.

    Sums S_bar_ij d_ij^2 + (1 - S_bar_ij) max(0, margin - d_ij)^2 over pairs
    i < j, with d_ij = ||F_i - F_j||, divided by n(n-1)/2 when `normalize`.
    """
    F = as_mat(F, 'F')
    S_bar = _check_pair_target(S_bar, F.shape[0])
    return _graph_terms(F, S_bar, margin, normalize)[0]


def _label_terms(F, labels, normalize):
    n = F.shape[0]
    picked = F[np.arange(n), labels.y]
    clamped = np.maximum(picked, LOG_CLAMP)
    count = max(1, int(labels.V.sum())) if normalize else 1
    value = float(np.sum(labels.V * -np.log(clamped))) / count
    grad_F = np.zeros_like(F)
    grad_F[np.arange(n), labels.y] = np.where(
            picked > LOG_CLAMP, -labels.V / (clamped * count), 0.0)
    return value, grad_F


def loss_label(F, labels, normalize=True):
    """Masked cross-entropy of F against confident pseudo-labels."""
    F = as_mat(F, 'F')
    return _label_terms(F, labels, normalize)[0]


def _dense_backward(layers, inputs, pre, grad_out, grad_layers):
    """Backpropagates through a ReLU stack whose last layer is linear."""
    grad = grad_out
    for idx in reversed(range(len(layers))):
        if idx < len(layers) - 1:
            grad = grad * (pre[idx] > 0.0)
        grad_layers[idx].W += grad @ inputs[idx].T
        grad_layers[idx].b += grad.sum(axis=1)
        grad = layers[idx].W.T @ grad
    return grad


def _softmax_backward(F, grad_F):
    return F * (grad_F - np.sum(grad_F * F, axis=1, keepdims=True))


def _check_finite_terms(breakdown):
    for term, value in breakdown.as_dict().items():
        if not np.isfinite(value):
            raise DivergenceError(f'Loss became non-finite ({value}).',
                                  term=term)


def reconstruction_loss_and_grads(params, X):
    """Plain auto-encoder loss ||X - Xhat||_F^2 with C bypassed.

    Returns: (LossBreakdown, Grads); C and classifier gradients are zero.
    """
    cache = forward(params, X, PRETRAIN)
    residual = cache.X - cache.Xhat
    recon = float(np.sum(residual ** 2))
    breakdown = LossBreakdown(recon=recon, total=recon)
    _check_finite_terms(breakdown)

    grads = params.zeros_like()
    grad_Z = _dense_backward(params.decoder, cache.dec_inputs, cache.dec_pre,
                             -2.0 * residual, grads.decoder)
    _dense_backward(params.encoder, cache.enc_inputs, cache.enc_pre, grad_Z,
                    grads.encoder)
    return breakdown, grads


def total_loss_and_grads(params, X, cfg, labels, graph=None):
    """Evaluates the full objective and its gradient for every parameter.

    Arguments:
      params: PsscParams.
      X: Data, d x n.
      cfg: TrainConfig supplying gamma1..3, margin, normalize_pair_losses and
          freeze_laplacian.
      labels: PseudoLabels from this epoch's pre-update forward pass; treated
          as constants.
      graph: Optional SimilarityGraph to use as a constant. When omitted the
          graph is rebuilt from params.C and differentiated through, unless
          cfg.freeze_laplacian is set.

    Returns: (LossBreakdown, Grads) where Grads is a PsscParams-shaped object
      with diag(grad C) = 0.

    Raises: DivergenceError naming the first non-finite term.
    """
    cache = forward(params, X, FULL)
    X, Z, Xhat, F, C = cache.X, cache.Z, cache.Xhat, cache.F, params.C
    frozen = graph is not None or cfg.freeze_laplacian
    if graph is None:
        graph = graph_ops.normalized_laplacian(
                graph_ops.similarity_from_coeff(C))
    S_bar, peak, peak_index = graph_ops.contrastive_target(graph)
    normalize = cfg.normalize_pair_losses

    residual = X - Xhat
    cross = X.T @ Xhat
    selfexpr_residual = Z - cache.ZC
    graph_value, graph_grad_F, graph_grad_S_bar = _graph_terms(
            F, S_bar, cfg.margin, normalize)
    label_value, label_grad_F = _label_terms(F, labels, normalize)

    breakdown = LossBreakdown(
            recon=float(np.sum(residual ** 2)),
            locality=2.0 * float(np.sum(graph.L_n * cross)),
            selfexpr=float(np.sum(selfexpr_residual ** 2)),
            graph=graph_value,
            label=label_value)
    breakdown.total = (breakdown.recon + breakdown.locality
                       + cfg.gamma1 * breakdown.selfexpr
                       + cfg.gamma2 * breakdown.graph
                       + cfg.gamma3 * breakdown.label)
    _check_finite_terms(breakdown)

    grads = params.zeros_like()

    # decoder path: Xhat = dec(ZC)
    grad_Xhat = -2.0 * residual + 2.0 * X @ graph.L_n
    grad_ZC = _dense_backward(params.decoder, cache.dec_inputs, cache.dec_pre,
                              grad_Xhat, grads.decoder)
    grad_Z = grad_ZC @ C.T
    grad_C = Z.T @ grad_ZC

    # self-expression residual Z - ZC
    grad_E = 2.0 * cfg.gamma1 * selfexpr_residual
    grad_Z += grad_E - grad_E @ C.T
    grad_C -= Z.T @ grad_E

    # classifier head
    grad_F = np.zeros_like(F)
    if cfg.gamma2 > 0.0:
        grad_F += cfg.gamma2 * graph_grad_F
    if cfg.gamma3 > 0.0:
        grad_F += cfg.gamma3 * label_grad_F
    if cfg.gamma2 > 0.0 or cfg.gamma3 > 0.0:
        grad_logits = _softmax_backward(F, grad_F).T
        grads.classifier.W += grad_logits @ Z.T
        grads.classifier.b += grad_logits.sum(axis=1)
        grad_Z += params.classifier.W.T @ grad_logits

    # graph quantities S -> S_n -> L_n
    if not frozen:
        grad_S_n = None
        if cfg.gamma2 > 0.0:
            grad_S_n = graph_ops.contrastive_target_backward(
                    graph, cfg.gamma2 * graph_grad_S_bar, peak, peak_index)
        grad_S = graph_ops.laplacian_backward(graph, grad_S_n, 2.0 * cross)
        grad_C += graph_ops.similarity_backward(C, grad_S)

    _dense_backward(params.encoder, cache.enc_inputs, cache.enc_pre, grad_Z,
                    grads.encoder)
    np.fill_diagonal(grad_C, 0.0)
    grads.C = grad_C
    return breakdown, grads
