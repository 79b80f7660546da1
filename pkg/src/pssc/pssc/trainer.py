"""Full-batch training: auto-encoder pretraining, then joint fine-tuning.

Fine-tuning runs one Adam step per epoch on the whole dataset, since the
self-expression layer couples every sample to every other. Each epoch the
similarity graph is rebuilt from the current C and the pseudo-labels are
refreshed from the current classifier outputs before the gradient is taken.

Between the stages C is seeded with the least-squares self-representation
of the data, and fine-tuning moves it at its own, smaller learning rate.
"""
from dataclasses import dataclass, field
import logging
from typing import List

import numpy as np
import pandas as pd

from .errors import DivergenceError, TrainingError
from .loss import reconstruction_loss_and_grads, total_loss_and_grads
from .model import (FULL, forward, init_params, least_squares_coefficients,
                    pseudo_labels)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ['epoch', 'stage', 'recon', 'locality', 'selfexpr', 'graph',
                 'label', 'total', 'confident_count']


class AdamState:
    """Bias-corrected Adam moments for every array of a PsscParams.

    Moments are kept in the canonical `named_arrays` order of the parameters
    the state was created for.
    """

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for _, a in params.named_arrays()]
        self.v = [np.zeros_like(a) for _, a in params.named_arrays()]


def adam_step(state, params, grads, lr, lr_coeff=None):
    """Applies one Adam update to `params` in place and returns them.

    `lr_coeff`, when given, replaces `lr` for the self-expression
    coefficients C.
    """
    param_arrays = params.named_arrays()
    grad_arrays = grads.named_arrays()
    if len(param_arrays) != len(state.m):
        raise ValueError(
                f'Optimizer state holds {len(state.m)} arrays, parameters '
                f'have {len(param_arrays)}.')

    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t
    for idx, ((name, p), (_, g)) in enumerate(zip(param_arrays, grad_arrays)):
        if p.shape != g.shape:
            raise ValueError(f'Gradient for {name} has shape {g.shape}, '
                             f'parameter has {p.shape}.')
        state.m[idx] *= state.beta1
        state.m[idx] += (1.0 - state.beta1) * g
        state.v[idx] *= state.beta2
        state.v[idx] += (1.0 - state.beta2) * (g * g)
        m_hat = state.m[idx] / bias1
        v_hat = state.v[idx] / bias2
        step = lr_coeff if name == 'C' and lr_coeff is not None else lr
        p -= step * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


@dataclass
class TrainTrace:
    """Per-epoch loss breakdowns and confident-sample counts of one stage."""
    stage: str
    losses: List = field(default_factory=list)
    confident_counts: List[int] = field(default_factory=list)

    def append(self, breakdown, confident_count=0):
        self.losses.append(breakdown)
        self.confident_counts.append(int(confident_count))

    def __len__(self):
        return len(self.losses)

    def to_frame(self):
        rows = [dict(epoch=epoch, stage=self.stage, **loss.as_dict(),
                     confident_count=count)
                for epoch, (loss, count) in enumerate(
                        zip(self.losses, self.confident_counts))]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def traces_to_frame(traces):
    """Concatenates several TrainTraces into one trace table."""
    frames = [t.to_frame() for t in traces if len(t)]
    if not frames:
        return pd.DataFrame(columns=TRACE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def _log_epoch(stage, epoch, cfg, breakdown, confident=None):
    message = (f'{stage} epoch {epoch}: total={breakdown.total:.6g} '
               f'recon={breakdown.recon:.6g}')
    if stage == 'finetune':
        message += (f' locality={breakdown.locality:.6g} '
                    f'selfexpr={breakdown.selfexpr:.6g} '
                    f'graph={breakdown.graph:.6g} label={breakdown.label:.6g} '
                    f'confident={confident}')
    if epoch % cfg.log_every == 0:
        logger.info(message)
    else:
        logger.debug(message)


def pretrain(X, params, cfg):
    """Trains encoder and decoder on plain reconstruction, bypassing C.

    Arguments:
      X: Data, d x n.
      params: Freshly initialized PsscParams (left untouched).
      cfg: TrainConfig; uses lr_pretrain and epochs_pretrain.

    Returns: (trained PsscParams, TrainTrace). C and the classifier are
      carried over bitwise.

    Raises: TrainingError with the epoch index if the loss diverges.
    """
    params = params.copy()
    state = AdamState(params)
    trace = TrainTrace('pretrain')
    for epoch in range(cfg.epochs_pretrain):
        try:
            breakdown, grads = reconstruction_loss_and_grads(params, X)
        except DivergenceError as err:
            raise TrainingError(f'Pretraining diverged: {err.err_msg}',
                                stage='pretrain', epoch=epoch, term=err.term)
        trace.append(breakdown)
        _log_epoch('pretrain', epoch, cfg, breakdown)
        adam_step(state, params, grads, cfg.lr_pretrain)
    return params, trace


def _converged(totals, cfg):
    window = cfg.early_stop_window
    if cfg.early_stop_tol <= 0 or len(totals) <= window:
        return False
    previous, current = totals[-window - 1], totals[-1]
    change = abs(current - previous) / max(abs(previous), 1e-300)
    return change < cfg.early_stop_tol


def seed_coefficients(X, params, cfg):
    """Replaces the random C of `params` according to cfg.coeff_init.

    With 'lsr', C becomes the zero-diagonal ridge self-representation of
    the columns of X (regularization cfg.lsr_reg); with 'random' params are
    returned unchanged.
    """
    if cfg.coeff_init != 'lsr':
        return params
    params = params.copy()
    params.C[...] = least_squares_coefficients(X, cfg.lsr_reg)
    logger.info(f'C seeded by least squares (reg {cfg.lsr_reg:g}), '
                f'max |C| {np.abs(params.C).max():.3e}')
    return params


def finetune(X, params, cfg, on_epoch=None):
    """Trains the whole network on the joint objective.

    Each epoch: forward pass, pseudo-labels from that pass, the objective
    (with gamma2 = gamma3 = 0 for the first `warmup_epochs` epochs) and its
    gradient, one Adam step, then diag(C) is re-zeroed. Stops after
    `epochs_finetune` epochs or once the relative change of the total loss
    over `early_stop_window` epochs falls below `early_stop_tol`.

    Arguments:
      X: Data, d x n, with n matching C.
      params: Pretrained PsscParams (left untouched).
      cfg: TrainConfig.
      on_epoch: Optional callable(epoch, params, cache) run after each step,
          where cache is the pre-update forward pass of that epoch.

    Returns: (trained PsscParams, TrainTrace).

    Raises: TrainingError if the loss diverges; ContractViolationError if X
      and C disagree on n.
    """
    params = params.copy()
    state = AdamState(params)
    trace = TrainTrace('finetune')
    warmup_cfg = cfg.without_supervision()
    totals = []
    for epoch in range(cfg.epochs_finetune):
        cache = forward(params, X, FULL)
        labels = pseudo_labels(cache.F, cfg.thres)
        epoch_cfg = warmup_cfg if epoch < cfg.warmup_epochs else cfg
        try:
            breakdown, grads = total_loss_and_grads(params, X, epoch_cfg,
                                                    labels)
        except DivergenceError as err:
            raise TrainingError(f'Fine-tuning diverged: {err.err_msg}',
                                stage='finetune', epoch=epoch, term=err.term)
        trace.append(breakdown, labels.confident_count)
        _log_epoch('finetune', epoch, cfg, breakdown, labels.confident_count)

        adam_step(state, params, grads, cfg.lr_finetune, cfg.lr_coeff)
        np.fill_diagonal(params.C, 0.0)
        params.check_constraints()
        if on_epoch is not None:
            on_epoch(epoch, params, cache)

        totals.append(breakdown.total)
        if epoch >= cfg.warmup_epochs + cfg.early_stop_window and \
                _converged(totals, cfg):
            logger.info(f'finetune converged after {epoch + 1} epochs')
            break
    return params, trace


def train_pssc(X, cfg, K, rng, on_epoch=None):
    """Initializes, pretrains, seeds C and fine-tunes a network on X.

    Returns: (PsscParams, [pretrain TrainTrace, finetune TrainTrace]).
    """
    widths = cfg.layer_widths(X.shape[0])
    params = init_params(widths, X.shape[1], K, rng)
    logger.info(f'network widths {widths}, n = {X.shape[1]}, K = {K}')
    params, pre_trace = pretrain(X, params, cfg)
    params = seed_coefficients(X, params, cfg)
    params, fine_trace = finetune(X, params, cfg, on_epoch=on_epoch)
    return params, [pre_trace, fine_trace]
