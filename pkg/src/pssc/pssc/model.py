"""Parameters and forward pass of the self-expressive auto-encoder.

Data flows encoder -> self-expression layer (weights C) -> decoder, with a
softmax classifier head branching off the encoder output Z. Samples are
columns throughout, so a layer computes W @ h + b[:, None].
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ContractViolationError
from .linalg import as_mat, softmax_rows, solve_spd

PRETRAIN = 'pretrain'
FULL = 'full'
C_INIT_STD = 1e-4


@dataclass
class LayerParams:
    W: np.ndarray
    b: np.ndarray

    def copy(self):
        return LayerParams(self.W.copy(), self.b.copy())

    @property
    def widths(self):
        return self.W.shape[1], self.W.shape[0]


@dataclass
class PsscParams:
    """All trainable parameters.

    Attributes:
      encoder: Dense layers input -> latent (ReLU on all but the last).
      decoder: Dense layers latent -> input, widths mirroring the encoder.
      C: n x n self-expression coefficients, diag(C) = 0 at all times.
      classifier: Affine map latent -> K feeding the softmax.
    """
    encoder: List[LayerParams]
    decoder: List[LayerParams]
    C: np.ndarray
    classifier: LayerParams

    def layer_widths(self):
        """Returns (input, hidden..., latent) widths of the encoder."""
        return [self.encoder[0].W.shape[1]] + [l.W.shape[0] for l in self.encoder]

    @property
    def n(self):
        return self.C.shape[0]

    @property
    def K(self):
        return self.classifier.W.shape[0]

    def named_arrays(self):
        """Returns [(name, array)] in the canonical parameter order.

        The order is encoder layers, decoder layers, C, classifier; it is the
        order used by the optimizer state and the checkpoint format.
        """
        arrays = []
        for idx, layer in enumerate(self.encoder):
            arrays += [(f'encoder.{idx}.W', layer.W), (f'encoder.{idx}.b', layer.b)]
        for idx, layer in enumerate(self.decoder):
            arrays += [(f'decoder.{idx}.W', layer.W), (f'decoder.{idx}.b', layer.b)]
        arrays.append(('C', self.C))
        arrays += [('classifier.W', self.classifier.W),
                   ('classifier.b', self.classifier.b)]
        return arrays

    def copy(self):
        return PsscParams([l.copy() for l in self.encoder],
                          [l.copy() for l in self.decoder],
                          self.C.copy(), self.classifier.copy())

    def zeros_like(self):
        zero = lambda l: LayerParams(np.zeros_like(l.W), np.zeros_like(l.b))
        return PsscParams([zero(l) for l in self.encoder],
                          [zero(l) for l in self.decoder],
                          np.zeros_like(self.C), zero(self.classifier))

    def check_constraints(self):
        """Raises ContractViolationError if diag(C) is not exactly zero."""
        diag = np.abs(np.diag(self.C))
        if diag.size and diag.max() != 0.0:
            raise ContractViolationError(
                    f'diag(C) must be zero (max |C_ii| = {diag.max():.3e}).')


@dataclass
class ForwardCache:
    """Activations of one forward pass, kept for backpropagation."""
    mode: str
    X: np.ndarray
    Z: np.ndarray
    ZC: Optional[np.ndarray]
    Xhat: np.ndarray
    F: np.ndarray
    enc_inputs: List[np.ndarray] = field(default_factory=list)
    enc_pre: List[np.ndarray] = field(default_factory=list)
    dec_inputs: List[np.ndarray] = field(default_factory=list)
    dec_pre: List[np.ndarray] = field(default_factory=list)


@dataclass
class PseudoLabels:
    """Thresholded argmax targets of the classifier (constants for training).

    Attributes:
      y: Predicted class per sample (lowest index wins ties).
      p: Confidence F[i, y_i].
      V: 1 where p_i >= thres, else 0.
      thres: Threshold the mask was built with.
    """
    y: np.ndarray
    p: np.ndarray
    V: np.ndarray
    thres: float

    @property
    def confident_count(self):
        return int(self.V.sum())


def _uniform_layer(rng, fan_in, fan_out, rectified):
    limit = np.sqrt((6.0 if rectified else 3.0) / fan_in)
    W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
    return LayerParams(W, np.zeros(fan_out))


def init_params(layer_widths, n, K, rng):
    """Randomly initializes every parameter.

    Arguments:
      layer_widths: Encoder widths (input, hidden..., latent); the decoder
          mirrors them.
      n: Number of samples (C is n x n).
      K: Number of classifier outputs.
      rng: SeededRng.

    Returns: PsscParams with fan-in scaled uniform weights, zero biases and C
      drawn i.i.d. normal with standard deviation 1e-4, diagonal zeroed.
    """
    widths = [int(w) for w in layer_widths]
    if len(widths) < 2 or min(widths) < 1:
        raise ContractViolationError(
                f'Need at least input and latent widths, got {widths}.')
    if n < 2 or K < 2:
        raise ContractViolationError(f'Need n >= 2 and K >= 2 (n={n}, K={K}).')

    depth = len(widths) - 1
    encoder = [_uniform_layer(rng, widths[i], widths[i + 1], i < depth - 1)
               for i in range(depth)]
    mirrored = widths[::-1]
    decoder = [_uniform_layer(rng, mirrored[i], mirrored[i + 1], i < depth - 1)
               for i in range(depth)]
    C = rng.normal(C_INIT_STD, size=(n, n))
    np.fill_diagonal(C, 0.0)
    classifier = _uniform_layer(rng, widths[-1], K, False)
    return PsscParams(encoder, decoder, C, classifier)


def least_squares_coefficients(X, reg):
    """Ridge self-representation of the columns of X with a zero diagonal.

    Column j solves min ||c||^2 + ||x_j - X c||^2 / reg subject to c_j = 0,
    which in closed form is -D[:, j] / D[j, j] for D = (X^T X + reg I)^-1.

    Raises: ContractViolationError on a non-positive `reg`;
      FactorizationError if the regularized Gram matrix cannot be factored.
    """
    X = as_mat(X, 'X')
    if not reg > 0:
        raise ContractViolationError(f'reg must be positive, got {reg}.')
    d, n = X.shape
    if n <= d:
        D = solve_spd(X.T @ X + reg * np.eye(n), np.eye(n))
    else:
        # (X^T X + reg I)^-1 up to the factor 1 / reg, which cancels below
        D = np.eye(n) - X.T @ solve_spd(X @ X.T + reg * np.eye(d), X)
    C = -D / np.diag(D)[None, :]
    np.fill_diagonal(C, 0.0)
    return C


def _dense_stack(layers, h, inputs, pre):
    last = len(layers) - 1
    for idx, layer in enumerate(layers):
        inputs.append(h)
        a = layer.W @ h + layer.b[:, None]
        pre.append(a)
        h = np.maximum(a, 0.0) if idx < last else a
    return h


def encode(params, X):
    """Runs the encoder only and returns the latent codes Z (latent x n)."""
    X = as_mat(X, 'X')
    if X.shape[0] != params.encoder[0].W.shape[1]:
        raise ContractViolationError(
                f'X has {X.shape[0]} features, encoder expects '
                f'{params.encoder[0].W.shape[1]}.')
    return _dense_stack(params.encoder, X, [], [])


def forward(params, X, mode=FULL):
    """Runs the network on X (d x n) and keeps the activations.

    In `pretrain` mode the decoder reads Z directly and C is ignored; in
    `full` mode the decoder reads ZC. The classifier always reads Z.

    Raises: ContractViolationError on shape mismatch or an unknown mode.
    """
    if mode not in (PRETRAIN, FULL):
        raise ContractViolationError(f'Unknown forward mode {mode!r}.')
    X = as_mat(X, 'X')
    if X.shape[0] != params.encoder[0].W.shape[1]:
        raise ContractViolationError(
                f'X has {X.shape[0]} features, encoder expects '
                f'{params.encoder[0].W.shape[1]}.')
    if mode == FULL and X.shape[1] != params.n:
        raise ContractViolationError(
                f'X has {X.shape[1]} samples but C is {params.n} x {params.n}.')

    cache = ForwardCache(mode=mode, X=X, Z=None, ZC=None, Xhat=None, F=None)
    Z = _dense_stack(params.encoder, X, cache.enc_inputs, cache.enc_pre)
    decoder_input = Z
    if mode == FULL:
        cache.ZC = Z @ params.C
        decoder_input = cache.ZC
    cache.Z = Z
    cache.Xhat = _dense_stack(params.decoder, decoder_input, cache.dec_inputs,
                              cache.dec_pre)
    logits = (params.classifier.W @ Z + params.classifier.b[:, None]).T
    cache.F = softmax_rows(logits)
    return cache


def pseudo_labels(F, thres):
    """Extracts argmax pseudo-labels and their confidence mask from F (n x K)."""
    F = np.asarray(F, dtype=np.float64)
    y = np.argmax(F, axis=1)
    p = F[np.arange(F.shape[0]), y]
    V = (p >= thres).astype(np.int64)
    return PseudoLabels(y=y, p=p, V=V, thres=float(thres))
