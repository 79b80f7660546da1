"""Dataset ingestion and the union-of-subspaces generator.

Inside the package samples are columns (X is d x n); on disk CSV files hold
one sample per row, so every CSV boundary transposes.
"""
from dataclasses import dataclass
from pathlib import Path
import struct
from typing import Optional

import numpy as np
import pandas as pd

from .errors import IngestionError
from .formats import read_matbin
from .linalg import SeededRng

IDX_UBYTE = 0x08
IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CSV_FLOAT_FORMAT = '%.17g'


@dataclass
class Dataset:
    """Columns of X are samples; true_labels (if known) has one entry each."""
    X: np.ndarray
    true_labels: Optional[np.ndarray]
    name: str

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def d(self):
        return self.X.shape[0]


def _csv_location(frame, mask):
    row, col = np.argwhere(mask)[0]
    return f'line {row + 1}, column {col + 1}'


def _first_bad_cell(path):
    raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    bad = raw.apply(pd.to_numeric, errors='coerce').isna().to_numpy()
    if not bad.any():
        return None, None
    return raw.to_numpy()[bad][0], _csv_location(raw, bad)


def read_csv_matrix(path, labels_col=False):
    """Reads a headerless numeric CSV, one sample per row.

    Values are parsed with round-trip precision, so text written with
    CSV_FLOAT_FORMAT reads back bit-exact.

    Returns: (X as d x n, labels or None).

    Raises: IngestionError locating the first non-numeric or non-finite
      cell, or describing a structural parse failure.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, skip_blank_lines=True,
                            float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise IngestionError(f'Cannot parse CSV: {err}', stage='ingest',
                             path=path)

    numeric = all(pd.api.types.is_numeric_dtype(frame[col])
                  and not pd.api.types.is_bool_dtype(frame[col])
                  for col in frame.columns)
    if not numeric or frame.isna().to_numpy().any():
        cell, where = _first_bad_cell(path)
        raise IngestionError(f'Non-numeric or missing value {cell!r}.',
                             stage='ingest', path=path, offset=where)
    values = frame.to_numpy(dtype=np.float64)
    infinite = ~np.isfinite(values)
    if infinite.any():
        raise IngestionError('Non-finite value.', stage='ingest', path=path,
                             offset=_csv_location(frame, infinite))

    labels = None
    if labels_col:
        if values.shape[1] < 2:
            raise IngestionError('Label column requested but the file has a '
                                 'single column.', stage='ingest', path=path)
        raw_labels = values[:, -1]
        fractional = raw_labels != np.round(raw_labels)
        if fractional.any():
            row = int(np.argmax(fractional))
            raise IngestionError(
                    f'Label {raw_labels[row]} is not an integer.',
                    stage='ingest', path=path,
                    offset=f'line {row + 1}, column {values.shape[1]}')
        labels = raw_labels.astype(np.int64)
        values = values[:, :-1]
    return np.ascontiguousarray(values.T), labels


def _read_idx(path, expected_magic):
    path = Path(path)
    try:
        buffer = path.read_bytes()
    except OSError as err:
        raise IngestionError(f'Cannot read IDX file: {err}', path=path)
    if len(buffer) < 4:
        raise IngestionError('IDX header truncated.', stage='ingest',
                             path=path, offset=len(buffer))
    magic = struct.unpack_from('>I', buffer, 0)[0]
    if magic != expected_magic:
        raise IngestionError(
                f'IDX magic {magic:#010x}, expected {expected_magic:#010x}.',
                stage='ingest', path=path, offset=0)
    ndims = magic & 0xFF
    header_end = 4 + 4 * ndims
    if len(buffer) < header_end:
        raise IngestionError('IDX dimension header truncated.',
                             stage='ingest', path=path, offset=len(buffer))
    dims = struct.unpack_from(f'>{ndims}I', buffer, 4)
    count = int(np.prod(dims))
    if len(buffer) != header_end + count:
        raise IngestionError(
                f'IDX dims {dims} need {count} data bytes, found '
                f'{len(buffer) - header_end}.',
                stage='ingest', path=path, offset=header_end)
    data = np.frombuffer(buffer, dtype=np.uint8, count=count,
                         offset=header_end)
    return data.reshape(dims)


def read_idx_images(path):
    """Reads an IDX unsigned-byte image file into X (pixels x n) in [0, 1]."""
    images = _read_idx(path, IDX_IMAGE_MAGIC)
    return np.ascontiguousarray(
            images.reshape(images.shape[0], -1).T.astype(np.float64) / 255.0)


def read_idx_labels(path):
    return _read_idx(path, IDX_LABEL_MAGIC).astype(np.int64)


def read_labels_csv(path, column='label'):
    """Reads integer labels from a CSV file.

    Files with a header (such as the labels.csv a run writes) are read from
    `column`, falling back to a column named `label`; headerless files are
    read from their last column.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise IngestionError(f'Cannot parse label CSV: {err}', stage='ingest',
                             path=path)
    column = next((c for c in (column, 'label') if c in frame.columns), None)
    if column is not None:
        values = pd.to_numeric(frame[column], errors='coerce').to_numpy()
        bad = ~np.isfinite(values) | (values != np.round(values))
        if bad.any():
            row = int(np.argmax(bad))
            raise IngestionError(f'Invalid label in column {column!r}.',
                                 stage='ingest', path=path,
                                 offset=f'line {row + 2}')
        return values.astype(np.int64)
    values, _ = read_csv_matrix(path)
    labels = values[-1]
    if np.any(labels != np.round(labels)):
        raise IngestionError('Labels must be integers.', stage='ingest',
                             path=path)
    return labels.astype(np.int64)


def minmax_scale(X):
    """Affinely maps all entries of X into [0, 1] (constant data maps to 0)."""
    low, high = float(X.min()), float(X.max())
    if high == low:
        return np.zeros_like(X)
    return (X - low) / (high - low)


def load_dataset(path, format='csv', labels_col=False, idx_labels=None,
                 labels_file=None, scale='none'):
    """Loads a dataset file into a Dataset.

    Arguments:
      path: Data file.
      format: 'csv' (one sample per row), 'idx' (IDX image file) or 'matbin'
          (d x n matrix in the package's binary format).
      labels_col: For csv, treat the last column as the true label.
      idx_labels: For idx, the matching IDX label file.
      labels_file: A label file for data without embedded labels, read
          with read_labels_csv.
      scale: 'minmax' maps the values into [0, 1]; IDX pixels are always
          divided by 255.

    Raises: IngestionError for unreadable or malformed files.
    """
    path = Path(path)
    labels = None
    if format == 'csv':
        X, labels = read_csv_matrix(path, labels_col)
    elif format == 'idx':
        X = read_idx_images(path)
        if idx_labels is not None:
            labels = read_idx_labels(idx_labels)
    elif format == 'matbin':
        X = read_matbin(path)
    else:
        raise IngestionError(f'Unknown dataset format {format!r}.', path=path)

    if labels is None and labels_file is not None:
        labels = read_labels_csv(labels_file)

    if labels is not None and labels.size != X.shape[1]:
        raise IngestionError(
                f'{labels.size} labels for {X.shape[1]} samples.',
                stage='ingest', path=path)
    if scale == 'minmax':
        X = minmax_scale(X)
    return Dataset(X=X, true_labels=labels, name=path.stem)


def synthesize_subspaces(cfg):
    """Samples points from k random q-dimensional linear subspaces of R^d.

    Each subspace gets an orthonormal basis (QR of a Gaussian matrix); points
    are basis @ coefficients with standard-normal coefficients, plus
    isotropic Gaussian noise of standard deviation cfg.noise. Samples are
    grouped by cluster.
    """
    rng = SeededRng(cfg.seed).child('synth')
    blocks = []
    for _ in range(cfg.k):
        basis, _ = np.linalg.qr(rng.normal(size=(cfg.d, cfg.q)))
        blocks.append(basis @ rng.normal(size=(cfg.q, cfg.per_cluster)))
    X = np.hstack(blocks)
    if cfg.noise > 0:
        X = X + rng.normal(cfg.noise, size=X.shape)
    labels = np.repeat(np.arange(cfg.k), cfg.per_cluster)
    name = f'subspaces_k{cfg.k}_q{cfg.q}_d{cfg.d}'
    return Dataset(X=X, true_labels=labels, name=name)


def write_csv_dataset(path, dataset):
    """Writes one sample per row, the true label (if any) last."""
    frame = pd.DataFrame(dataset.X.T)
    if dataset.true_labels is not None:
        frame[frame.shape[1]] = dataset.true_labels
    frame.to_csv(path, header=False, index=False, float_format=CSV_FLOAT_FORMAT)
