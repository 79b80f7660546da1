"""Binary matrix and checkpoint files.

Both formats are little-endian and start with an 8-byte magic string.

matbin:
    bytes 0-7    b'PSSCMAT\\0'
    uint64       rows
    uint64       cols
    float64[]    rows * cols values, row-major

checkpoint:
    bytes 0-7    b'PSSCCKP\\0'
    uint64       L, the number of encoder widths
    uint64[L]    encoder widths (input, hidden..., latent)
    uint64       n (C is n x n)
    uint64       K (classifier outputs)
    float64[]    encoder W, b per layer; decoder W, b per layer; C;
                 classifier W; classifier b; all row-major
"""
from pathlib import Path
import struct

import numpy as np

from .errors import IngestionError
from .model import init_params
from .linalg import SeededRng

MATBIN_MAGIC = b'PSSCMAT\0'
CHECKPOINT_MAGIC = b'PSSCCKP\0'
_U64 = struct.Struct('<Q')
_F64 = np.dtype('<f8')


def write_matbin(path, mat):
    mat = np.ascontiguousarray(mat, dtype=_F64)
    if mat.ndim != 2:
        raise ValueError(f'matbin holds 2-D matrices, got shape {mat.shape}.')
    with open(path, 'wb') as out:
        out.write(MATBIN_MAGIC)
        out.write(_U64.pack(mat.shape[0]))
        out.write(_U64.pack(mat.shape[1]))
        out.write(mat.tobytes(order='C'))


class _Reader:
    """Sequential reader over a byte buffer that reports failing offsets."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            self.buffer = self.path.read_bytes()
        except OSError as err:
            raise IngestionError(f'Cannot read file: {err}', path=self.path)
        self.offset = 0

    def fail(self, message):
        raise IngestionError(message, stage='ingest', path=self.path,
                             offset=self.offset)

    def magic(self, expected):
        if self.buffer[:len(expected)] != expected:
            self.fail(f'Bad magic {self.buffer[:len(expected)]!r}, expected '
                      f'{expected!r}.')
        self.offset = len(expected)

    def u64(self):
        if self.offset + 8 > len(self.buffer):
            self.fail('Header truncated.')
        value = _U64.unpack_from(self.buffer, self.offset)[0]
        self.offset += 8
        return value

    def remaining(self):
        return len(self.buffer) - self.offset

    def floats(self, count):
        end = self.offset + 8 * count
        if end > len(self.buffer):
            self.fail(f'Expecting {count} float64 values, file ends early.')
        values = np.frombuffer(self.buffer, dtype=_F64, count=count,
                               offset=self.offset).astype(np.float64)
        if not np.all(np.isfinite(values)):
            bad = int(np.argmax(~np.isfinite(values)))
            self.offset += 8 * bad
            self.fail('Non-finite value.')
        self.offset = end
        return values

    def finish(self):
        if self.offset != len(self.buffer):
            self.fail(f'{len(self.buffer) - self.offset} trailing bytes.')


def read_matbin(path):
    """Reads a matbin file back into a float64 matrix.

    Raises: IngestionError with the byte offset of the first problem.
    """
    reader = _Reader(path)
    reader.magic(MATBIN_MAGIC)
    rows, cols = reader.u64(), reader.u64()
    mat = reader.floats(rows * cols).reshape(rows, cols)
    reader.finish()
    return mat


def write_checkpoint(path, params):
    widths = params.layer_widths()
    with open(path, 'wb') as out:
        out.write(CHECKPOINT_MAGIC)
        out.write(_U64.pack(len(widths)))
        for width in widths:
            out.write(_U64.pack(width))
        out.write(_U64.pack(params.n))
        out.write(_U64.pack(params.K))
        for _, array in params.named_arrays():
            out.write(np.ascontiguousarray(array, dtype=_F64).tobytes(order='C'))


def _checkpoint_float_count(widths, n, K):
    layers = sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))
    return 2 * layers + n * n + widths[-1] * K + K


def read_checkpoint(path):
    """Reads a checkpoint into a PsscParams.

    Raises: IngestionError with the byte offset of the first problem.
    """
    reader = _Reader(path)
    reader.magic(CHECKPOINT_MAGIC)
    count = reader.u64()
    if count < 2 or 8 * (count + 2) > reader.remaining():
        reader.fail(f'Header declares {count} layer widths; need at least 2 '
                    f'and {reader.remaining()} bytes remain.')
    widths = [reader.u64() for _ in range(count)]
    n, K = reader.u64(), reader.u64()
    if n < 2 or K < 2 or min(widths) < 1:
        reader.fail(f'Invalid header: widths {widths}, n {n}, K {K}.')
    expected = 8 * _checkpoint_float_count(widths, n, K)
    if expected != reader.remaining():
        reader.fail(f'Header (widths {widths}, n {n}, K {K}) implies '
                    f'{expected} body bytes, found {reader.remaining()}.')

    # shapes come from a template; its random values are all overwritten
    params = init_params(widths, n, K, SeededRng(0))
    for _, array in params.named_arrays():
        array[...] = reader.floats(array.size).reshape(array.shape)
    reader.finish()
    return params
