"""Dense and sparse numerical kernels.

Dense matrices are plain 2-D ``float64`` numpy arrays. Sparse matrices are
held in CSR form by :class:`SparseMatrix`; products go through scipy's CSR
kernels, which are single-threaded and therefore bitwise reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class ConfigError(ValueError):
    """Raised for shape mismatches and out-of-range settings."""


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix with validated structure."""

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _csr: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows, cols = self.shape
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if rows < 0 or cols < 0:
            raise ConfigError(f"negative shape {self.shape}")
        if indptr.shape != (rows + 1,) or indptr[0] != 0:
            raise ConfigError("row pointer must have length rows+1 and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise ConfigError("row pointer must be nondecreasing")
        nnz = int(indptr[-1])
        if indices.shape != (nnz,) or data.shape != (nnz,):
            raise ConfigError("index/value arrays must have length nnz")
        if nnz and (indices.min() < 0 or indices.max() >= cols):
            raise ConfigError("column index out of range")
        if not np.all(np.isfinite(data)):
            raise ConfigError("stored values must be finite")
        # strictly increasing columns within each row
        if nnz > 1:
            step = np.diff(indices)
            row_starts = indptr[1:-1]
            same_row = np.ones(nnz - 1, dtype=bool)
            same_row[row_starts[(row_starts > 0) & (row_starts < nnz)] - 1] = False
            if np.any(step[same_row] <= 0):
                raise ConfigError("column indices must be strictly increasing within a row")
        for name, arr in (("indptr", indptr), ("indices", indices), ("data", data)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "shape", (int(rows), int(cols)))
        object.__setattr__(
            self, "_csr", sp.csr_matrix((data, indices, indptr), shape=self.shape)
        )

    @classmethod
    def from_coo(cls, rows, cols, values, shape) -> "SparseMatrix":
        """Build from triplets; duplicate coordinates are summed."""
        m = sp.coo_matrix(
            (np.asarray(values, dtype=np.float64), (np.asarray(rows), np.asarray(cols))),
            shape=shape,
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(shape, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        m = sp.csr_matrix(np.asarray(a, dtype=np.float64))
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape, m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls((n, n), np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @property
    def T(self) -> "SparseMatrix":
        t = self._csr.T.tocsr()
        t.sort_indices()
        return SparseMatrix(t.shape, t.indptr, t.indices, t.data)

    def with_values(self, data) -> "SparseMatrix":
        """Same sparsity pattern, new stored values."""
        return SparseMatrix(self.shape, self.indptr, self.indices, data)

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()


def _as_dense(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2:
        raise ConfigError(f"expected a 2-D matrix, got shape {d.shape}")
    return d


def spmm(s: SparseMatrix, d, transpose: bool = False) -> np.ndarray:
    """Sparse-times-dense product ``s @ d`` (``s.T @ d`` with ``transpose``)."""
    d = _as_dense(d)
    inner = s.shape[0] if transpose else s.shape[1]
    if inner != d.shape[0]:
        op = "s.T" if transpose else "s"
        raise ConfigError(f"spmm dimension mismatch: {op} of {s.shape} x {d.shape}")
    csr = s._csr.T if transpose else s._csr
    return np.asarray(csr @ d)


def gemm(a, b, transpose_a: bool = False, transpose_b: bool = False) -> np.ndarray:
    """Dense product with optional operand transposition."""
    a = _as_dense(a)
    b = _as_dense(b)
    if transpose_a:
        a = a.T
    if transpose_b:
        b = b.T
    if a.shape[1] != b.shape[0]:
        raise ConfigError(f"gemm dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def row_softmax(z) -> np.ndarray:
    z = _as_dense(z)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def log_row_softmax(z) -> np.ndarray:
    z = _as_dense(z)
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def relu(z) -> np.ndarray:
    return np.maximum(_as_dense(z), 0.0)


def relu_backward(z, upstream) -> np.ndarray:
    z = _as_dense(z)
    upstream = _as_dense(upstream)
    if z.shape != upstream.shape:
        raise ConfigError(f"relu_backward shape mismatch: {z.shape} vs {upstream.shape}")
    return np.where(z > 0, upstream, 0.0)


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability ``rate``, else ``1/(1-rate)``."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)
