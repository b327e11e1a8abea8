"""Two-layer GCN with hand-written backward pass and Adam."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import (
    ConfigError,
    SparseMatrix,
    dropout_mask,
    gemm,
    relu,
    relu_backward,
    row_softmax,
    spmm,
)

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


class NonFiniteError(FloatingPointError):
    """A gradient, parameter or loss left the finite range."""


@dataclass
class GcnModel:
    theta0: np.ndarray  # (c, f)
    theta1: np.ndarray  # (f, k)
    dropout: float = 0.5
    weight_decay: float = 5e-4
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    def __post_init__(self):
        if self.theta0.shape[1] != self.theta1.shape[0]:
            raise ConfigError("hidden width of theta0 and theta1 disagree")
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.params]
            self.v = [np.zeros_like(p) for p in self.params]

    @property
    def params(self) -> list:
        return [self.theta0, self.theta1]

    def copy(self) -> "GcnModel":
        return GcnModel(
            self.theta0.copy(),
            self.theta1.copy(),
            self.dropout,
            self.weight_decay,
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.step,
        )


@dataclass
class ForwardCache:
    x_in: np.ndarray | SparseMatrix  # input after dropout
    x_mask: np.ndarray | None
    pre1: np.ndarray  # A X theta0
    h: np.ndarray  # relu(pre1)
    h_mask: np.ndarray | None
    h_in: np.ndarray  # h after dropout
    z: np.ndarray
    p: np.ndarray


def glorot(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init(c: int, f: int, k: int, seed, dropout: float = 0.5, weight_decay: float = 5e-4) -> GcnModel:
    if min(c, f, k) < 1:
        raise ConfigError("c, f and k must be positive")
    if not 0.0 <= dropout < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {dropout}")
    rng = np.random.default_rng(seed)
    return GcnModel(glorot(c, f, rng), glorot(f, k, rng), dropout, weight_decay)


def _drop_input(x, rate: float, rng):
    if isinstance(x, SparseMatrix):
        # only stored entries can change; zeros stay zero under any mask
        mask = dropout_mask((x.nnz,), rate, rng)
        return x.with_values(x.data * mask), mask
    mask = dropout_mask(x.shape, rate, rng)
    return x * mask, mask


def _left_mul(x, w: np.ndarray) -> np.ndarray:
    return spmm(x, w) if isinstance(x, SparseMatrix) else gemm(x, w)


def forward(
    m: GcnModel,
    a_hat: SparseMatrix,
    x,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> ForwardCache:
    """``Z = A relu(A X theta0) theta1`` and its row softmax.

    ``x`` is dense or a :class:`SparseMatrix`; with a sparse ``x`` input
    dropout draws one value per stored entry.
    """
    n = a_hat.shape[0]
    if a_hat.shape != (n, n) or x.shape[0] != n:
        raise ConfigError(f"shape mismatch: a_hat {a_hat.shape}, x {x.shape}")
    if x.shape[1] != m.theta0.shape[0]:
        raise ConfigError(f"x has {x.shape[1]} columns, theta0 expects {m.theta0.shape[0]}")
    use_dropout = training and m.dropout > 0.0
    if use_dropout and rng is None:
        raise ConfigError("training-mode forward needs an rng")

    x_in, x_mask = _drop_input(x, m.dropout, rng) if use_dropout else (x, None)
    pre1 = spmm(a_hat, _left_mul(x_in, m.theta0))
    h = relu(pre1)
    if use_dropout:
        h_mask = dropout_mask(h.shape, m.dropout, rng)
        h_in = h * h_mask
    else:
        h_mask, h_in = None, h
    z = spmm(a_hat, gemm(h_in, m.theta1))
    return ForwardCache(x_in, x_mask, pre1, h, h_mask, h_in, z, row_softmax(z))


def backward(
    m: GcnModel, cache: ForwardCache, a_hat: SparseMatrix, x, dz: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the loss plus ``weight_decay/2 * ||theta||^2`` w.r.t. both weights."""
    if dz.shape != cache.z.shape:
        raise ConfigError(f"dz shape {dz.shape} does not match logits {cache.z.shape}")
    if cache.h.shape[1] != m.theta0.shape[1] or cache.z.shape[1] != m.theta1.shape[1]:
        raise ConfigError("forward cache was produced by a different model")
    g_out = spmm(a_hat, dz, transpose=True)  # dL/d(h_in theta1)
    grad1 = gemm(cache.h_in, g_out, transpose_a=True)
    dh = gemm(g_out, m.theta1, transpose_b=True)
    if cache.h_mask is not None:
        dh = dh * cache.h_mask
    dpre = spmm(a_hat, relu_backward(cache.pre1, dh), transpose=True)  # dL/d(x_in theta0)
    x_in = cache.x_in
    if isinstance(x_in, SparseMatrix):
        grad0 = spmm(x_in, dpre, transpose=True)
    else:
        grad0 = gemm(x_in, dpre, transpose_a=True)
    lam = m.weight_decay
    return grad0 + lam * m.theta0, grad1 + lam * m.theta1


def adam_step(m: GcnModel, grads, lr: float) -> GcnModel:
    """One bias-corrected Adam update, in place."""
    grads = list(grads)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient at optimizer step {m.step + 1}")
    m.step += 1
    bc1 = 1.0 - BETA1**m.step
    bc2 = 1.0 - BETA2**m.step
    for p, g, mom, vel in zip(m.params, grads, m.m, m.v):
        mom *= BETA1
        mom += (1.0 - BETA1) * g
        vel *= BETA2
        vel += (1.0 - BETA2) * (g * g)
        p -= lr * (mom / bc1) / (np.sqrt(vel / bc2) + EPS)
    return m


# ------------------------------------------------------------- checkpoints
# layout: uint64 count, then per parameter uint64 rows, uint64 cols and
# rows*cols float64 values in row-major order; all little-endian


def save_params(path, m: GcnModel) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(m.params)))
        for p in m.params:
            fh.write(struct.pack("<QQ", *p.shape))
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_params(path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    (count,), off = struct.unpack_from("<Q", raw, 0), 8
    out = []
    for _ in range(count):
        rows, cols = struct.unpack_from("<QQ", raw, off)
        off += 16
        size = rows * cols * 8
        if off + size > len(raw):
            raise ValueError(f"{path}: truncated checkpoint")
        out.append(np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols).astype(np.float64))
        off += size
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return out


def load_model(path, dropout: float = 0.5, weight_decay: float = 5e-4) -> GcnModel:
    theta0, theta1 = load_params(path)
    return GcnModel(theta0, theta1, dropout, weight_decay)
