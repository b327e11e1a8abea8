"""Supervised, pseudo-label and consistency losses with logit gradients.

Each function returns ``(loss, dz)`` where ``dz`` is the gradient of the loss
with respect to the model's logits, given that ``p`` is their row softmax.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import xlogy

from .pseudo import PseudoSet

# floor for log(p); softmax outputs are positive but may underflow
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class LossReport:
    sup: float
    pseudo: float
    consistency: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


def _log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, _TINY))


def supervised_loss(p: np.ndarray, labeled: np.ndarray, labels: np.ndarray):
    """Summed cross-entropy over the labeled nodes."""
    dz = np.zeros_like(p)
    labeled = np.asarray(labeled, dtype=np.int64)
    if len(labeled) == 0:
        return 0.0, dz
    y = labels[labeled]
    loss = -_log(p[labeled, y]).sum()
    dz[labeled] = p[labeled]
    dz[labeled, y] -= 1.0
    return float(loss), dz


def pseudo_label_loss(p_self: np.ndarray, peer_set: PseudoSet):
    """Certainty-weighted cross-entropy against the peer's hard targets, averaged over the peer set."""
    dz = np.zeros_like(p_self)
    size = len(peer_set)
    if size == 0:
        return 0.0, dz
    idx, y, w = peer_set.indices, peer_set.targets, peer_set.weights
    loss = -(w * _log(p_self[idx, y])).sum() / size
    rows = p_self[idx].copy()
    rows[np.arange(size), y] -= 1.0
    dz[idx] = (w / size)[:, None] * rows
    return float(loss), dz


def consistency_loss(p_self: np.ndarray, p_peer: np.ndarray, peer_set: PseudoSet):
    """Summed KL(p_peer || p_self) over the peer's selected rows; the peer is held fixed."""
    dz = np.zeros_like(p_self)
    if len(peer_set) == 0:
        return 0.0, dz
    idx = peer_set.indices
    q = p_peer[idx]
    kl = xlogy(q, q) - q * _log(p_self[idx])
    loss = max(float(kl.sum()), 0.0)
    dz[idx] = p_self[idx] * q.sum(axis=1, keepdims=True) - q
    return loss, dz


def overall_loss(
    p_self: np.ndarray,
    labeled: np.ndarray,
    labels: np.ndarray,
    p_peer: np.ndarray | None = None,
    peer_set: PseudoSet | None = None,
):
    """Unweighted sum of the three terms and of their logit gradients."""
    sup, dz = supervised_loss(p_self, labeled, labels)
    pl = cl = 0.0
    if peer_set is not None and len(peer_set):
        pl, dz_pl = pseudo_label_loss(p_self, peer_set)
        cl, dz_cl = consistency_loss(p_self, p_peer, peer_set)
        dz = dz + dz_pl + dz_cl
    return LossReport(sup, pl, cl, sup + pl + cl), dz
