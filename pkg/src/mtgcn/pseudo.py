"""High-confidence pseudo-label selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from .graph import Split


@dataclass(frozen=True)
class PseudoSet:
    indices: np.ndarray  # node ids in selection order
    targets: np.ndarray  # hard label per selected node
    weights: np.ndarray  # certainty per selected node, in [0, 1]

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def empty(cls) -> "PseudoSet":
        return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))

    def class_counts(self, k: int) -> np.ndarray:
        return np.bincount(self.targets, minlength=k)


def hard_labels(p: np.ndarray) -> np.ndarray:
    """Row argmax; ties go to the lowest class index."""
    return np.argmax(p, axis=1)


def confidence(p: np.ndarray) -> np.ndarray:
    return p.max(axis=1)


def confidence_order(c: np.ndarray) -> np.ndarray:
    """Node ids by descending confidence, ties by ascending id."""
    return np.argsort(-np.asarray(c, dtype=np.float64), kind="stable")


def certainty_weights(p: np.ndarray) -> np.ndarray:
    """``1 - H(p_i) / log k`` per row, natural log, clamped to [0, 1]."""
    k = p.shape[1]
    if k < 2:
        raise ValueError("certainty needs at least two classes")
    h = entr(p).sum(axis=1)  # 0 log 0 = 0
    return np.clip(1.0 - h / np.log(k), 0.0, 1.0)


def select_top_t(p: np.ndarray, split: Split, t: int) -> PseudoSet:
    """Walk nodes in confidence order and keep up to ``t`` unlabeled nodes per predicted class."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = p.shape[0]
    if t == 0:
        return PseudoSet.empty()
    labels = hard_labels(p)
    order = confidence_order(confidence(p))
    order = order[~split.labeled_mask(n)[order]]
    cls = labels[order]
    # rank of each candidate among earlier candidates of its class
    rank = np.empty(len(order), dtype=np.int64)
    for j in np.unique(cls):
        hit = cls == j
        rank[hit] = np.arange(hit.sum())
    chosen = order[rank < t]
    return PseudoSet(
        chosen.astype(np.int64),
        labels[chosen].astype(np.int64),
        certainty_weights(p[chosen]) if len(chosen) else np.empty(0),
    )
