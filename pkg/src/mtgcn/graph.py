"""Graph construction, dataset bundles and labeled/unlabeled splits.

A dataset bundle is a directory with four UTF-8 files:

``meta.json``
    ``{"name", "n", "k", "c", "feature_mode"}`` with ``feature_mode`` in
    ``{"sparse", "dense"}``.
``edges.tsv``
    one ``u<TAB>v`` citation link per line, 0-based node ids.
``features.tsv``
    one line per node: ``node_id<TAB>col:val col:val ...`` (sparse) or
    ``node_id<TAB>v0,v1,...`` (dense).
``labels.tsv``
    ``node_id<TAB>class`` per node.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import ConfigError, SparseMatrix


class DatasetError(Exception):
    """A bundle file is missing or malformed."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = Path(path)
        self.line = line


@dataclass(frozen=True)
class RawGraph:
    """Undirected, unweighted graph on nodes ``0..n-1`` without self-loops."""

    n: int
    edges: np.ndarray  # (m, 2) int64, u < v, unique

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ConfigError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ConfigError("self-loops are not stored; normalization adds them")
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_links(cls, n: int, links) -> "RawGraph":
        """Collapse a raw link list: drop direction, duplicates and self-loops."""
        links = np.asarray(links, dtype=np.int64).reshape(-1, 2)
        links = links[links[:, 0] != links[:, 1]]
        canon = np.sort(links, axis=1)
        canon = np.unique(canon, axis=0) if len(canon) else canon
        return cls(n, canon)

    def degrees(self) -> np.ndarray:
        """Degrees of ``A + I``."""
        d = np.ones(self.n)
        np.add.at(d, self.edges[:, 0], 1.0)
        np.add.at(d, self.edges[:, 1], 1.0)
        return d


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray  # (n, c)
    labels: np.ndarray  # (n,) int64 in [0, k)
    k: int
    num_links: int = 0  # link lines in the source edge list

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("need at least two classes")
        if self.features.ndim != 2 or self.features.shape[0] != len(self.labels):
            raise ConfigError("feature rows must equal the number of labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ConfigError("label out of range [0, k)")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def c(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Split:
    labeled: np.ndarray
    unlabeled: np.ndarray
    test: np.ndarray
    seed: int | None = None

    def labeled_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[self.labeled] = True
        return mask


def normalize_adjacency(g: RawGraph) -> SparseMatrix:
    """Renormalized adjacency ``D^-1/2 (A + I) D^-1/2``.

    Entries are written as ``1/sqrt(d_i * d_j)`` for both orientations, so the
    result is exactly symmetric.
    """
    d = g.degrees()
    u, v = g.edges[:, 0], g.edges[:, 1]
    diag = np.arange(g.n)
    rows = np.concatenate([diag, u, v])
    cols = np.concatenate([diag, v, u])
    vals = 1.0 / np.sqrt(d[rows] * d[cols])
    return SparseMatrix.from_coo(rows, cols, vals, (g.n, g.n))


def sample_split(d: Dataset, per_class: int, seed: int) -> Split:
    """Draw ``per_class`` labeled nodes from every class; the rest is test."""
    if per_class < 0:
        raise ConfigError("per_class must be nonnegative")
    counts = np.bincount(d.labels, minlength=d.k)
    if per_class > counts.min():
        raise ConfigError(
            f"per_class={per_class} exceeds the smallest class size {counts.min()}"
        )
    rng = np.random.default_rng(seed)
    picked = [
        rng.choice(np.flatnonzero(d.labels == j), size=per_class, replace=False)
        for j in range(d.k)
    ]
    labeled = np.sort(np.concatenate(picked)).astype(np.int64)
    mask = np.zeros(d.n, dtype=bool)
    mask[labeled] = True
    unlabeled = np.flatnonzero(~mask)
    return Split(labeled, unlabeled, unlabeled.copy(), seed)


# ---------------------------------------------------------------- bundle I/O


def _read_lines(path: Path):
    if not path.is_file():
        raise DatasetError(path, None, "missing file")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.strip():
                yield lineno, line


def _node_id(path, lineno, token: str, n: int) -> int:
    try:
        i = int(token)
    except ValueError:
        raise DatasetError(path, lineno, f"bad node id {token!r}") from None
    if not 0 <= i < n:
        raise DatasetError(path, lineno, f"node id {i} out of range [0, {n})")
    return i


def load_dataset(path, name: str | None = None) -> tuple[RawGraph, Dataset]:
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise DatasetError(meta_path, None, "missing file")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        n, k, c = int(meta["n"]), int(meta["k"]), int(meta["c"])
        mode = meta.get("feature_mode", "sparse")
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetError(meta_path, None, f"malformed metadata ({exc})") from None
    if mode not in ("sparse", "dense"):
        raise DatasetError(meta_path, None, f"unknown feature_mode {mode!r}")
    if name is not None and meta.get("name") and meta["name"].lower() != name.lower():
        raise DatasetError(meta_path, None, f"bundle holds {meta['name']!r}, not {name!r}")

    epath = root / "edges.tsv"
    links = []
    for lineno, line in _read_lines(epath):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(epath, lineno, "expected 'u<TAB>v'")
        links.append((_node_id(epath, lineno, parts[0], n), _node_id(epath, lineno, parts[1], n)))

    fpath = root / "features.tsv"
    x = np.zeros((n, c))
    seen = np.zeros(n, dtype=bool)
    for lineno, line in _read_lines(fpath):
        head, _, body = line.partition("\t")
        i = _node_id(fpath, lineno, head, n)
        if seen[i]:
            raise DatasetError(fpath, lineno, f"duplicate node id {i}")
        seen[i] = True
        try:
            if mode == "sparse":
                for item in body.split():
                    col, val = item.split(":")
                    if not 0 <= int(col) < c:
                        raise ValueError(f"column {col} out of range [0, {c})")
                    x[i, int(col)] = float(val)
            else:
                row = [float(v) for v in body.split(",")] if body else []
                if len(row) != c:
                    raise ValueError(f"expected {c} values, got {len(row)}")
                x[i] = row
        except (ValueError, IndexError) as exc:
            raise DatasetError(fpath, lineno, f"malformed feature row ({exc})") from None
    if not np.all(np.isfinite(x)):
        raise DatasetError(fpath, None, "non-finite feature value")

    lpath = root / "labels.tsv"
    y = np.full(n, -1, dtype=np.int64)
    for lineno, line in _read_lines(lpath):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(lpath, lineno, "expected 'node_id<TAB>class'")
        i = _node_id(lpath, lineno, parts[0], n)
        if y[i] != -1:
            raise DatasetError(lpath, lineno, f"duplicate node id {i}")
        try:
            y[i] = int(parts[1])
        except ValueError:
            raise DatasetError(lpath, lineno, f"bad class {parts[1]!r}") from None
        if not 0 <= y[i] < k:
            raise DatasetError(lpath, lineno, f"class {y[i]} out of range [0, {k})")
    if np.any(y < 0):
        raise DatasetError(lpath, None, f"{int((y < 0).sum())} nodes have no label")

    graph = RawGraph.from_links(n, links)
    data = Dataset(meta.get("name", name or root.name), x, y, k, num_links=len(links))
    return graph, data


def save_dataset(path, dataset: Dataset, links, feature_mode: str = "sparse") -> Path:
    """Write a bundle; ``links`` is written verbatim, one line per pair."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": dataset.name,
        "n": dataset.n,
        "k": dataset.k,
        "c": dataset.c,
        "feature_mode": feature_mode,
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    with open(root / "edges.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for u, v in np.asarray(links, dtype=np.int64).reshape(-1, 2):
            fh.write(f"{u}\t{v}\n")
    with open(root / "features.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i, row in enumerate(dataset.features):
            if feature_mode == "sparse":
                body = " ".join(f"{j}:{float(row[j])!r}" for j in np.flatnonzero(row))
            else:
                body = ",".join(repr(float(v)) for v in row)
            fh.write(f"{i}\t{body}\n")
    with open(root / "labels.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i, lab in enumerate(dataset.labels):
            fh.write(f"{i}\t{lab}\n")
    return root


def make_synthetic(
    n: int = 600,
    k: int = 4,
    c: int = 200,
    p_in: float = 0.02,
    p_out: float = 0.002,
    words_per_node: int = 12,
    topic_strength: float = 0.35,
    seed: int = 0,
    name: str = "synthetic",
) -> tuple[np.ndarray, Dataset]:
    """Planted-partition citation graph with bag-of-words features.

    Each class owns a block of ``c // k`` vocabulary words; a node draws
    ``words_per_node`` words, each from its class block with probability
    ``topic_strength`` and uniformly from the vocabulary otherwise. Returns the
    link list and the dataset.
    """
    rng = np.random.default_rng(seed)
    labels = np.sort(rng.integers(0, k, size=n))
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, 1)
    links = np.argwhere(upper)
    block = c // k
    x = np.zeros((n, c))
    for i in range(n):
        topical = rng.random(words_per_node) < topic_strength
        words = np.where(
            topical,
            labels[i] * block + rng.integers(0, block, size=words_per_node),
            rng.integers(0, c, size=words_per_node),
        )
        x[i, words] = 1.0
    return links, Dataset(name, x, labels.astype(np.int64), k, num_links=len(links))
