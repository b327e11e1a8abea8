"""Convert public citation-dataset dumps into bundle directories.

Three source layouts are understood:

* ``linqs`` -- ``<name>.content`` (``paper<TAB>f1 ... fc<TAB>class``) and
  ``<name>.cites`` (``cited<TAB>citing``), as distributed for Cora and
  Citeseer.
* ``pubmed`` -- ``Pubmed-Diabetes.NODE.paper.tab`` and
  ``Pubmed-Diabetes.DIRECTED.cites.tab``.
* ``planetoid`` -- the ``ind.<name>.{x,tx,allx,y,ty,ally,graph,test.index}``
  pickles.

LINQS link files are copied one line per link, so their line counts survive
into ``edges.tsv``. Papers cited but absent from the content file become
featureless nodes with class 0.
"""
from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

from .graph import Dataset, DatasetError, save_dataset


def _index(ids: list[str], extra: list[str]) -> dict[str, int]:
    out = {pid: i for i, pid in enumerate(ids)}
    for pid in extra:
        out.setdefault(pid, len(out))
    return out


def read_linqs(src, name: str):
    src = Path(src)
    content = src / f"{name}.content"
    cites = src / f"{name}.cites"
    ids, rows, classes = [], [], []
    with open(content, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise DatasetError(content, lineno, "expected id, features and class")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:-1]])
            classes.append(parts[-1])
    pairs = []
    with open(cites, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise DatasetError(cites, lineno, "expected 'cited<TAB>citing'")
            pairs.append((parts[0], parts[1]))
    return _assemble(name, ids, np.array(rows), classes, pairs)


def read_pubmed(src, name: str = "pubmed"):
    src = Path(src)
    node_file = src / "Pubmed-Diabetes.NODE.paper.tab"
    cite_file = src / "Pubmed-Diabetes.DIRECTED.cites.tab"
    with open(node_file, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    vocab = [col.split(":")[1] for col in lines[1].split("\t") if col.startswith("numeric:")]
    col_of = {w: j for j, w in enumerate(vocab)}
    ids, classes = [], []
    x = np.zeros((len(lines) - 2, len(vocab)))
    for i, line in enumerate(lines[2:]):
        parts = line.split("\t")
        ids.append(parts[0])
        classes.append(parts[1].split("=")[1])
        for item in parts[2:]:
            key, _, val = item.partition("=")
            if key in col_of:
                x[i, col_of[key]] = float(val)
    pairs = []
    with open(cite_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split("\t")
            if lineno <= 2:
                continue
            if len(parts) != 4:
                raise DatasetError(cite_file, lineno, "expected 'id<TAB>paper:a<TAB>|<TAB>paper:b'")
            pairs.append((parts[1].split(":")[1].strip(), parts[3].split(":")[1].strip()))
    return _assemble(name, ids, x, classes, pairs)


def _assemble(name, ids, x, classes, pairs):
    seen = set()
    for pid in ids:
        if pid in seen:
            raise DatasetError(name, None, f"duplicate paper id {pid!r}")
        seen.add(pid)
    missing = [p for pair in pairs for p in pair if p not in seen]
    index = _index(ids, missing)
    n = len(index)
    features = np.zeros((n, x.shape[1]))
    features[: len(ids)] = x
    names = sorted(set(classes), key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s))
    labels = np.zeros(n, dtype=np.int64)
    labels[: len(ids)] = [names.index(cl) for cl in classes]
    links = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64).reshape(-1, 2)
    return links, Dataset(name, features, labels, len(names), num_links=len(links))


def _load_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def read_planetoid(src, name: str):
    """Full graph from the Planetoid pickles, test rows restored to their node ids."""
    import scipy.sparse as sp

    src = Path(src)
    obj = {key: _load_pickle(src / f"ind.{name}.{key}") for key in ("tx", "allx", "ty", "ally", "graph")}
    test_idx = np.loadtxt(src / f"ind.{name}.test.index", dtype=np.int64)
    lo, hi = test_idx.min(), test_idx.max()
    tx, ty = obj["tx"], obj["ty"]
    if hi - lo + 1 != tx.shape[0]:
        # citeseer: isolated test nodes carry no features or label
        full_tx = sp.lil_matrix((hi - lo + 1, tx.shape[1]))
        full_tx[np.sort(test_idx) - lo, :] = tx
        full_ty = np.zeros((hi - lo + 1, ty.shape[1]))
        full_ty[np.sort(test_idx) - lo, :] = ty
        tx, ty = full_tx, full_ty
    features = sp.vstack((obj["allx"], tx)).tolil()
    onehot = np.vstack((obj["ally"], ty))
    order = np.sort(test_idx)
    features[test_idx, :] = features[order, :]
    onehot[test_idx, :] = onehot[order, :]
    x = np.asarray(features.todense())
    labels = onehot.argmax(axis=1).astype(np.int64)
    links = sorted({(min(u, v), max(u, v)) for u, nbrs in obj["graph"].items() for v in nbrs})
    links = np.array(links, dtype=np.int64).reshape(-1, 2)
    return links, Dataset(name, x, labels, onehot.shape[1], num_links=len(links))


READERS = {"linqs": read_linqs, "pubmed": read_pubmed, "planetoid": read_planetoid}


def convert(src, out, name: str, fmt: str = "linqs", feature_mode: str = "sparse") -> Path:
    if fmt not in READERS:
        raise ValueError(f"unknown source format {fmt!r}; choose from {sorted(READERS)}")
    links, data = READERS[fmt](src, name)
    return save_dataset(out, data, links, feature_mode)
