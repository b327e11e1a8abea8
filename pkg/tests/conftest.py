import os
from pathlib import Path

import numpy as np
import pytest

from mtgcn.graph import Dataset, RawGraph, Split

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("MTGCN_DATA", ROOT / "data"))

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def bundle_path(name: str) -> Path:
    return DATA_DIR / name


def random_probs(rng, n, k, scale=2.0):
    z = rng.normal(scale=scale, size=(n, k))
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def split_from_labeled(n, labeled):
    labeled = np.sort(np.asarray(labeled, dtype=np.int64))
    mask = np.zeros(n, dtype=bool)
    mask[labeled] = True
    unl = np.flatnonzero(~mask)
    return Split(labeled, unl, unl.copy())


def random_graph(rng, n, p=0.3):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return RawGraph(n, np.argwhere(upper))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset():
    """Six nodes, two classes, two triangles joined by one edge."""
    links = np.array([[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5], [2, 3]])
    x = np.eye(6)
    y = np.array([0, 0, 0, 1, 1, 1])
    return links, Dataset("tiny", x, y, 2, num_links=len(links))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
