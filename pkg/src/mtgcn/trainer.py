"""Dual-model mutual teaching loop and the multi-seed experiment harness."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import model as gcn
from .graph import Dataset, RawGraph, Split, load_dataset, normalize_adjacency, sample_split
from .linalg import ConfigError, SparseMatrix
from .losses import LossReport, overall_loss
from .pseudo import PseudoSet, hard_labels, select_top_t

log = logging.getLogger(__name__)

# default t per class after warmup, by dataset
T_PER_CLASS = {"cora": 72, "citeseer": 216, "pubmed": 975}


class TrainingError(RuntimeError):
    """A trial produced a non-finite loss or gradient."""


@dataclass
class TrainConfig:
    dataset: str = ""  # bundle directory
    name: str = "cora"
    per_class: int = 2
    epochs: int = 400
    warmup: int = 200
    t: int | None = None  # None: look up T_PER_CLASS by name
    lr: float = 0.01
    dropout: float = 0.5
    weight_decay: float = 5e-4
    hidden: int = 16
    seeds: list[int] = field(default_factory=lambda: list(range(30)))
    mode: str = "mutual"  # or "supervised": independent GCNs, no pseudo labels
    selection: str = "train"  # or "eval": pick pseudo labels from a dropout-free pass
    normalize_features: bool = True
    sparse_features: bool = True
    curves: bool = False

    def __post_init__(self):
        if self.t is None:
            self.t = T_PER_CLASS.get(self.name.lower(), 0)
        self.validate()

    def validate(self) -> None:
        if self.epochs < 0 or not 0 <= self.warmup <= self.epochs:
            raise ConfigError("need 0 <= warmup <= epochs")
        if self.t < 0 or self.per_class < 1 or self.hidden < 1:
            raise ConfigError("t must be >= 0, per_class and hidden >= 1")
        if not 0.0 <= self.dropout < 1.0 or self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("dropout must lie in [0, 1), lr > 0, weight_decay >= 0")
        if self.mode not in ("mutual", "supervised"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.selection not in ("train", "eval"):
            raise ConfigError(f"unknown selection {self.selection!r}")

    def t_at(self, epoch: int) -> int:
        """Per-class quota at 1-based ``epoch``."""
        if self.mode == "supervised" or epoch <= self.warmup:
            return 0
        return self.t

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialReport:
    seed: int
    accuracy: tuple[float, float]
    losses: tuple[list, list] = field(default_factory=lambda: ([], []))
    set_sizes: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass(frozen=True)
class Problem:
    """Everything a trial reads: propagation matrix, inputs and labels."""

    a_hat: SparseMatrix
    x: np.ndarray | SparseMatrix
    labels: np.ndarray
    k: int

    @classmethod
    def build(cls, graph: RawGraph, data: Dataset, normalize_features: bool = True,
              sparse_features: bool = True) -> "Problem":
        x = data.features
        if normalize_features:
            rowsum = x.sum(axis=1, keepdims=True)
            x = np.divide(x, rowsum, out=np.zeros_like(x), where=rowsum != 0)
        if sparse_features:
            x = SparseMatrix.from_dense(x)
        return cls(normalize_adjacency(graph), x, data.labels, data.k)

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]

    @property
    def c(self) -> int:
        return self.x.shape[1]


def trial_seeds(seed: int) -> tuple[int, int]:
    """Distinct, reproducible seeds for the two networks of one trial."""
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def new_model(cfg: TrainConfig, prob: Problem, seed: int) -> gcn.GcnModel:
    return gcn.init(prob.c, cfg.hidden, prob.k, seed, cfg.dropout, cfg.weight_decay)


def _check_finite(report: LossReport, epoch: int, which: int) -> None:
    for name, value in report.as_dict().items():
        if not np.isfinite(value):
            raise TrainingError(f"model {which}: non-finite {name} loss at epoch {epoch}")


def train_mutual(cfg: TrainConfig, prob: Problem, split: Split, seeds: tuple[int, int]):
    """Train two GCNs that teach each other; returns ``(model1, model2, report)``.

    Each epoch first runs both forward passes and selections, then updates
    both models from those snapshots, so neither update sees the other's new
    parameters.
    """
    start = time.perf_counter()
    models = [new_model(cfg, prob, s) for s in seeds]
    rngs = [np.random.default_rng([s, 1]) for s in seeds]
    report = TrialReport(seed=split.seed if split.seed is not None else -1, accuracy=(0.0, 0.0))
    labeled = split.labeled

    for epoch in range(1, cfg.epochs + 1):
        t = cfg.t_at(epoch)
        caches, probs, sets = [], [], []
        for m, rng in zip(models, rngs):
            cache = gcn.forward(m, prob.a_hat, prob.x, training=True, rng=rng)
            p_sel = cache.p
            if t and cfg.selection == "eval":
                p_sel = gcn.forward(m, prob.a_hat, prob.x).p
            caches.append(cache)
            probs.append(p_sel)
            sets.append(select_top_t(p_sel, split, t) if t else PseudoSet.empty())
        report.set_sizes.append((len(sets[0]), len(sets[1])))

        for g, (m, cache) in enumerate(zip(models, caches)):
            peer = 1 - g
            rep, dz = overall_loss(cache.p, labeled, prob.labels, probs[peer], sets[peer])
            _check_finite(rep, epoch, g + 1)
            try:
                gcn.adam_step(m, gcn.backward(m, cache, prob.a_hat, prob.x, dz), cfg.lr)
            except gcn.NonFiniteError as exc:
                raise TrainingError(f"model {g + 1}, epoch {epoch}: {exc}") from None
            if cfg.curves:
                report.losses[g].append(rep)

    report.accuracy = tuple(evaluate(m, prob.a_hat, prob.x, split, prob.labels) for m in models)
    report.seconds = time.perf_counter() - start
    return models[0], models[1], report


def train_single(cfg: TrainConfig, prob: Problem, split: Split, seed: int):
    """Plain supervised GCN, equivalent to one network of a fully warmed-up mutual run."""
    m = new_model(cfg, prob, seed)
    rng = np.random.default_rng([seed, 1])
    losses = []
    for epoch in range(1, cfg.epochs + 1):
        cache = gcn.forward(m, prob.a_hat, prob.x, training=True, rng=rng)
        rep, dz = overall_loss(cache.p, split.labeled, prob.labels)
        _check_finite(rep, epoch, 1)
        gcn.adam_step(m, gcn.backward(m, cache, prob.a_hat, prob.x, dz), cfg.lr)
        losses.append(rep)
    return m, losses


def evaluate(m: gcn.GcnModel, a_hat: SparseMatrix, x, split: Split, labels: np.ndarray) -> float:
    """Accuracy of an inference-mode forward over the split's test nodes."""
    test = np.asarray(split.test, dtype=np.int64)
    if len(test) == 0:
        raise ConfigError("empty test set")
    pred = hard_labels(gcn.forward(m, a_hat, x, training=False).p)
    return float(np.mean(pred[test] == labels[test]))


@dataclass
class ExperimentReport:
    config: dict
    trials: list[TrialReport]

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([t.accuracy for t in self.trials]).reshape(-1, 2)

    def summary(self) -> dict:
        acc = self.accuracies
        return {
            "mean": float(acc[:, 0].mean()),
            "std": float(acc[:, 0].std()),
            "mean_model2": float(acc[:, 1].mean()),
            "mean_both": float(acc.mean()),
        }

    def to_json(self) -> str:
        out = {
            "config": self.config,
            "headline": "model1",
            **self.summary(),
            "per_seed": [
                {"seed": t.seed, "acc_model1": t.accuracy[0], "acc_model2": t.accuracy[1]}
                for t in self.trials
            ],
        }
        if self.config.get("curves"):
            out["curves"] = [
                {
                    "seed": t.seed,
                    "model1": [r.as_dict() for r in t.losses[0]],
                    "model2": [r.as_dict() for r in t.losses[1]],
                    "set_sizes": [list(s) for s in t.set_sizes],
                }
                for t in self.trials
            ]
        return json.dumps(out, indent=2, sort_keys=True) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def run_experiment(cfg: TrainConfig, bundle: tuple[RawGraph, Dataset] | None = None,
                   checkpoint_dir=None) -> ExperimentReport:
    """One fresh split and model pair per seed."""
    graph, data = bundle if bundle is not None else load_dataset(cfg.dataset, cfg.name)
    prob = Problem.build(graph, data, cfg.normalize_features, cfg.sparse_features)
    trials = []
    for seed in cfg.seeds:
        split = sample_split(data, cfg.per_class, seed)
        m1, m2, rep = train_mutual(cfg, prob, split, trial_seeds(seed))
        log.info("seed %d: acc %.4f / %.4f (%.1fs)", seed, *rep.accuracy, rep.seconds)
        if checkpoint_dir is not None:
            d = Path(checkpoint_dir)
            d.mkdir(parents=True, exist_ok=True)
            gcn.save_params(d / f"seed{seed}_model1.bin", m1)
            gcn.save_params(d / f"seed{seed}_model2.bin", m2)
        trials.append(rep)
    return ExperimentReport(cfg.to_dict(), trials)
