"""Mutual teaching vs the single-GCN baseline on the citation bundles.

Bundles are read from ``$MTGCN_DATA/<name>`` (default ``./data``). Missing
bundles are reported and skipped. Results go to ``results/<name>_<mode>_<L>.json``.

    python scripts/run_benchmarks.py --datasets cora citeseer --per-class 1 2 3 4 --seeds 0..29
"""
import argparse
import dataclasses
import os
from pathlib import Path

from mtgcn.cli import parse_seeds
from mtgcn.trainer import TrainConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=["cora", "citeseer", "pubmed"])
    ap.add_argument("--per-class", nargs="+", type=int, default=[1, 2, 3, 4])
    ap.add_argument("--seeds", type=parse_seeds, default=list(range(30)))
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    args = ap.parse_args()

    data_dir = Path(os.environ.get("MTGCN_DATA", ROOT / "data"))
    args.out.mkdir(parents=True, exist_ok=True)
    print(f"{'dataset':<10}{'L':>3}  {'GCN':>12}  {'MT-GCN':>12}")
    for name in args.datasets:
        path = data_dir / name
        if not (path / "meta.json").is_file():
            print(f"{name:<10} missing bundle at {path}, skipped")
            continue
        for per_class in args.per_class:
            cfg = TrainConfig(dataset=str(path), name=name, per_class=per_class, seeds=args.seeds)
            cells = []
            for mode in ("supervised", "mutual"):
                rep = run_experiment(dataclasses.replace(cfg, mode=mode))
                rep.write(args.out / f"{name}_{mode}_{per_class}.json")
                s = rep.summary()
                cells.append(f"{100 * s['mean']:5.1f} ± {100 * s['std']:4.1f}")
            print(f"{name:<10}{per_class:>3}  {cells[0]:>12}  {cells[1]:>12}", flush=True)


if __name__ == "__main__":
    main()
