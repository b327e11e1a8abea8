"""``mtgcn`` command line: train, eval, convert, synth."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import model as gcn
from .convert import READERS, convert
from .graph import DatasetError, load_dataset, make_synthetic, sample_split, save_dataset
from .linalg import ConfigError
from .trainer import Problem, TrainConfig, evaluate, run_experiment

# flag name -> config key
TRAIN_FLAGS = {
    "dataset": "dataset",
    "name": "name",
    "per_class": "per_class",
    "epochs": "epochs",
    "warmup": "warmup",
    "t": "t",
    "lr": "lr",
    "dropout": "dropout",
    "weight_decay": "weight_decay",
    "hidden": "hidden",
    "seeds": "seeds",
    "mode": "mode",
    "selection": "selection",
    "curves": "curves",
}


def parse_seeds(text: str) -> list[int]:
    """``"0..29"`` (inclusive), ``"1,5,9"`` or a mix such as ``"0..3,10"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def _add_train(sub):
    p = sub.add_parser("train", help="run a multi-seed experiment and write results.json")
    p.add_argument("--config", help="JSON file with TrainConfig keys; flags override it")
    p.add_argument("--dataset", help="bundle directory")
    p.add_argument("--name")
    p.add_argument("--per-class", dest="per_class", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--t", type=int, help="pseudo labels per class after warmup")
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--seeds", type=parse_seeds, help="e.g. 0..29")
    p.add_argument("--mode", choices=["mutual", "supervised"])
    p.add_argument("--selection", choices=["train", "eval"])
    p.add_argument("--curves", action="store_true", default=None, help="include per-epoch losses")
    p.add_argument("--checkpoints", help="directory for per-seed parameter files")
    p.add_argument("--out", default="results.json")


def _add_eval(sub):
    p = sub.add_parser("eval", help="accuracy of a saved checkpoint on a seeded split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--name")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--per-class", dest="per_class", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--raw-features", action="store_true", help="skip row normalization of features")


def _add_convert(sub):
    p = sub.add_parser("convert", help="build a bundle from a public dataset dump")
    p.add_argument("--src", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--format", dest="fmt", choices=sorted(READERS), default="linqs")
    p.add_argument("--feature-mode", choices=["sparse", "dense"], default="sparse")
    p.add_argument("--out", required=True)


def _add_synth(sub):
    p = sub.add_parser("synth", help="write a synthetic planted-partition bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--c", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)


def build_config(args) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for flag, key in TRAIN_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            values[key] = v
    return TrainConfig.from_dict(values)


def cmd_train(args) -> int:
    cfg = build_config(args)
    if not cfg.dataset:
        raise ConfigError("--dataset (or 'dataset' in --config) is required")
    report = run_experiment(cfg, checkpoint_dir=args.checkpoints)
    report.write(args.out)
    s = report.summary()
    print(f"{cfg.name} per_class={cfg.per_class} seeds={len(cfg.seeds)} "
          f"mean={100 * s['mean']:.2f} std={100 * s['std']:.2f} "
          f"model2={100 * s['mean_model2']:.2f} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    graph, data = load_dataset(args.dataset, args.name)
    prob = Problem.build(graph, data, normalize_features=not args.raw_features)
    split = sample_split(data, args.per_class, args.seed)
    m = gcn.load_model(args.checkpoint)
    print(f"{evaluate(m, prob.a_hat, prob.x, split, prob.labels):.6f}")
    return 0


def cmd_convert(args) -> int:
    out = convert(args.src, args.out, args.name, args.fmt, args.feature_mode)
    print(f"wrote {out}")
    return 0


def cmd_synth(args) -> int:
    links, data = make_synthetic(n=args.n, k=args.k, c=args.c, seed=args.seed)
    print(f"wrote {save_dataset(args.out, data, links)}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mtgcn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_eval(sub)
    _add_convert(sub)
    _add_synth(sub)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"train": cmd_train, "eval": cmd_eval, "convert": cmd_convert, "synth": cmd_synth}
    try:
        return handler[args.command](args)
    except (ConfigError, DatasetError, OSError) as exc:
        print(f"mtgcn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
