"""Command line front end: train profile scorers, export reference
activations for cross-implementation checks."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import torch

from .data import _read_csv, load_dataset, normalization
from .export import reference_scores, save_weights, write_reference_csv
from .model import build_models
from .train import TrainConfig, train_and_export


def _cmd_train(args) -> int:
    cfg = TrainConfig(hidden=args.hidden, epochs=args.epochs,
                      learning_rate=args.lr, dropout=args.dropout,
                      window_seconds=args.window_seconds,
                      batch_size=args.batch_size, seed=args.seed)
    train_and_export(args.data, args.out, cfg, val_dir=args.val)
    print(f"weights written to {args.out}")
    return 0


def _cmd_init_export(args) -> int:
    """Export untrained (seeded, randomly initialized) weights; useful for
    format round-trip checks."""
    torch.manual_seed(args.seed)
    models = build_models(args.hidden)
    if args.data:
        mean, scale = normalization(load_dataset(Path(args.data)))
    else:
        mean, scale = np.zeros(6), np.ones(6)
    save_weights(args.out, models, mean, scale)
    print(f"initialization weights written to {args.out}")
    return 0


def _cmd_export_reference(args) -> int:
    from .load_check import load_for_reference
    models, mean, scale = load_for_reference(args.weights)
    imu = _read_csv(Path(args.imu), ("t", "wx", "wy", "wz", "ax", "ay", "az"))
    inputs = imu[:, 1:7]
    if args.steps:
        inputs = inputs[:args.steps]
    scores = reference_scores(models, mean, scale, inputs)
    write_reference_csv(args.out, scores)
    print(f"{len(scores)} reference score rows written to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="detector-trainer",
                                     description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    tr = subs.add_parser("train", help="train and export weights")
    tr.add_argument("--data", required=True, help="training sequence dir")
    tr.add_argument("--val", help="held-out sequence dir for a report")
    tr.add_argument("--out", required=True, help="output weight file")
    tr.add_argument("--hidden", type=int, default=32)
    tr.add_argument("--epochs", type=int, default=40)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--dropout", type=float, default=0.4)
    tr.add_argument("--window-seconds", type=float, default=120.0)
    tr.add_argument("--batch-size", type=int, default=16)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=_cmd_train)

    ini = subs.add_parser("init-export",
                          help="export untrained initialization weights")
    ini.add_argument("--out", required=True)
    ini.add_argument("--hidden", type=int, default=32)
    ini.add_argument("--seed", type=int, default=0)
    ini.add_argument("--data", help="optional dataset for normalization")
    ini.set_defaults(func=_cmd_init_export)

    ref = subs.add_parser("export-reference",
                          help="per-step scores over an input csv")
    ref.add_argument("--weights", required=True)
    ref.add_argument("--imu", required=True)
    ref.add_argument("--out", required=True)
    ref.add_argument("--steps", type=int, default=0,
                     help="truncate the input to this many samples")
    ref.set_defaults(func=_cmd_export_reference)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
