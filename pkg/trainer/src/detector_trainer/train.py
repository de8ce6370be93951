"""Training loop: per-profile binary cross entropy over windows that each
start inside a stop of at least one second, with a step learning-rate
schedule and dropout between the recurrent layers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import PROFILES, THRESHOLDS
from .data import (Sequence, check_both_classes, load_dataset, normalization,
                   stop_window_starts)
from .export import save_weights
from .model import ProfileScorer, build_models


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 32
    epochs: int = 40
    learning_rate: float = 1e-3
    dropout: float = 0.4
    window_seconds: float = 120.0
    rate_hz: float = 100.0
    batch_size: int = 16
    chunk_steps: int = 250      # truncated-backprop span within a window
    lr_step_epochs: int = 15
    lr_gamma: float = 0.5
    # per-window constant-offset augmentation (rad/s, m/s^2): sensor biases
    # are additive constants, so scorers must ignore them; ranges cover
    # 3+ sigma of the bias draws in the synthetic datasets
    augment_gyro_bias: float = 0.012
    augment_accel_bias: float = 0.12
    seed: int = 0

    def __post_init__(self):
        if min(self.hidden, self.epochs + 1, self.batch_size,
               self.chunk_steps) <= 0:
            raise ValueError("hyperparameters must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0 or self.window_seconds <= 0:
            raise ValueError("hyperparameters must be positive")


@dataclass
class TrainResult:
    models: list[ProfileScorer]
    norm_mean: np.ndarray
    norm_scale: np.ndarray
    losses: list[float]


def _sample_windows(sequences: list[Sequence], window: int, count: int,
                    rng: np.random.Generator, cfg: "TrainConfig"
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Random windows, each opening on a >= 1 s stop, with per-window
    constant bias offsets added to the raw channels.  Sequences shorter
    than the window contribute their stop-aligned prefix."""
    xs, ys = [], []
    for _ in range(count):
        seq = sequences[int(rng.integers(len(sequences)))]
        w = min(window, len(seq))
        starts = stop_window_starts(seq.labels, w)
        start = int(starts[int(rng.integers(len(starts)))]) if len(starts) else 0
        x = seq.inputs[start:start + w].copy()
        x[:, 0:3] += rng.uniform(-cfg.augment_gyro_bias,
                                 cfg.augment_gyro_bias, 3)
        x[:, 3:6] += rng.uniform(-cfg.augment_accel_bias,
                                 cfg.augment_accel_bias, 3)
        xs.append(x)
        ys.append(seq.labels[start:start + w])
    length = min(len(x) for x in xs)
    return (np.stack([x[:length] for x in xs]),
            np.stack([y[:length] for y in ys]))


def train(data_dir: str | Path, cfg: TrainConfig,
          log=print) -> TrainResult:
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    sequences = load_dataset(Path(data_dir))
    check_both_classes(sequences)
    norm_mean, norm_scale = normalization(sequences)

    models = build_models(cfg.hidden, dropout=cfg.dropout)
    params = [p for m in models for p in m.parameters()]
    optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=cfg.lr_step_epochs, gamma=cfg.lr_gamma)
    # balance each profile's classes so a scorer cannot settle for the
    # base rate (positives are a minority for zero-velocity, a large
    # majority for the lateral/vertical profiles)
    all_labels = np.concatenate([s.labels for s in sequences])
    pos_rate = all_labels.mean(axis=0)
    loss_fns = [nn.BCEWithLogitsLoss(
        pos_weight=torch.tensor(float(np.clip((1 - p) / p, 0.25, 4.0))))
        for p in pos_rate]
    window = int(round(cfg.window_seconds * cfg.rate_hz))

    losses = []
    for epoch in range(cfg.epochs):
        x_np, y_np = _sample_windows(sequences, window, cfg.batch_size, rng, cfg)
        x = torch.from_numpy((x_np - norm_mean) / norm_scale).float()
        y = torch.from_numpy(y_np).float()
        for m in models:
            m.train()
        # truncated backprop: one optimizer step per chunk, hidden state
        # carried (detached) across chunks of the same windows; states are
        # randomly zeroed per chunk so the scorers cannot lean on brittle
        # long-past context instead of recent evidence
        states = [None] * len(models)
        total = 0.0
        chunks = 0
        for start in range(0, x.shape[1], cfg.chunk_steps):
            piece = slice(start, start + cfg.chunk_steps)
            reset = torch.from_numpy(
                rng.uniform(size=x.shape[0]) < 0.15).reshape(1, -1, 1)
            optimizer.zero_grad()
            loss = 0.0
            for k, model in enumerate(models):
                if states[k] is not None:
                    states[k] = tuple(s.masked_fill(reset, 0.0)
                                      for s in states[k])
                logits, state = model(x[:, piece], states[k])
                states[k] = tuple(s.detach() for s in state)
                loss = loss + loss_fns[k](logits, y[:, piece, k])
            loss.backward()
            torch.nn.utils.clip_grad_norm_(params, 1.0)
            optimizer.step()
            total += float(loss.detach())
            chunks += 1
        scheduler.step()
        losses.append(total / chunks)
        log(f"epoch {epoch + 1}/{cfg.epochs}: loss {losses[-1]:.4f} "
            f"lr {scheduler.get_last_lr()[0]:.2e}")
    return TrainResult(models=models, norm_mean=norm_mean,
                       norm_scale=norm_scale, losses=losses)


@torch.no_grad()
def score_sequence(result: TrainResult, inputs: np.ndarray) -> np.ndarray:
    """Float32 forward pass over one sequence; (n, 4) sigmoid scores."""
    x = torch.from_numpy((inputs - result.norm_mean)
                         / result.norm_scale).float().unsqueeze(0)
    out = []
    for model in result.models:
        model.eval()
        logits, _ = model(x)
        out.append(torch.sigmoid(logits)[0].numpy())
    return np.stack(out, axis=1)


def evaluate(result: TrainResult, sequences: list[Sequence],
             thresholds=THRESHOLDS) -> dict[str, dict[str, float]]:
    """Per-profile precision/recall of the thresholded scores."""
    report = {}
    tp = np.zeros(4)
    fp = np.zeros(4)
    fn = np.zeros(4)
    tn = np.zeros(4)
    for seq in sequences:
        scores = score_sequence(result, seq.inputs)
        pred = scores >= np.asarray(thresholds)
        truth = seq.labels.astype(bool)
        tp += np.sum(pred & truth, axis=0)
        fp += np.sum(pred & ~truth, axis=0)
        fn += np.sum(~pred & truth, axis=0)
        tn += np.sum(~pred & ~truth, axis=0)
    for k, name in enumerate(PROFILES):
        precision = tp[k] / (tp[k] + fp[k]) if tp[k] + fp[k] else 1.0
        recall = tp[k] / (tp[k] + fn[k]) if tp[k] + fn[k] else 0.0
        report[name] = {"precision": float(precision), "recall": float(recall),
                        "tp": int(tp[k]), "fp": int(fp[k]),
                        "tn": int(tn[k]), "fn": int(fn[k])}
    return report


def _collapsed_profiles(result: TrainResult,
                        sequences: list[Sequence]) -> list[str]:
    """Profiles whose scorer outputs an (almost) constant score: the
    base-rate local minimum a recurrent classifier can fall into."""
    scores = score_sequence(result, sequences[0].inputs)
    return [name for k, name in enumerate(PROFILES)
            if float(scores[:, k].std()) < 0.05]


def train_robust(data_dir: str | Path, cfg: TrainConfig, log=print,
                 max_attempts: int = 3) -> TrainResult:
    """Train, restarting from a reseeded initialization if any profile's
    scorer collapsed to a constant."""
    sequences = load_dataset(Path(data_dir))
    result = None
    for attempt in range(max_attempts):
        seed = cfg.seed + 17 * attempt
        result = train(data_dir, TrainConfig(**{**cfg.__dict__, "seed": seed}),
                       log=log)
        dead = _collapsed_profiles(result, sequences)
        if not dead:
            return result
        log(f"attempt {attempt + 1}: constant scorer for {dead}; reseeding")
    return result


def train_and_export(data_dir: str | Path, out_path: str | Path,
                     cfg: TrainConfig, val_dir: str | Path | None = None,
                     log=print) -> TrainResult:
    result = train_robust(data_dir, cfg, log=log)
    save_weights(out_path, result.models, result.norm_mean, result.norm_scale)
    if val_dir is not None:
        report = evaluate(result, load_dataset(Path(val_dir)))
        for name, stats in report.items():
            log(f"val {name}: precision {stats['precision']:.3f} "
                f"recall {stats['recall']:.3f}")
    return result
