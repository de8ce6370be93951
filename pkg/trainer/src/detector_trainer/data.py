"""Reading labeled IMU sequences from their CSV interchange formats.

imu.csv:   t, wx, wy, wz, ax, ay, az
flags.csv: t, z_vel, z_ang, z_lat, z_up

Both carry a comment line and a header row.  A sequence pairs the
6-channel inputs (gyro, accel) with the four binary labels; the training
target for the input at instant k is the label at instant k+1, matching
the inference-side convention that consuming sample k yields the flag
prediction for the step being entered.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _read_csv(path: Path, columns: tuple[str, ...]) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh
                 if ln.strip() and not ln.lstrip().startswith("#")]
    header = [c.strip() for c in lines[0].split(",")]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    idx = [header.index(c) for c in columns]
    rows = [[float(ln.split(",")[i]) for i in idx] for ln in lines[1:]]
    return np.array(rows)


@dataclass
class Sequence:
    name: str
    inputs: np.ndarray   # (n, 6): gyro xyz then accel xyz
    labels: np.ndarray   # (n, 4) float 0/1, target for inputs[k] is flags[k+1]

    def __len__(self) -> int:
        return len(self.inputs)


def load_sequence(seq_dir: Path) -> Sequence:
    imu = _read_csv(seq_dir / "imu.csv",
                    ("t", "wx", "wy", "wz", "ax", "ay", "az"))
    flg = _read_csv(seq_dir / "flags.csv",
                    ("t", "z_vel", "z_ang", "z_lat", "z_up"))
    if len(imu) != len(flg):
        raise ValueError(f"{seq_dir}: {len(imu)} imu rows vs {len(flg)} flag rows")
    inputs = imu[:-1, 1:7]
    labels = flg[1:, 1:5]
    return Sequence(name=seq_dir.name, inputs=inputs, labels=labels)


def load_dataset(root: Path) -> list[Sequence]:
    dirs = sorted(p for p in Path(root).iterdir()
                  if p.is_dir() and (p / "imu.csv").exists())
    if not dirs:
        raise ValueError(f"no sequence directories under {root}")
    return [load_sequence(d) for d in dirs]


def normalization(sequences: list[Sequence]) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel affine normalization constants.

    The scale is a few multiples of the channel's QUIET-TIME noise floor
    (a low quantile of short-window standard deviations), not the global
    std: the global std is dominated by maneuver dynamics, which would
    crush the high-frequency content separating standstill from driving
    into a fraction of a unit, and even a median-based floor lands in
    the majority (driving) regime.  Slow dynamics then saturate the
    recurrent nonlinearities, which costs nothing for classification.
    """
    stacked = np.concatenate([s.inputs for s in sequences])
    mean = stacked.mean(axis=0)
    n = len(stacked) // 100 * 100
    window_std = stacked[:n].reshape(-1, 100, 6).std(axis=1)
    noise = np.percentile(window_std, 10, axis=0)
    scale = 5.0 * np.maximum(noise, 1e-6)
    return mean, scale


def check_both_classes(sequences: list[Sequence]) -> None:
    labels = np.concatenate([s.labels for s in sequences])
    from . import PROFILES
    for k, name in enumerate(PROFILES):
        ones = labels[:, k].sum()
        if ones == 0 or ones == len(labels):
            raise ValueError(f"profile {name!r} has a single class in the "
                             "training labels; cannot train it")


def stop_window_starts(labels: np.ndarray, window: int,
                       min_stop: int = 100) -> np.ndarray:
    """Start indices whose first min_stop labels are all zero-velocity and
    that leave a full window of data."""
    zv = labels[:, 0].astype(bool)
    n = len(zv)
    if n < window:
        return np.array([], dtype=int)
    run = np.convolve(zv.astype(int), np.ones(min_stop, dtype=int), "valid")
    ok = np.nonzero(run == min_stop)[0]
    return ok[ok + window <= n]
