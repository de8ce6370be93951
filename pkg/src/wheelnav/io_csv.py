"""CSV schemas for IMU logs, ground truth, flags, and detector scores.

Plain comma-separated text with a `#`-comment version line and a header
row; floats are written with 17 significant digits so a write/read round
trip reproduces f64 values exactly.  Parse errors name the offending row.

    imu:    t, wx, wy, wz, ax, ay, az          (s, rad/s, m/s^2)
    pose:   t, px, py, pz, r00..r22            (rotation row-major)
    flags:  t, z_vel, z_ang, z_lat, z_up       (0/1)
    scores: step, score_vel, score_ang, score_lat, score_up
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .detectors import MotionFlags
from .liegroup import project_rotation
from .metrics import TrajectoryRecord
from .state import ImuSample

FLOAT_FMT = "%.17g"

IMU_COLUMNS = ("t", "wx", "wy", "wz", "ax", "ay", "az")
POSE_COLUMNS = ("t", "px", "py", "pz", "r00", "r01", "r02",
                "r10", "r11", "r12", "r20", "r21", "r22")
FLAG_COLUMNS = ("t", "z_vel", "z_ang", "z_lat", "z_up")
SCORE_COLUMNS = ("step", "score_vel", "score_ang", "score_lat", "score_up")


class CsvFormatError(ValueError):
    pass


def _read_table(path: str | Path, columns: tuple[str, ...]) -> np.ndarray:
    """Read a numeric table, matching columns by header name."""
    order: list[int] | None = None
    rows: list[list[float]] = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f.strip() for f in text.split(",")]
            if order is None:
                missing = [c for c in columns if c not in fields]
                if missing:
                    raise CsvFormatError(
                        f"{path}: header (row {lineno}) missing columns {missing}")
                order = [fields.index(c) for c in columns]
                continue
            if len(fields) <= max(order):
                raise CsvFormatError(f"{path}: row {lineno} has too few fields")
            try:
                rows.append([float(fields[i]) for i in order])
            except ValueError as exc:
                raise CsvFormatError(f"{path}: row {lineno}: {exc}") from None
    if order is None:
        raise CsvFormatError(f"{path}: no header row found")
    return np.array(rows, dtype=float).reshape(len(rows), len(columns))


def _write_table(path: str | Path, columns: tuple[str, ...],
                 data: np.ndarray, kind: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# wheelnav {kind} csv v1\n")
        fh.write(",".join(columns) + "\n")
        for row in data:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def _check_monotone(path, t: np.ndarray) -> None:
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if len(bad):
        # +3 converts to 1-based file rows past the comment and header lines
        raise CsvFormatError(
            f"{path}: non-monotone timestamp at data row {bad[0] + 2} "
            f"(file row {bad[0] + 4})")


def write_imu_csv(path: str | Path, samples: list[ImuSample]) -> None:
    data = np.array([[s.timestamp, *s.gyro, *s.accel] for s in samples])
    _write_table(path, IMU_COLUMNS, data.reshape(len(samples), 7), "imu")


def read_imu_csv(path: str | Path) -> list[ImuSample]:
    data = _read_table(path, IMU_COLUMNS)
    _check_monotone(path, data[:, 0])
    return [ImuSample(row[0], row[1:4], row[4:7]) for row in data]


def write_pose_csv(path: str | Path, record: TrajectoryRecord) -> None:
    if record.rotation is None:
        raise ValueError("pose csv needs rotations")
    n = len(record)
    data = np.hstack([record.t.reshape(n, 1), record.position,
                      record.rotation.reshape(n, 9)])
    _write_table(path, POSE_COLUMNS, data, "pose")


def read_pose_csv(path: str | Path) -> TrajectoryRecord:
    """Read a pose trajectory; rotations are re-orthonormalized, with a
    warning above 1e-6 deviation."""
    data = _read_table(path, POSE_COLUMNS)
    _check_monotone(path, data[:, 0])
    rot = data[:, 4:13].reshape(-1, 3, 3)
    worst = 0.0
    for i in range(len(rot)):
        projected = project_rotation(rot[i])
        worst = max(worst, float(np.abs(projected - rot[i]).max()))
        rot[i] = projected
    if worst > 1e-6:
        warnings.warn(f"{path}: rotations deviate from orthogonal by up to "
                      f"{worst:.3g}; projected back", stacklevel=2)
    return TrajectoryRecord(t=data[:, 0], position=data[:, 1:4], rotation=rot)


def write_flags_csv(path: str | Path, t: np.ndarray,
                    flags: list[MotionFlags]) -> None:
    data = np.array([[tk, *(float(v) for v in f.as_tuple())]
                     for tk, f in zip(t, flags)])
    _write_table(path, FLAG_COLUMNS, data.reshape(len(flags), 5), "flags")


def read_flags_csv(path: str | Path) -> tuple[np.ndarray, list[MotionFlags]]:
    data = _read_table(path, FLAG_COLUMNS)
    _check_monotone(path, data[:, 0])
    flags = [MotionFlags(*(bool(v) for v in row[1:])) for row in data]
    return data[:, 0], flags


def write_scores_csv(path: str | Path, scores: np.ndarray) -> None:
    """Per-step detector scores, %.7e precision (reference-file format)."""
    with open(path, "w") as fh:
        fh.write("# wheelnav scores csv v1\n")
        fh.write(",".join(SCORE_COLUMNS) + "\n")
        for step, row in enumerate(np.asarray(scores)):
            fh.write(f"{step}," + ",".join("%.7e" % v for v in row) + "\n")


def read_scores_csv(path: str | Path) -> np.ndarray:
    data = _read_table(path, SCORE_COLUMNS)
    return data[:, 1:5]


def write_covariance_trace_csv(path: str | Path, t: np.ndarray,
                               traces: np.ndarray) -> None:
    cols = ("t", "trace_att", "trace_vel", "trace_pos",
            "trace_gyro_bias", "trace_accel_bias")
    data = np.hstack([np.asarray(t).reshape(-1, 1), np.asarray(traces)])
    _write_table(path, cols, data, "covariance-trace")
