#!/usr/bin/env python3
"""Emit labeled IMU sequences for detector training/evaluation.

Writes one subdirectory per sequence (imu.csv, truth.csv, flags.csv) with
randomized stop-and-go drives, sensor-grade noise, per-sequence biases,
and road vibration while moving.
"""

import argparse
from pathlib import Path

import numpy as np

from wheelnav.io_csv import write_flags_csv, write_imu_csv, write_pose_csv
from wheelnav.metrics import TrajectoryRecord
from wheelnav.scenarios import SENSOR_NOISE, random_drive
from wheelnav.simulate import ImuCorruption, corrupt, generate_truth


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--sequences", type=int, default=24)
    parser.add_argument("--duration", type=float, default=90.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--skid-weight", type=int, default=1,
                        help="relative frequency of slipping segments (0 = none)")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    root = Path(args.out)
    for i in range(args.sequences):
        spec = random_drive(rng, duration=args.duration,
                            skid_weight=args.skid_weight)
        truth = generate_truth(spec)
        samples = corrupt(truth, ImuCorruption(
            gyro_bias=0.003 * rng.standard_normal(3),
            accel_bias=0.03 * rng.standard_normal(3),
            sigma_gyro_bias=0.0002, sigma_accel_bias=0.002,
            seed=args.seed * 1000 + i, **SENSOR_NOISE))
        seq_dir = root / f"seq_{i:03d}"
        seq_dir.mkdir(parents=True, exist_ok=True)
        write_imu_csv(seq_dir / "imu.csv", samples)
        write_pose_csv(seq_dir / "truth.csv", TrajectoryRecord(
            t=truth.t, position=truth.position_w, rotation=truth.rotation))
        write_flags_csv(seq_dir / "flags.csv", truth.t, truth.flags_list())
        print(f"{seq_dir}: {len(samples)} samples, "
              f"{truth.flags[:, 0].mean():.0%} stationary")


if __name__ == "__main__":
    main()
