#!/usr/bin/env python3
"""Final-distance comparison on a 7-minute no-stop drive: the full filter,
the filter without lateral/vertical updates, and pure IMU integration."""

import argparse

from wheelnav.scenarios import ablation_study


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--minutes", type=float, default=7.0)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    result = ablation_study(minutes=args.minutes, seed=args.seed)
    print(f"full filter:        {result.final_full:12.1f} m")
    print(f"without lat/up:     {result.final_no_lat_up:12.1f} m "
          f"({result.final_no_lat_up / result.final_full:.0f}x)")
    print(f"pure integration:   {result.final_imu_only:12.1f} m "
          f"({result.final_imu_only / result.final_full:.0f}x)")


if __name__ == "__main__":
    main()
