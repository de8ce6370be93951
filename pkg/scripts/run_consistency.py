#!/usr/bin/env python3
"""Monte-Carlo NEES study of the filter's position covariance."""

import argparse

import numpy as np
from scipy.stats import chi2

from wheelnav.scenarios import consistency_study


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    nees = consistency_study(n_runs=args.runs, seed=args.seed)
    lo, hi = chi2.ppf(0.025, 3), chi2.ppf(0.975, 3)
    inside = float(np.mean((nees >= lo) & (nees <= hi)))
    print(f"runs: {args.runs}, steps/run: {nees.shape[1]}")
    print(f"chi-square(3) 95% envelope: [{lo:.3f}, {hi:.3f}]")
    print(f"median NEES: {np.median(nees):.2f} (ideal 2.37)")
    print(f"mean NEES:   {np.mean(nees):.2f} (ideal 3.00)")
    print(f"fraction of steps inside envelope: {inside:.1%}")


if __name__ == "__main__":
    main()
