"""Acceptance suite: one test per shipping criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s`).

Every tolerance is fixed here; nothing is tuned at run time.
"""

import time

import numpy as np
import pytest
from scipy.stats import chi2

from wheelnav.detectors import (AmvdDetector, MotionFlags, confusion_report,
                                evaluate_detector)
from wheelnav.iekf import (MeasurementNoise, ProcessNoise, initialize_stationary,
                           jacobian_F, jacobian_G)
from wheelnav.liegroup import exp_se23, exp_so3, hat_se23, skew
from wheelnav.metrics import TrajectoryRecord, aligned_m_ate, final_distance, m_ate
from wheelnav.pipeline import run_filter
from wheelnav.scenarios import (SENSOR_NOISE, ablation_study, consistency_study,
                                mixed_drive_60s, random_drive, stationary)
from wheelnav.simulate import ImuCorruption, corrupt, generate_truth
from wheelnav.state import GravityModel, NavState, propagate_nav

from _oracles import fd_jacobians, random_nav, series_exp

GRAV = GravityModel()


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_lie_algebra_series_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(100)
    worst_so3 = worst_se23 = 0.0
    for _ in range(1000):
        xi = rng.uniform(-5.0, 5.0, 9)
        xi[:3] *= rng.uniform(0.0, 0.999 * np.pi) / np.linalg.norm(xi[:3])
        worst_so3 = max(worst_so3, float(np.abs(
            exp_so3(xi[:3]) - series_exp(skew(xi[:3]))).max()))
        worst_se23 = max(worst_se23, float(np.abs(
            exp_se23(xi) - series_exp(hat_se23(xi))).max()))

    tiny = np.concatenate([np.full(3, 1e-8 / np.sqrt(3)), [1, 2, 3, 4, 5, 6.0]])
    x = hat_se23(tiny)
    taylor = np.eye(5) + x + (x @ x) / 2 + (x @ x @ x) / 6
    small_gap = float(np.abs(exp_se23(tiny) - taylor).max())
    elapsed = time.perf_counter() - start

    _report("lie-algebra oracle equivalence",
            worst_so3 < 1e-10 and worst_se23 < 1e-10
            and small_gap < 1e-12 and elapsed < 5.0,
            f"so3 {worst_so3:.2e}, se23 {worst_se23:.2e} vs 30-term series "
            f"(tol 1e-10); small-angle gap {small_gap:.2e} (tol 1e-12); "
            f"{elapsed:.1f}s (< 5s)")


def test_jacobian_finite_difference_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    dt = 1e-4
    variants = [MotionFlags(), MotionFlags(z_vel=True), MotionFlags(z_ang=True),
                MotionFlags(z_vel=True, z_ang=True)]
    worst = 0.0
    for i in range(100):
        nav = random_nav(rng)
        omega = rng.uniform(-0.5, 0.5, 3)
        accel = rng.uniform(-2.0, 2.0, 3) - nav.rotation.T @ GRAV.g
        flags = variants[i % 4]
        f_ref, g_ref = fd_jacobians(nav, omega, accel, flags, dt, GRAV)
        f = jacobian_F(nav, flags, dt, GRAV)
        g = jacobian_G(nav, flags, dt)
        scale = max(np.abs(f).max(), np.abs(g).max(), 1.0)
        worst = max(worst, float(np.abs(f - f_ref).max() / scale),
                    float(np.abs(g - g_ref).max() / scale))
    elapsed = time.perf_counter() - start
    _report("jacobian finite-difference suite",
            worst < 1e-5 and elapsed < 30.0,
            f"100 states x 4 flag variants, worst relative gap {worst:.2e} "
            f"(tol 1e-5); {elapsed:.1f}s (< 30s)")


def test_zero_noise_closure():
    start = time.perf_counter()
    truth = generate_truth(mixed_drive_60s())
    s0 = truth[0]
    nav = NavState(s0.rotation, s0.velocity_w, s0.position_w,
                   np.zeros(3), np.zeros(3))
    for k in range(len(truth) - 1):
        nav = propagate_nav(nav, truth.omega_body[k], truth.accel_body[k],
                            float(truth.t[k + 1] - truth.t[k]), GRAV)
    err = float(np.linalg.norm(nav.position_w - truth.position_w[-1]))
    elapsed = time.perf_counter() - start
    _report("zero-noise closure",
            err < 1e-3 and elapsed < 5.0,
            f"60s stops+straights+arcs+ramp at 100Hz, final position error "
            f"{err:.2e} m (tol 1e-3); {elapsed:.1f}s (< 5s)")


def test_zupt_bias_recovery():
    start = time.perf_counter()
    truth = generate_truth(stationary(60.0))
    gyro_bias = np.array([0.003, -0.003, 0.002])
    gyro_bias *= 0.005 / np.linalg.norm(gyro_bias)
    accel_bias = np.array([0.03, 0.02, -0.03])
    accel_bias *= 0.05 / np.linalg.norm(accel_bias)
    q, n = ProcessNoise(), MeasurementNoise()
    samples = corrupt(truth, ImuCorruption(
        gyro_bias=gyro_bias, accel_bias=accel_bias,
        sigma_gyro=q.sigma_gyro, sigma_accel=q.sigma_accel, seed=102))
    fs0 = initialize_stationary(samples[:100])
    run = run_filter(fs0, samples[99:], truth.flags_list()[99:], q, n)
    bias_err = float(np.linalg.norm(run.final_state.nav.gyro_bias - gyro_bias))
    drift = float(np.linalg.norm(run.final_state.nav.position_w[:2]))
    elapsed = time.perf_counter() - start
    limit = 0.1 * float(np.linalg.norm(gyro_bias))
    _report("zupt bias recovery",
            bias_err < limit and drift < 0.1 and elapsed < 10.0,
            f"gyro-bias error {bias_err:.2e} rad/s (tol {limit:.1e}), "
            f"position drift {drift:.2e} m (tol 0.1); {elapsed:.1f}s (< 10s)")


def test_motion_constraint_ablation():
    start = time.perf_counter()
    result = ablation_study(minutes=7.0, seed=7)
    elapsed = time.perf_counter() - start
    ratio_reduced = result.final_no_lat_up / result.final_full
    ratio_imu = result.final_imu_only / result.final_full
    _report("motion-constraint ablation",
            ratio_reduced >= 5.0 and ratio_imu >= 10.0 and elapsed < 60.0,
            f"7min no-stop drive final distance: full {result.final_full:.1f} m, "
            f"no-lat/up {result.final_no_lat_up:.1f} m ({ratio_reduced:.0f}x, "
            f"need >=5x), imu-only {result.final_imu_only:.0f} m "
            f"({ratio_imu:.0f}x, need >=10x); {elapsed:.1f}s (< 60s)")


def test_filter_consistency_nees():
    start = time.perf_counter()
    nees = consistency_study(n_runs=50, seed=3)
    lo, hi = chi2.ppf(0.025, 3), chi2.ppf(0.975, 3)
    fraction = float(np.mean((nees >= lo) & (nees <= hi)))
    elapsed = time.perf_counter() - start
    _report("filter consistency (NEES)",
            fraction >= 0.80 and elapsed < 300.0,
            f"50 Monte-Carlo runs, position NEES within "
            f"[{lo:.2f}, {hi:.2f}] for {fraction:.1%} of steps "
            f"(need >= 80%); {elapsed:.0f}s (< 300s)")


def test_amvd_baseline_and_confusion_formulas():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    predicted, labels = [], []
    for i in range(3):
        truth = generate_truth(random_drive(rng, duration=120.0))
        samples = corrupt(truth, ImuCorruption(
            gyro_bias=0.002 * rng.standard_normal(3),
            accel_bias=0.02 * rng.standard_normal(3),
            seed=200 + i, **SENSOR_NOISE))
        detector = AmvdDetector(window=100, gamma=1e-3)
        predicted += [detector.step(s) for s in samples]
        labels += truth.flags_list()
    vel = evaluate_detector(predicted, labels)["vel"]

    # formula regression on the stored benchmark counts; the published
    # 0.996 is the negative-class recall of these counts, and no reading
    # of the rounded counts reproduces the published 0.940
    stored = confusion_report(tp=480_000, fp=700, tn=160_000, fn=9_000)
    formulas_ok = (stored.precision == 480_000 / 480_700
                   and stored.recall == 480_000 / 489_000
                   and round(confusion_report(tp=160_000, fp=9_000,
                                              tn=480_000, fn=700).recall,
                             3) == 0.996)
    elapsed = time.perf_counter() - start
    _report("amvd baseline + confusion formulas",
            vel.precision >= 0.95 and vel.precision_defined and vel.tp > 1000
            and formulas_ok,
            f"W=100 gamma=1e-3: zero-vel precision {vel.precision:.3f} over "
            f"{vel.tp + vel.fp} detections (need >= 0.95); stored-count "
            f"ratios {stored.precision:.4f}/{stored.recall:.4f} match the "
            f"formulas exactly; {elapsed:.0f}s")


def test_metric_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(103)

    def record(positions, t0=0.0):
        return TrajectoryRecord(t=t0 + 0.1 * np.arange(len(positions)),
                                position=np.asarray(positions, float))

    aligned_ok = True
    for _ in range(100):
        gt = record(np.cumsum(rng.uniform(-1, 1, (30, 3)), axis=0))
        est = record(gt.position + 0.5 * rng.standard_normal((30, 3)))
        aligned_ok &= aligned_m_ate(est, gt) <= m_ate(est, gt) + 1e-12

    gt = record(np.cumsum(rng.uniform(-1, 1, (40, 3)), axis=0))
    est = record(gt.position + 0.3 * rng.standard_normal((40, 3)))
    theta, shift = 0.8, np.array([11.0, -4.0, 0.0])
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    gt2 = record(gt.position @ rot.T + shift)
    est2 = record(est.position @ rot.T + shift)
    invariance = max(abs(m_ate(est2, gt2) - m_ate(est, gt)),
                     abs(aligned_m_ate(est2, gt2) - aligned_m_ate(est, gt)),
                     abs(final_distance(est2, gt2) - final_distance(est, gt)))

    offset = record(gt.position + np.array([3.0, 4.0, 0.0]))
    exact_five = m_ate(offset, gt) == 5.0
    elapsed = time.perf_counter() - start
    _report("metric properties",
            aligned_ok and invariance < 1e-9 and exact_five,
            f"aligned<=unaligned on 100 pairs: {aligned_ok}; rigid-transform "
            f"invariance {invariance:.1e} (tol 1e-9); 3-4-5 offset m_ate "
            f"= 5 exactly: {exact_five}; {elapsed:.0f}s")
