"""Canned trajectory specs and the two headline synthetic experiments
(motion-constraint ablation, filter-consistency Monte Carlo)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iekf import (POS, FilterState, InitialUncertainty, MeasurementNoise,
                   ProcessNoise, filter_step, initialize_stationary)
from .liegroup import exp_se23, se23_from_parts, se23_to_parts
from .pipeline import run_filter
from .simulate import (Arc, GroundTruth, ImuCorruption, Ramp, Rock, Skid,
                       SpeedRamp, Stop, Straight, TrajectorySpec, corrupt,
                       generate_truth)
from .state import GravityModel, NavState, propagate_nav


def stationary(duration: float = 60.0, rate_hz: float = 100.0) -> TrajectorySpec:
    return TrajectorySpec(segments=(Stop(duration),), rate_hz=rate_hz)


def mixed_drive_60s(rate_hz: float = 100.0) -> TrajectorySpec:
    """Stops, straights, arcs both ways, and a grade change in 60 s.

    Speed ramps into and out of stops run at >= 2 m/s^2 so no chord sits
    below the zero-velocity labeling threshold while still moving.
    """
    return TrajectorySpec(segments=(
        Stop(2.0),
        SpeedRamp(8.0, 3.0),
        Straight(8.0, 6.0),
        Arc(8.0, 0.25, 6.0),
        Straight(8.0, 5.0),
        Arc(8.0, -0.2, 8.0),
        SpeedRamp(6.0, 1.0),
        Ramp(6.0, 0.05, 6.0),
        Straight(6.0, 5.0),
        SpeedRamp(0.0, 2.5),
        Stop(3.5),
        SpeedRamp(5.0, 2.0),
        Arc(5.0, 0.3, 5.0),
        SpeedRamp(0.0, 2.0),
        Stop(7.0),
    ), rate_hz=rate_hz)


def no_stop_drive(minutes: float = 7.0, rate_hz: float = 100.0,
                  lead_in_stop: float = 1.5) -> TrajectorySpec:
    """Continuous urban-style driving after a short initialization stop:
    straights with heading changes every 10-20 s, never halting."""
    segments: list = [Stop(lead_in_stop), SpeedRamp(9.0, 4.0)]
    block = (
        Straight(9.0, 11.0),
        Arc(9.0, 0.22, 7.0),
        Straight(9.0, 9.0),
        SpeedRamp(13.0, 4.0),
        Straight(13.0, 8.0),
        Arc(13.0, -0.15, 9.0),
        SpeedRamp(7.0, 4.0),
        Arc(7.0, 0.35, 4.0),
        Straight(7.0, 12.0),
        Arc(7.0, -0.3, 5.0),
        SpeedRamp(9.0, 3.0),
    )
    block_time = sum(s.duration for s in block)
    need = minutes * 60.0 - sum(s.duration for s in segments)
    for _ in range(int(np.ceil(need / block_time))):
        segments.extend(block)
    return TrajectorySpec(segments=tuple(segments), rate_hz=rate_hz)


def consistency_drive_40s(rate_hz: float = 100.0) -> TrajectorySpec:
    return TrajectorySpec(segments=(
        Stop(3.0),
        SpeedRamp(6.0, 3.0),
        Straight(6.0, 6.0),
        Arc(6.0, 0.2, 8.0),
        SpeedRamp(0.0, 3.0),
        Stop(4.0),
        SpeedRamp(5.0, 3.0),
        Arc(5.0, -0.25, 6.0),
        Straight(5.0, 4.0),
    ), rate_hz=rate_hz)


def random_drive(rng: np.random.Generator, duration: float = 90.0,
                 rate_hz: float = 100.0, stop_fraction: float = 0.35,
                 stop_range: tuple[float, float] = (4.0, 12.0),
                 skid_weight: int = 1) -> TrajectorySpec:
    """Randomized stop-and-go drive for detector training/evaluation.

    Always opens with a >= 1.5 s stop; stops are sometimes followed by a
    suspension-settling rock so the zero-velocity and zero-angular labels
    disagree somewhere in the data.  Stop durations default to the
    traffic-light scale.  ``skid_weight`` controls how often slipping
    segments appear (0 disables them; they are deliberately
    over-represented in training data relative to real driving, since a
    steady slip leaves no IMU signature to learn from otherwise).
    """
    def ramp_to(target: float, current: float) -> SpeedRamp:
        # urban accelerations: 1.4 - 2.6 m/s^2
        rate = float(rng.uniform(1.4, 2.6))
        return SpeedRamp(target, max(abs(target - current) / rate, 1.0))

    segments: list = [Stop(float(rng.uniform(1.5, 4.0)))]
    speed = 0.0
    total = segments[0].duration
    while total < duration:
        if speed == 0.0:
            if rng.uniform() < 0.5:
                seg = Rock(float(rng.uniform(0.8, 2.5)),
                           amplitude=float(rng.uniform(0.01, 0.04)),
                           frequency=float(rng.uniform(1.5, 3.0)))
                segments.append(seg)
                total += seg.duration
            target = float(rng.uniform(3.0, 14.0))
            seg = ramp_to(target, speed)
            speed = target
        elif rng.uniform() < stop_fraction:
            segments.append(ramp_to(0.0, speed))
            total += segments[-1].duration
            seg = Stop(float(rng.uniform(*stop_range)))
            speed = 0.0
        else:
            kind = int(rng.integers(5 + skid_weight))
            if kind == 0:
                seg = Straight(speed, float(rng.uniform(3.0, 12.0)))
            elif kind == 1:
                # lateral acceleration capped at urban levels (~0.25 g)
                max_rate = min(0.4, 2.5 / max(speed, 1.0))
                seg = Arc(speed,
                          float(rng.uniform(0.4 * max_rate, max_rate))
                          * float(rng.choice([-1, 1])),
                          float(rng.uniform(3.0, 8.0)))
            elif kind == 2:
                seg = Ramp(speed, float(rng.uniform(-0.08, 0.08)),
                           float(rng.uniform(3.0, 6.0)))
            elif kind >= 5:
                seg = Skid(speed, float(rng.uniform(2.0, 5.0)),
                           crab=float(rng.uniform(0.03, 0.1))
                           * float(rng.choice([-1, 1])),
                           pitch_offset=float(rng.uniform(-0.05, 0.05)),
                           yaw_rate=float(rng.uniform(-0.15, 0.15)))
            elif kind == 4:
                # long steady cruise, sometimes at crawling speed: nothing
                # but road vibration separates these from a stop, which
                # keeps detectors honest
                if rng.uniform() < 0.4:
                    target = float(rng.uniform(1.0, 5.0))
                    segments.append(ramp_to(target, speed))
                    total += segments[-1].duration
                    speed = target
                seg = Straight(speed, float(rng.uniform(10.0, 25.0)))
            else:
                # decelerations often end in a slow cruise, not a stop
                target = float(rng.uniform(1.5, 14.0))
                seg = ramp_to(target, speed)
                speed = target
        segments.append(seg)
        total += seg.duration
    return TrajectorySpec(segments=tuple(segments), rate_hz=rate_hz)


# Sensor-grade corruption for detector experiments: realistic noise floor
# plus road/engine vibration while moving (the conservative filter sigmas
# in ProcessNoise deliberately over-bound these).
SENSOR_NOISE = dict(sigma_gyro=0.002, sigma_accel=0.01,
                    vibration_accel=0.08, vibration_gyro=0.012)


def dead_reckon(samples, nav: NavState,
                gravity: GravityModel | None = None) -> np.ndarray:
    """Pure strapdown integration of raw samples; returns positions."""
    out = [nav.position_w]
    for k in range(len(samples) - 1):
        dt = samples[k + 1].timestamp - samples[k].timestamp
        omega = samples[k].gyro - nav.gyro_bias
        accel = samples[k].accel - nav.accel_bias
        nav = propagate_nav(nav, omega, accel, dt, gravity)
        out.append(nav.position_w)
    return np.array(out)


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class AblationResult:
    final_full: float
    final_no_lat_up: float
    final_imu_only: float


def ablation_study(minutes: float = 7.0, seed: int = 7) -> AblationResult:
    """Final-distance comparison on a no-stop drive with injected biases:
    the full filter, the filter without lateral/vertical updates, and
    pure integration (all initialized on the same leading stop)."""
    rng = np.random.default_rng(seed)
    spec = no_stop_drive(minutes=minutes)
    truth = generate_truth(spec)
    samples = corrupt(truth, ImuCorruption(
        gyro_bias=0.005 * _unit(rng), accel_bias=0.05 * _unit(rng),
        sigma_gyro=0.01, sigma_accel=0.2, seed=seed))

    n_init = int(round(1.0 * spec.rate_hz))
    fs0 = initialize_stationary(samples[:n_init])
    flags = truth.flags_list()[n_init - 1:]
    q, n = ProcessNoise(), MeasurementNoise()

    finals = {}
    for name, use_lat_up in (("full", True), ("reduced", False)):
        run = run_filter(fs0, samples[n_init - 1:], flags, q, n,
                         use_lat_up=use_lat_up)
        finals[name] = float(np.linalg.norm(
            run.position[-1][:2] - truth.position_w[-1][:2]))

    start = truth[n_init - 1]
    nav = NavState(rotation=start.rotation, velocity_w=start.velocity_w,
                   position_w=start.position_w,
                   gyro_bias=fs0.nav.gyro_bias, accel_bias=fs0.nav.accel_bias)
    dead = dead_reckon(samples[n_init - 1:], nav)
    finals["imu"] = float(np.linalg.norm(dead[-1][:2] - truth.position_w[-1][:2]))

    return AblationResult(final_full=finals["full"],
                          final_no_lat_up=finals["reduced"],
                          final_imu_only=finals["imu"])


def consistency_study(n_runs: int = 50, seed: int = 3,
                      spec: TrajectorySpec | None = None) -> np.ndarray:
    """Per-step NEES of the invariant position error over Monte-Carlo runs.

    Noise generation matches the filter model exactly: white measurement
    noise and bias random walks at the modeled rates, true initial biases
    and initial estimate errors drawn from the initial covariance.
    Returns an (n_runs, n_steps) array of chi-square(3) statistics.
    """
    spec = consistency_drive_40s() if spec is None else spec
    truth = generate_truth(spec)
    flags = truth.flags_list()
    q = ProcessNoise(sigma_gyro=0.01, sigma_accel=0.05,
                     sigma_gyro_bias=0.0005, sigma_accel_bias=0.002)
    n = MeasurementNoise(sigma_zero_vel=0.02, sigma_zero_accel=0.06,
                         sigma_zero_gyro=0.011, sigma_lat=0.05, sigma_up=0.05)
    p0 = InitialUncertainty(roll_pitch=0.01, yaw=0.05, velocity=0.05,
                            position=0.05, gyro_bias=0.002, accel_bias=0.01)
    cov0 = p0.covariance()
    sig0 = np.sqrt(np.diag(cov0))

    steps = len(truth) - 1
    nees = np.empty((n_runs, steps))
    for r in range(n_runs):
        rng = np.random.default_rng(seed + 1000 * r)
        gyro_bias = sig0[9:12] * rng.standard_normal(3)
        accel_bias = sig0[12:15] * rng.standard_normal(3)
        samples = corrupt(truth, ImuCorruption(
            gyro_bias=gyro_bias, accel_bias=accel_bias,
            sigma_gyro=q.sigma_gyro, sigma_accel=q.sigma_accel,
            sigma_gyro_bias=q.sigma_gyro_bias,
            sigma_accel_bias=q.sigma_accel_bias, seed=seed + 7919 * r))

        err0 = sig0 * rng.standard_normal(15)
        start = truth[0]
        chi_true = se23_from_parts(start.rotation, start.velocity_w,
                                   start.position_w)
        rot, vel, pos = se23_to_parts(exp_se23(-err0[:9]) @ chi_true)
        nav = NavState(rotation=rot, velocity_w=vel, position_w=pos,
                       gyro_bias=gyro_bias - err0[9:12],
                       accel_bias=accel_bias - err0[12:15])
        fs = FilterState(nav=nav, cov=cov0.copy(), step_index=0)

        for k in range(steps):
            dt = float(truth.t[k + 1] - truth.t[k])
            fs = filter_step(fs, samples[k], flags[k], q, n, dt)
            xi_pos = truth.position_w[k + 1] - (
                truth.rotation[k + 1] @ fs.nav.rotation.T @ fs.nav.position_w)
            nees[r, k] = xi_pos @ np.linalg.solve(fs.cov[POS, POS], xi_pos)
    return nees
