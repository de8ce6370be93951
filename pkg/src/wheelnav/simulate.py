"""Synthetic wheeled-vehicle trajectories and IMU corruption.

Ground truth is generated so that the discrete strapdown recursion
reproduces it exactly: poses are analytic per segment, per-sample
velocity is the position chord (p[k+1] - p[k]) / dt, the body rate is
the rotation increment log(R[k]^T R[k+1]) / dt, and the specific force
solves the discrete velocity update exactly,

    a[k] = R[k]^T ((v[k+1] - v[k]) / dt - g).

Segments join continuously in position and heading; speed or attitude
steps at a boundary show up as a one-sample spike in the derived inputs,
which the integration closure tolerates by construction.  Flags are the
ground-truth labels of the per-sample velocities.

Corruption follows the measurement model: additive bias plus white noise
per channel, the bias optionally drifting as a random walk.  Noise sigmas
are per-sample standard deviations; bias random-walk increments are
sigma * dt per step, matching the filter's process-noise convention.  An
optional vibration term adds extra accelerometer noise only while the
vehicle is moving, emulating the road/engine roughness a real IMU sees
(without it, steady cruising is indistinguishable from standstill to a
variance detector).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .detectors import MotionFlags, oracle_labels
from .state import GravityModel, ImuSample


@dataclass(frozen=True)
class Stop:
    duration: float


@dataclass(frozen=True)
class Straight:
    speed: float
    duration: float


@dataclass(frozen=True)
class Arc:
    """Planar constant-rate turn."""

    speed: float
    yaw_rate: float
    duration: float


@dataclass(frozen=True)
class Ramp:
    """Constant-speed climb along the current heading at the given grade."""

    speed: float
    grade: float
    duration: float


@dataclass(frozen=True)
class Rock:
    """Stationary pitch oscillation (suspension settling after a stop):
    zero velocity with nonzero angular rate."""

    duration: float
    amplitude: float = 0.02  # rad
    frequency: float = 2.0   # Hz


@dataclass(frozen=True)
class SpeedRamp:
    """Linear speed change from the entry speed along the current heading."""

    target_speed: float
    duration: float


@dataclass(frozen=True)
class Skid:
    """Travel with the body pointed off the velocity direction (crab
    angle, optional pitch offset): the only segments whose body-frame
    lateral/vertical velocities are nonzero.  yaw_rate may be zero.
    The offsets blend in and out over ``blend`` seconds so the attitude
    stays continuous across segment boundaries."""

    speed: float
    duration: float
    crab: float = 0.05          # rad, body yaw minus travel direction
    pitch_offset: float = 0.0   # rad, body pitch minus path slope
    yaw_rate: float = 0.0
    blend: float = 0.5          # s, offset ramp at entry and exit


Segment = Union[Stop, Straight, Arc, Ramp, Rock, SpeedRamp, Skid]


@dataclass(frozen=True)
class TrajectorySpec:
    segments: tuple[Segment, ...]
    rate_hz: float = 100.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.rate_hz <= 0:
            raise ValueError("sample rate must be positive")
        if not self.segments:
            raise ValueError("empty segment list")
        for seg in self.segments:
            if seg.duration <= 0:
                raise ValueError(f"non-positive duration in {seg}")
            speed = getattr(seg, "speed", getattr(seg, "target_speed", 0.0))
            if speed < 0:
                raise ValueError(f"negative speed in {seg}")
            if isinstance(seg, Arc) and seg.yaw_rate == 0.0:
                raise ValueError("arc needs a nonzero yaw rate; use Straight")

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)


@dataclass(frozen=True)
class GroundTruthSample:
    timestamp: float
    rotation: np.ndarray
    velocity_w: np.ndarray
    position_w: np.ndarray
    omega_body: np.ndarray
    accel_body: np.ndarray
    flags: MotionFlags


@dataclass
class GroundTruth:
    """Struct-of-arrays trajectory; index it for per-sample views."""

    t: np.ndarray            # (n,)
    rotation: np.ndarray     # (n, 3, 3)
    velocity_w: np.ndarray   # (n, 3)
    position_w: np.ndarray   # (n, 3)
    omega_body: np.ndarray   # (n, 3)
    accel_body: np.ndarray   # (n, 3)
    flags: np.ndarray        # (n, 4) bool

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> GroundTruthSample:
        return GroundTruthSample(
            timestamp=float(self.t[i]), rotation=self.rotation[i],
            velocity_w=self.velocity_w[i], position_w=self.position_w[i],
            omega_body=self.omega_body[i], accel_body=self.accel_body[i],
            flags=MotionFlags(*(bool(v) for v in self.flags[i])))

    def flags_list(self) -> list[MotionFlags]:
        return [MotionFlags(*(bool(v) for v in row)) for row in self.flags]

    def exact_samples(self) -> list[ImuSample]:
        """Noise-free IMU samples (the true inputs)."""
        return [ImuSample(float(t), w, a) for t, w, a
                in zip(self.t, self.omega_body, self.accel_body)]


def _rz(psi: float | np.ndarray) -> np.ndarray:
    c, s = np.cos(psi), np.sin(psi)
    zero, one = np.zeros_like(c), np.ones_like(c)
    return np.stack([
        np.stack([c, -s, zero], -1),
        np.stack([s, c, zero], -1),
        np.stack([zero, zero, one], -1),
    ], -2)


def _ry(theta: float | np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    zero, one = np.zeros_like(c), np.ones_like(c)
    return np.stack([
        np.stack([c, zero, s], -1),
        np.stack([zero, one, zero], -1),
        np.stack([-s, zero, c], -1),
    ], -2)


def _log_so3(r: np.ndarray) -> np.ndarray:
    """Rotation vector of R (angles well below pi only)."""
    cos_angle = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    angle = float(np.arccos(cos_angle))
    if angle > 3.0:
        raise ValueError("rotation increment too close to pi")
    axis_raw = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if angle < 1e-8:
        return 0.5 * axis_raw
    return (angle / (2.0 * np.sin(angle))) * axis_raw


@dataclass
class _Compiled:
    t_start: float
    t_end: float
    pose: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    crab: float = 0.0
    pitch_offset: float = 0.0
    blend: float = 0.0

    def offset_profile(self, t_rel: np.ndarray) -> np.ndarray:
        """Trapezoidal 0->1->0 weight for the attitude offsets."""
        if self.blend <= 0.0:
            return np.ones_like(t_rel)
        duration = self.t_end - self.t_start
        ramp = min(self.blend, duration / 2.0)
        up = np.clip(t_rel / ramp, 0.0, 1.0)
        down = np.clip((duration - t_rel) / ramp, 0.0, 1.0)
        return np.minimum(up, down)


def _compile(spec: TrajectorySpec) -> list[_Compiled]:
    compiled = []
    t0 = 0.0
    pos = np.zeros(3)
    heading = 0.0
    speed = 0.0
    for seg in spec.segments:
        p0, psi0, s0 = pos.copy(), heading, speed

        if isinstance(seg, Stop):
            def pose(tr, p0=p0, psi0=psi0):
                n = len(tr)
                return np.broadcast_to(p0, (n, 3)).copy(), \
                    np.broadcast_to(_rz(psi0), (n, 3, 3)).copy()
            pos, speed = p0, 0.0

        elif isinstance(seg, Rock):
            def pose(tr, p0=p0, psi0=psi0, seg=seg):
                n = len(tr)
                theta = seg.amplitude * np.sin(2.0 * np.pi * seg.frequency * tr)
                r = np.einsum("ij,njk->nik",
                              _rz(psi0), _ry(theta))
                return np.broadcast_to(p0, (n, 3)).copy(), r
            pos, speed = p0, 0.0

        elif isinstance(seg, Straight):
            unit = np.array([np.cos(psi0), np.sin(psi0), 0.0])
            def pose(tr, p0=p0, psi0=psi0, unit=unit, seg=seg):
                p = p0 + seg.speed * tr[:, None] * unit
                return p, np.broadcast_to(_rz(psi0), (len(tr), 3, 3)).copy()
            pos = p0 + seg.speed * seg.duration * unit
            speed = seg.speed

        elif isinstance(seg, SpeedRamp):
            unit = np.array([np.cos(psi0), np.sin(psi0), 0.0])
            rate = (seg.target_speed - s0) / seg.duration
            def pose(tr, p0=p0, psi0=psi0, unit=unit, s0=s0, rate=rate):
                dist = s0 * tr + 0.5 * rate * tr**2
                return p0 + dist[:, None] * unit, \
                    np.broadcast_to(_rz(psi0), (len(tr), 3, 3)).copy()
            pos = p0 + (s0 * seg.duration + 0.5 * rate * seg.duration**2) * unit
            speed = seg.target_speed

        elif isinstance(seg, (Arc, Skid)) and getattr(seg, "yaw_rate", 0.0) != 0.0:
            radius = seg.speed / seg.yaw_rate
            def pose(tr, p0=p0, psi0=psi0, seg=seg, radius=radius):
                psi = psi0 + seg.yaw_rate * tr
                p = p0 + radius * np.stack(
                    [np.sin(psi) - np.sin(psi0),
                     np.cos(psi0) - np.cos(psi),
                     np.zeros_like(psi)], -1)
                return p, _rz(psi)
            psi_end = psi0 + seg.yaw_rate * seg.duration
            pos = p0 + radius * np.array([np.sin(psi_end) - np.sin(psi0),
                                          np.cos(psi0) - np.cos(psi_end), 0.0])
            heading = psi_end
            speed = seg.speed

        elif isinstance(seg, Skid):
            unit = np.array([np.cos(psi0), np.sin(psi0), 0.0])
            def pose(tr, p0=p0, psi0=psi0, unit=unit, seg=seg):
                p = p0 + seg.speed * tr[:, None] * unit
                return p, np.broadcast_to(_rz(psi0), (len(tr), 3, 3)).copy()
            pos = p0 + seg.speed * seg.duration * unit
            speed = seg.speed

        elif isinstance(seg, Ramp):
            alpha = np.arctan(seg.grade)
            unit = np.array([np.cos(alpha) * np.cos(psi0),
                             np.cos(alpha) * np.sin(psi0),
                             np.sin(alpha)])
            att = _rz(psi0) @ _ry(-alpha)
            def pose(tr, p0=p0, unit=unit, att=att, seg=seg):
                p = p0 + seg.speed * tr[:, None] * unit
                return p, np.broadcast_to(att, (len(tr), 3, 3)).copy()
            pos = p0 + seg.speed * seg.duration * unit
            speed = seg.speed

        else:
            raise ValueError(f"unknown segment type {type(seg).__name__}")

        compiled.append(_Compiled(t0, t0 + seg.duration, pose,
                                  crab=getattr(seg, "crab", 0.0),
                                  pitch_offset=getattr(seg, "pitch_offset", 0.0),
                                  blend=getattr(seg, "blend", 0.0)))
        t0 += seg.duration
    return compiled


def _evaluate(compiled: list[_Compiled], times: np.ndarray
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate pose and attitude offsets at arbitrary times; the last
    segment extrapolates."""
    pos = np.empty((len(times), 3))
    rot = np.empty((len(times), 3, 3))
    crab = np.zeros(len(times))
    pitch_off = np.zeros(len(times))
    bounds = np.array([c.t_end for c in compiled])
    idx = np.searchsorted(bounds, times, side="right")
    idx = np.minimum(idx, len(compiled) - 1)
    for k, seg in enumerate(compiled):
        mask = idx == k
        if not np.any(mask):
            continue
        t_rel = times[mask] - seg.t_start
        p, r = seg.pose(t_rel)
        pos[mask] = p
        rot[mask] = r
        weight = seg.offset_profile(t_rel)
        crab[mask] = seg.crab * weight
        pitch_off[mask] = seg.pitch_offset * weight
    return pos, rot, crab, pitch_off


def generate_truth(spec: TrajectorySpec,
                   gravity: GravityModel | None = None) -> GroundTruth:
    """Sample the trajectory on the closed interval [0, duration].

    Per-sample velocity is the position chord, and while moving the
    attitude is aligned with that chord (heading + pitch, zero roll), so
    the body-frame lateral and vertical velocities vanish identically.
    At standstill the attitude falls back to the segment's own (which is
    how a rocking segment keeps its oscillation).
    """
    grav = GravityModel() if gravity is None else gravity
    dt = 1.0 / spec.rate_hz
    n = int(round(spec.duration * spec.rate_hz)) + 1
    compiled = _compile(spec)

    # two extra poses beyond the end for the chord velocity and its rate
    times = np.arange(n + 2) * dt
    pos, rot, crab, pitch_off = _evaluate(compiled, times)

    chord = pos[1:] - pos[:-1]                      # (n+1, 3)
    norms = np.linalg.norm(chord, axis=1)
    moving = norms > 1e-9
    yaw = np.arctan2(chord[moving, 1], chord[moving, 0]) + crab[:-1][moving]
    pitch = np.arcsin(np.clip(chord[moving, 2] / norms[moving], -1.0, 1.0)) \
        + pitch_off[:-1][moving]
    rot[:n + 1][moving] = _rz(yaw) @ _ry(-pitch)

    vel = chord[:n] / dt
    vel_next = chord[1:n + 1] / dt
    accel = np.einsum("nji,nj->ni", rot[:n],
                      (vel_next - vel) / dt - grav.g)
    omega = np.empty((n, 3))
    for k in range(n):
        omega[k] = _log_so3(rot[k].T @ rot[k + 1]) / dt

    flags = np.empty((n, 4), bool)
    for k in range(n):
        flags[k] = oracle_labels(vel[k], omega[k], rot[k]).as_tuple()

    return GroundTruth(t=times[:n], rotation=rot[:n], velocity_w=vel,
                       position_w=pos[:n], omega_body=omega,
                       accel_body=accel, flags=flags)


@dataclass(frozen=True)
class ImuCorruption:
    """Measurement corruption per the bias + white noise model."""

    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sigma_gyro: float = 0.0        # rad/s, per-sample white noise
    sigma_accel: float = 0.0       # m/s^2, per-sample white noise
    sigma_gyro_bias: float = 0.0   # rad/s, bias drift rate (0 = constant bias)
    sigma_accel_bias: float = 0.0  # m/s^2, bias drift rate
    vibration_accel: float = 0.0   # m/s^2, extra accel noise while moving
    vibration_gyro: float = 0.0    # rad/s, extra gyro noise while moving
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gyro_bias", np.asarray(self.gyro_bias, float))
        object.__setattr__(self, "accel_bias", np.asarray(self.accel_bias, float))
        if min(self.sigma_gyro, self.sigma_accel, self.sigma_gyro_bias,
               self.sigma_accel_bias, self.vibration_accel,
               self.vibration_gyro) < 0:
            raise ValueError("noise parameters must be non-negative")


def corrupt(truth: GroundTruth, c: ImuCorruption) -> list[ImuSample]:
    """Turn ground truth into a biased, noisy IMU log (seeded, deterministic)."""
    n = len(truth)
    dt = float(truth.t[1] - truth.t[0]) if n > 1 else 0.01
    rng = np.random.default_rng(c.seed)

    gyro_noise = c.sigma_gyro * rng.standard_normal((n, 3))
    accel_noise = c.sigma_accel * rng.standard_normal((n, 3))

    gyro_bias = np.broadcast_to(c.gyro_bias, (n, 3)).copy()
    accel_bias = np.broadcast_to(c.accel_bias, (n, 3)).copy()
    if c.sigma_gyro_bias > 0:
        steps = c.sigma_gyro_bias * dt * rng.standard_normal((n, 3))
        gyro_bias[1:] += np.cumsum(steps[:-1], axis=0)
    if c.sigma_accel_bias > 0:
        steps = c.sigma_accel_bias * dt * rng.standard_normal((n, 3))
        accel_bias[1:] += np.cumsum(steps[:-1], axis=0)

    accel_extra = np.zeros((n, 3))
    gyro_extra = np.zeros((n, 3))
    moving = ~truth.flags[:, 0]
    if c.vibration_accel > 0:
        accel_extra[moving] = c.vibration_accel * rng.standard_normal(
            (int(np.sum(moving)), 3))
    if c.vibration_gyro > 0:
        gyro_extra[moving] = c.vibration_gyro * rng.standard_normal(
            (int(np.sum(moving)), 3))

    gyro = truth.omega_body + gyro_bias + gyro_noise + gyro_extra
    accel = truth.accel_body + accel_bias + accel_noise + accel_extra
    return [ImuSample(float(t), w, a) for t, w, a in zip(truth.t, gyro, accel)]
