"""Navigation state and exact strapdown propagation.

Conventions
-----------
World frame is z-up and gravity is g = (0, 0, -9.81) m/s^2, so a level,
stationary accelerometer reads approximately (0, 0, +9.81).  The rotation
matrix maps body to world.  One propagation step is the first-order
discretization

    R'  = R exp_so3(omega dt)
    v'  = v + (R a + g) dt
    p'  = p + v dt          (pre-update velocity)

with omega, a the bias-corrected body rates / specific force.  Biases are
held constant by deterministic propagation; their random walk lives in the
filter's process noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liegroup import exp_so3

STANDARD_GRAVITY = 9.81
NOMINAL_DT = 0.01  # 100 Hz IMU


def _vec3(x) -> np.ndarray:
    out = np.asarray(x, dtype=float)
    if out.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {out.shape}")
    return out


@dataclass(frozen=True)
class GravityModel:
    """World-frame gravity vector; norm must be earth-like."""

    g: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, -STANDARD_GRAVITY]))

    def __post_init__(self):
        object.__setattr__(self, "g", _vec3(self.g))
        norm = float(np.linalg.norm(self.g))
        if not 9.7 <= norm <= 9.9:
            raise ValueError(f"gravity norm {norm:.3f} outside [9.7, 9.9]")


@dataclass(frozen=True)
class ImuSample:
    """One timestamped gyro + accelerometer reading (rad/s, m/s^2)."""

    timestamp: float
    gyro: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gyro", _vec3(self.gyro))
        object.__setattr__(self, "accel", _vec3(self.accel))


@dataclass(frozen=True)
class NavState:
    """Attitude (body->world), world velocity/position, IMU biases."""

    rotation: np.ndarray
    velocity_w: np.ndarray
    position_w: np.ndarray
    gyro_bias: np.ndarray
    accel_bias: np.ndarray

    @classmethod
    def at_rest(cls, rotation: np.ndarray | None = None) -> "NavState":
        return cls(
            rotation=np.eye(3) if rotation is None else np.asarray(rotation, float),
            velocity_w=np.zeros(3),
            position_w=np.zeros(3),
            gyro_bias=np.zeros(3),
            accel_bias=np.zeros(3),
        )


def correct_measurement(sample: ImuSample, state: NavState) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the estimated biases from a raw IMU sample."""
    return sample.gyro - state.gyro_bias, sample.accel - state.accel_bias


def propagate_nav(state: NavState, omega: np.ndarray, accel: np.ndarray,
                  dt: float, gravity: GravityModel | None = None) -> NavState:
    """One strapdown step with bias-corrected inputs.  Biases are unchanged."""
    if dt <= 0.0:
        raise ValueError(f"non-positive dt: {dt}")
    g = STANDARD_GRAVITY_VECTOR if gravity is None else gravity.g
    rotation = state.rotation @ exp_so3(omega * dt)
    velocity = state.velocity_w + (state.rotation @ accel + g) * dt
    position = state.position_w + state.velocity_w * dt
    return NavState(rotation, velocity, position, state.gyro_bias, state.accel_bias)


STANDARD_GRAVITY_VECTOR = np.array([0.0, 0.0, -STANDARD_GRAVITY])
