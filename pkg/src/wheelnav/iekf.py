"""Right-invariant extended Kalman filter over the 15-dimensional error

    e = (xi_rot, xi_vel, xi_pos, e_gyro_bias, e_accel_bias)

defined multiplicatively for the pose part and additively for the biases:

    chi_true = exp_se23(xi) @ chi_estimate,      b_true = b_estimate + e_b.

Covariance block order is [attitude(3), velocity(3), position(3),
gyro bias(3), accel bias(3)]; the attitude error vector lives in the
world frame, so for a level attitude its z component is heading.

Motion flags condition both the mean propagation (zero-velocity freezes
velocity and position, zero-angular freezes attitude) and the linearized
error propagation: the Jacobians below are the exact first-order error
dynamics of whichever conditional model is active, which keeps the
covariance consistent with what the mean update actually does.

Propagation noise enters as (gyro white, accel white, gyro-bias rate,
accel-bias rate); noise columns are signed for a perturbation added to
the true inputs on top of the estimate's inputs, and bias rates integrate
over the step (increment = rate * dt).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .detectors import MotionFlags
from .liegroup import exp_se23, exp_so3, project_rotation, se23_from_parts, se23_to_parts, skew
from .state import GravityModel, ImuSample, NavState, correct_measurement

# Error-vector block slices.
ATT = slice(0, 3)
VEL = slice(3, 6)
POS = slice(6, 9)
BGW = slice(9, 12)
BAC = slice(12, 15)

REORTHONORMALIZE_EVERY = 1000  # propagation steps between rotation re-projections


@dataclass(frozen=True)
class ProcessNoise:
    """Per-sample standard deviations of the propagation noise."""

    sigma_gyro: float = 0.01        # rad/s
    sigma_accel: float = 0.2        # m/s^2
    sigma_gyro_bias: float = 0.001  # rad/s (bias drift rate)
    sigma_accel_bias: float = 0.02  # m/s^2 (bias drift rate)

    def __post_init__(self):
        if min(self.sigma_gyro, self.sigma_accel,
               self.sigma_gyro_bias, self.sigma_accel_bias) <= 0:
            raise ValueError("process noise sigmas must be strictly positive")

    def matrix(self) -> np.ndarray:
        return np.diag(np.repeat(
            [self.sigma_gyro**2, self.sigma_accel**2,
             self.sigma_gyro_bias**2, self.sigma_accel_bias**2], 3))


@dataclass(frozen=True)
class MeasurementNoise:
    """Standard deviations of the stacked pseudo-measurements."""

    sigma_zero_vel: float = 1.0     # m/s, zero body velocity rows
    sigma_zero_accel: float = 0.4   # m/s^2, gravity-reaction rows
    sigma_zero_gyro: float = 0.04   # rad/s, zero angular rate rows
    sigma_lat: float = 3.0          # m/s, zero lateral velocity row
    sigma_up: float = 3.0           # m/s, zero vertical velocity row

    def __post_init__(self):
        if min(self.sigma_zero_vel, self.sigma_zero_accel,
               self.sigma_zero_gyro, self.sigma_lat, self.sigma_up) <= 0:
            raise ValueError("measurement noise sigmas must be strictly positive")


@dataclass(frozen=True)
class InitialUncertainty:
    """Diagonal initial error standard deviations."""

    roll_pitch: float = 0.03   # rad
    yaw: float = 0.3           # rad
    velocity: float = 0.3      # m/s
    position: float = 0.01     # m
    gyro_bias: float = 0.005   # rad/s
    accel_bias: float = 0.05   # m/s^2

    def covariance(self) -> np.ndarray:
        sig = np.array([
            self.roll_pitch, self.roll_pitch, self.yaw,
            self.velocity, self.velocity, self.velocity,
            self.position, self.position, self.position,
            self.gyro_bias, self.gyro_bias, self.gyro_bias,
            self.accel_bias, self.accel_bias, self.accel_bias,
        ])
        return np.diag(sig**2)


@dataclass(frozen=True)
class FilterState:
    nav: NavState
    cov: np.ndarray  # (15, 15)
    step_index: int = 0


def jacobian_F(nav: NavState, flags: MotionFlags, dt: float,
               gravity: GravityModel | None = None) -> np.ndarray:
    """Discrete error-propagation Jacobian, F = I + A dt.

    With no flags set, A couples attitude error into velocity through
    gravity, velocity into position, and the biases into the pose blocks
    through the current attitude (with velocity/position lever arms on
    the gyro-bias column, a feature of the multiplicative error).  A set
    zero-velocity flag freezes velocity/position, removing their own
    couplings but keeping the gyro-bias lever arms (the attitude still
    drifts); a set zero-angular flag freezes the attitude, which kills
    every gyro-bias/gyro-noise coupling.
    """
    g = GravityModel().g if gravity is None else gravity.g
    r = nav.rotation
    a = np.zeros((15, 15))
    if not flags.z_vel:
        a[VEL, ATT] = skew(g)
        a[VEL, BAC] = -r
        a[POS, VEL] = np.eye(3)
    if not flags.z_ang:
        a[ATT, BGW] = -r
        a[VEL, BGW] = -skew(nav.velocity_w) @ r
        a[POS, BGW] = -skew(nav.position_w) @ r
    return np.eye(15) + a * dt


def jacobian_G(nav: NavState, flags: MotionFlags, dt: float) -> np.ndarray:
    """Discrete noise Jacobian (15 x 12), same conditioning as jacobian_F."""
    r = nav.rotation
    g = np.zeros((15, 12))
    if not flags.z_ang:
        g[ATT, 0:3] = r
        g[VEL, 0:3] = skew(nav.velocity_w) @ r
        g[POS, 0:3] = skew(nav.position_w) @ r
    if not flags.z_vel:
        g[VEL, 3:6] = r
    g[BGW, 6:9] = np.eye(3)
    g[BAC, 9:12] = np.eye(3)
    return g * dt


def propagate(fs: FilterState, sample: ImuSample, flags: MotionFlags,
              q: ProcessNoise, dt: float,
              gravity: GravityModel | None = None) -> FilterState:
    """One conditioned propagation of mean and covariance.

    Jacobians are linearized at the pre-propagation estimate.  The
    rotation estimate is re-projected onto the orthogonal group every
    REORTHONORMALIZE_EVERY steps to shed accumulated round-off.
    """
    if dt <= 0.0:
        raise ValueError(f"non-positive dt: {dt}")
    grav = GravityModel() if gravity is None else gravity
    nav = fs.nav

    f = jacobian_F(nav, flags, dt, grav)
    g = jacobian_G(nav, flags, dt)
    cov = f @ fs.cov @ f.T + g @ q.matrix() @ g.T

    omega, accel = correct_measurement(sample, nav)
    rotation = nav.rotation if flags.z_ang else nav.rotation @ exp_so3(omega * dt)
    if flags.z_vel:
        velocity, position = nav.velocity_w, nav.position_w
    else:
        velocity = nav.velocity_w + (nav.rotation @ accel + grav.g) * dt
        position = nav.position_w + nav.velocity_w * dt

    step = fs.step_index + 1
    if step % REORTHONORMALIZE_EVERY == 0:
        rotation = project_rotation(rotation)
    nav = NavState(rotation, velocity, position, nav.gyro_bias, nav.accel_bias)
    return FilterState(nav=nav, cov=cov, step_index=step)


def stack_measurements(flags: MotionFlags, sample: ImuSample, nav: NavState,
                       noise: MeasurementNoise,
                       gravity: GravityModel | None = None
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Assemble (y, y_pred, H, N) for the active motion profiles.

    Rows are stacked in the fixed order [vel(6), ang(3), lat(1), up(1)].
    The zero-velocity profile measures the body-frame velocity (observed
    as 0) and the gravity reaction b_a - R^T g (observed as the raw
    accelerometer sample); zero-angular measures the gyro bias (observed
    as the raw gyro sample); the lateral/vertical rows are single rows of
    the body-velocity block.  When the zero-velocity flag is set the
    lateral/vertical rows are suppressed since it subsumes them.
    """
    if not flags.any():
        raise ValueError("no motion profile active: the update must be skipped")
    g = GravityModel().g if gravity is None else gravity.g
    r = nav.rotation
    v_body = r.T @ nav.velocity_w

    y_rows, pred_rows, h_rows, n_diag, blocks = [], [], [], [], []

    def add_block(name, y, pred, h, variances):
        start = sum(len(v) for v in y_rows)
        y_rows.append(y)
        pred_rows.append(pred)
        h_rows.append(h)
        n_diag.extend(variances)
        blocks.append((name, slice(start, start + len(y))))

    if flags.z_vel:
        h_v = np.zeros((3, 15))
        h_v[:, VEL] = r.T
        h_a = np.zeros((3, 15))
        h_a[:, ATT] = -r.T @ skew(g)
        h_a[:, BAC] = np.eye(3)
        add_block("vel", np.concatenate([np.zeros(3), sample.accel]),
                  np.concatenate([v_body, nav.accel_bias - r.T @ g]),
                  np.vstack([h_v, h_a]),
                  [noise.sigma_zero_vel**2] * 3 + [noise.sigma_zero_accel**2] * 3)

    if flags.z_ang:
        h_w = np.zeros((3, 15))
        h_w[:, BGW] = np.eye(3)
        add_block("ang", sample.gyro, nav.gyro_bias.copy(), h_w,
                  [noise.sigma_zero_gyro**2] * 3)

    if not flags.z_vel:
        for active, name, row, sigma in ((flags.z_lat, "lat", 1, noise.sigma_lat),
                                         (flags.z_up, "up", 2, noise.sigma_up)):
            if not active:
                continue
            h_r = np.zeros((1, 15))
            h_r[0, VEL] = r.T[row]
            add_block(name, np.zeros(1), v_body[row:row + 1].copy(), h_r,
                      [sigma**2])

    return (np.concatenate(y_rows), np.concatenate(pred_rows),
            np.vstack(h_rows), np.diag(n_diag), blocks)


def update(fs: FilterState, y: np.ndarray, y_pred: np.ndarray,
           h: np.ndarray, n: np.ndarray) -> FilterState:
    """Kalman update with multiplicative pose retraction.

    Gain K = P H^T (H P H^T + N)^-1, correction e = K (y - y_pred),
    pose retracted as exp_se23(e_pose) @ chi, biases incremented, and
    P' = (I - K H) P symmetrized.
    """
    if h.shape[0] != y.shape[0]:
        raise ValueError(f"{h.shape[0]} Jacobian rows for {y.shape[0]} measurements")
    p = fs.cov
    s = h @ p @ h.T + n
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise ValueError("innovation covariance is not positive definite "
                         "(degenerate N or P)") from exc
    k = np.linalg.solve(s, h @ p).T
    e = k @ (y - y_pred)

    chi = exp_se23(e[:9]) @ se23_from_parts(
        fs.nav.rotation, fs.nav.velocity_w, fs.nav.position_w)
    rotation, velocity, position = se23_to_parts(chi)
    nav = NavState(rotation, velocity, position,
                   fs.nav.gyro_bias + e[BGW], fs.nav.accel_bias + e[BAC])

    cov = (np.eye(15) - k @ h) @ p
    cov = 0.5 * (cov + cov.T)
    return FilterState(nav=nav, cov=cov, step_index=fs.step_index)


def filter_step(fs: FilterState, sample: ImuSample, flags: MotionFlags,
                q: ProcessNoise, n: MeasurementNoise, dt: float,
                gravity: GravityModel | None = None,
                innovation_gate: float | None = None) -> FilterState:
    """Propagate with the given flags, then update unless no flag is set.

    Each pseudo-measurement block is validated against its innovation
    covariance before use: a block whose squared Mahalanobis innovation
    exceeds gate^2 per degree of freedom is dropped (a detector false
    alarm asserting, say, zero velocity at speed would otherwise slam the
    state).  Genuine measurements under large state uncertainty still
    pass, since the test normalizes by H P H^T + N.
    """
    fs = propagate(fs, sample, flags, q, dt, gravity)
    if not flags.any():
        return fs
    y, y_pred, h, n_mat, blocks = stack_measurements(flags, sample, fs.nav,
                                                     n, gravity)
    if innovation_gate is not None:
        s = h @ fs.cov @ h.T + n_mat
        innovation = y - y_pred
        keep_rows: list[int] = []
        for _, block in blocks:
            d = innovation[block]
            d2 = float(d @ np.linalg.solve(s[block, block], d))
            if d2 <= innovation_gate**2 * len(d):
                keep_rows.extend(range(block.start, block.stop))
        if not keep_rows:
            return fs
        y, y_pred = y[keep_rows], y_pred[keep_rows]
        h, n_mat = h[keep_rows], n_mat[np.ix_(keep_rows, keep_rows)]
    return update(fs, y, y_pred, h, n_mat)


def initialize_stationary(samples: list[ImuSample],
                          gravity: GravityModel | None = None,
                          sigmas: InitialUncertainty | None = None
                          ) -> FilterState:
    """Self-initialize from a presumed-stationary sample window.

    The gyro bias is the window mean; roll/pitch are chosen so the
    attitude maps the mean accelerometer direction onto the gravity
    reaction (heading is left at zero, with a correspondingly large
    initial heading variance); the accel-bias estimate absorbs the
    magnitude residual along that direction.  Velocity and position
    start at zero.
    """
    if len(samples) < 100:
        raise ValueError(f"need at least 100 stationary samples, got {len(samples)}")
    grav = GravityModel() if gravity is None else gravity
    sig = InitialUncertainty() if sigmas is None else sigmas

    mean_gyro = np.mean([s.gyro for s in samples], axis=0)
    mean_accel = np.mean([s.accel for s in samples], axis=0)
    accel_norm = float(np.linalg.norm(mean_accel))
    if not 9.0 <= accel_norm <= 10.5:
        raise ValueError(
            f"mean specific force {accel_norm:.3f} m/s^2 is not consistent "
            "with a stationary, roughly level start")

    up_body = mean_accel / accel_norm          # measured gravity reaction
    up_world = -grav.g / np.linalg.norm(grav.g)
    axis = np.cross(up_body, up_world)
    s = float(np.linalg.norm(axis))
    c = float(up_body @ up_world)
    if s < 1e-12:
        rotation = np.eye(3) if c > 0 else exp_so3(np.array([np.pi, 0.0, 0.0]))
    else:
        rotation = exp_so3(axis / s * np.arctan2(s, c))

    accel_bias = mean_accel - rotation.T @ (-grav.g)
    nav = NavState(rotation=rotation, velocity_w=np.zeros(3),
                   position_w=np.zeros(3), gyro_bias=mean_gyro,
                   accel_bias=accel_bias)
    return FilterState(nav=nav, cov=sig.covariance(), step_index=0)
