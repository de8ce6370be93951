"""Motion-profile detection.

A detector turns raw IMU samples into four binary motion flags per step:

    z_vel  platform velocity is zero
    z_ang  angular velocity is zero
    z_lat  body-frame lateral velocity is (roughly) zero
    z_up   body-frame vertical velocity is (roughly) zero

Three detectors are provided: a ground-truth labeler (thresholds on the
true velocities), the accelerometer moving-variance baseline, and a
recurrent-network scorer running over externally trained weights (one
small two-layer LSTM plus a two-layer head per profile, see
``weights_io`` and docs/detector_weights_format.md).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import ImuSample

# Ground-truth labeling thresholds (m/s, rad/s, m/s, m/s).
ZERO_VEL_THRESHOLD = 0.01
ZERO_ANG_THRESHOLD = 0.005
ZERO_LATERAL_THRESHOLD = 0.1
ZERO_VERTICAL_THRESHOLD = 0.1

# Default score thresholds per profile (vel, ang, lat, up).
DEFAULT_SCORE_THRESHOLDS = (0.95, 0.95, 0.5, 0.5)

# AMVD defaults: window length in samples, variance threshold in m^2/s^4.
AMVD_WINDOW = 100
AMVD_GAMMA = 1e-3

PROFILE_NAMES = ("vel", "ang", "lat", "up")


@dataclass(frozen=True)
class MotionFlags:
    z_vel: bool = False
    z_ang: bool = False
    z_lat: bool = False
    z_up: bool = False

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.z_vel, self.z_ang, self.z_lat, self.z_up)

    def any(self) -> bool:
        return self.z_vel or self.z_ang or self.z_lat or self.z_up

    @classmethod
    def clear(cls) -> "MotionFlags":
        return cls()


def oracle_labels(velocity_w: np.ndarray, omega_body: np.ndarray,
                  rotation: np.ndarray) -> MotionFlags:
    """Label a ground-truth sample by thresholding the true velocities.

    Lateral/vertical flags threshold the body-frame velocity R^T v.
    """
    v_body = rotation.T @ velocity_w
    return MotionFlags(
        z_vel=bool(np.linalg.norm(velocity_w) < ZERO_VEL_THRESHOLD),
        z_ang=bool(np.linalg.norm(omega_body) < ZERO_ANG_THRESHOLD),
        z_lat=bool(abs(v_body[1]) < ZERO_LATERAL_THRESHOLD),
        z_up=bool(abs(v_body[2]) < ZERO_VERTICAL_THRESHOLD),
    )


def amvd_detect(window: np.ndarray, gamma: float = AMVD_GAMMA) -> bool:
    """Stationarity test on a window of accelerometer vectors.

    True iff the mean of the three per-axis unbiased sample variances is
    below gamma.  The statistic ignores the window mean, so it is
    invariant to constant offsets (gravity, accelerometer bias).
    """
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != 3:
        raise ValueError(f"expected (W, 3) accel window, got {window.shape}")
    if window.shape[0] < 2:
        raise ValueError("window too short for a variance")
    return bool(np.mean(np.var(window, axis=0, ddof=1)) < gamma)


class AmvdDetector:
    """Streaming AMVD producing per-sample flags (zero-velocity only).

    Emits no detection until the trailing window is full.
    """

    def __init__(self, window: int = AMVD_WINDOW, gamma: float = AMVD_GAMMA):
        if window < 2:
            raise ValueError("window must hold at least 2 samples")
        self.window = window
        self.gamma = gamma
        self._buf: list[np.ndarray] = []

    def step(self, sample: ImuSample) -> MotionFlags:
        self._buf.append(sample.accel)
        if len(self._buf) > self.window:
            self._buf.pop(0)
        if len(self._buf) < self.window:
            return MotionFlags.clear()
        return MotionFlags(z_vel=amvd_detect(np.array(self._buf), self.gamma))


# ---------------------------------------------------------------------------
# Recurrent-network detector
# ---------------------------------------------------------------------------

ACT_LINEAR = 0
ACT_RELU = 1


@dataclass(frozen=True)
class ProfileNet:
    """Weights of one per-profile scorer.

    Two stacked LSTM layers followed by a two-layer head; the head output
    is always passed through a sigmoid.  Gate rows of w_input/w_hidden are
    blocked [input; forget; cell; output], each ``hidden`` rows.
    """

    norm_mean: np.ndarray    # (input_size,)
    norm_scale: np.ndarray   # (input_size,)
    w_input: tuple[np.ndarray, ...]   # per layer, (4H, in_dim)
    w_hidden: tuple[np.ndarray, ...]  # per layer, (4H, H)
    b_input: tuple[np.ndarray, ...]   # per layer, (4H,)
    b_hidden: tuple[np.ndarray, ...]  # per layer, (4H,)
    head_w1: np.ndarray      # (H, H)
    head_b1: np.ndarray      # (H,)
    head_act1: int
    head_w2: np.ndarray      # (1, H)
    head_b2: np.ndarray      # (1,)
    head_act2: int
    threshold: float


@dataclass(frozen=True)
class DetectorWeights:
    """Four independent profile networks sharing hidden/input sizes."""

    hidden_size: int
    input_size: int
    profiles: tuple[ProfileNet, ProfileNet, ProfileNet, ProfileNet]

    def __post_init__(self):
        for name, net in zip(PROFILE_NAMES, self.profiles):
            _check_profile_shapes(name, net, self.hidden_size, self.input_size)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([net.threshold for net in self.profiles])


def _check_profile_shapes(name: str, net: ProfileNet, hidden: int, inp: int) -> None:
    def expect(tensor, shape, what):
        if tensor.shape != shape:
            raise ValueError(
                f"profile {name}: {what} has shape {tensor.shape}, expected {shape}")

    expect(net.norm_mean, (inp,), "norm_mean")
    expect(net.norm_scale, (inp,), "norm_scale")
    if len(net.w_input) != 2 or len(net.w_hidden) != 2:
        raise ValueError(f"profile {name}: expected 2 recurrent layers")
    for layer, in_dim in enumerate((inp, hidden)):
        expect(net.w_input[layer], (4 * hidden, in_dim), f"w_input[{layer}]")
        expect(net.w_hidden[layer], (4 * hidden, hidden), f"w_hidden[{layer}]")
        expect(net.b_input[layer], (4 * hidden,), f"b_input[{layer}]")
        expect(net.b_hidden[layer], (4 * hidden,), f"b_hidden[{layer}]")
    expect(net.head_w1, (hidden, hidden), "head_w1")
    expect(net.head_b1, (hidden,), "head_b1")
    expect(net.head_w2, (1, hidden), "head_w2")
    expect(net.head_b2, (1,), "head_b2")
    if not 0.0 < net.threshold < 1.0:
        raise ValueError(f"profile {name}: threshold {net.threshold} not in (0, 1)")


@dataclass
class DetectorHiddenState:
    """Per-profile, per-layer hidden and cell vectors."""

    h: np.ndarray  # (4, 2, H)
    c: np.ndarray  # (4, 2, H)

    @classmethod
    def zeros(cls, weights: DetectorWeights) -> "DetectorHiddenState":
        shape = (4, 2, weights.hidden_size)
        return cls(h=np.zeros(shape), c=np.zeros(shape))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _activate(x: np.ndarray, tag: int) -> np.ndarray:
    if tag == ACT_RELU:
        return np.maximum(x, 0.0)
    if tag == ACT_LINEAR:
        return x
    raise ValueError(f"unknown activation tag {tag}")


def _lstm_cell(x, h, c, w_in, w_hid, b_in, b_hid, hidden):
    gates = w_in @ x + b_in + w_hid @ h + b_hid
    i = _sigmoid(gates[:hidden])
    f = _sigmoid(gates[hidden:2 * hidden])
    g = np.tanh(gates[2 * hidden:3 * hidden])
    o = _sigmoid(gates[3 * hidden:])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def detect_step(weights: DetectorWeights, hidden: DetectorHiddenState,
                sample: ImuSample) -> tuple[np.ndarray, DetectorHiddenState]:
    """Advance every profile network by one IMU sample.

    Returns the four profile scores in [0, 1] and the new hidden state.
    The input vector is (gyro, accel) normalized per channel with the
    constants stored in the weights.
    """
    if hidden.h.shape != (4, 2, weights.hidden_size):
        raise ValueError(
            f"hidden state shape {hidden.h.shape} does not match weights")
    raw = np.concatenate([sample.gyro, sample.accel])
    nh = weights.hidden_size
    scores = np.empty(4)
    h_new = np.empty_like(hidden.h)
    c_new = np.empty_like(hidden.c)
    for k, net in enumerate(weights.profiles):
        x = (raw - net.norm_mean) / net.norm_scale
        for layer in range(2):
            x, c = _lstm_cell(x, hidden.h[k, layer], hidden.c[k, layer],
                              net.w_input[layer], net.w_hidden[layer],
                              net.b_input[layer], net.b_hidden[layer], nh)
            h_new[k, layer] = x
            c_new[k, layer] = c
        mid = _activate(net.head_w1 @ x + net.head_b1, net.head_act1)
        out = _activate(net.head_w2 @ mid + net.head_b2, net.head_act2)
        scores[k] = _sigmoid(out)[0]
    return scores, DetectorHiddenState(h=h_new, c=c_new)


def threshold_scores(scores: np.ndarray, weights: DetectorWeights) -> MotionFlags:
    """Binarize profile scores; a score exactly at its threshold counts."""
    hits = np.asarray(scores) >= weights.thresholds
    return MotionFlags(*(bool(v) for v in hits))


class NetworkDetector:
    """Streaming wrapper: raw samples in, thresholded flags out."""

    def __init__(self, weights: DetectorWeights):
        self.weights = weights
        self.hidden = DetectorHiddenState.zeros(weights)
        self.last_scores: np.ndarray | None = None

    def step(self, sample: ImuSample) -> MotionFlags:
        scores, self.hidden = detect_step(self.weights, self.hidden, sample)
        self.last_scores = scores
        return threshold_scores(scores, self.weights)


# ---------------------------------------------------------------------------
# Detector evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    precision_defined: bool = True


def confusion_report(tp: int, fp: int, tn: int, fn: int) -> ProfileReport:
    """precision = tp/(tp+fp), recall = tp/(tp+fn); an undefined precision
    (no positive predictions) is reported as 1.0 with the flag cleared."""
    defined = (tp + fp) > 0
    precision = tp / (tp + fp) if defined else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    return ProfileReport(tp, fp, tn, fn, precision, recall, defined)


def evaluate_detector(predicted: list[MotionFlags],
                      truth: list[MotionFlags]) -> dict[str, ProfileReport]:
    """Per-profile confusion counts of predicted vs reference flags."""
    if len(predicted) != len(truth):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(truth)} labels")
    pred = np.array([f.as_tuple() for f in predicted], dtype=bool)
    ref = np.array([f.as_tuple() for f in truth], dtype=bool)
    out = {}
    for k, name in enumerate(PROFILE_NAMES):
        p, t = pred[:, k], ref[:, k]
        out[name] = confusion_report(
            tp=int(np.sum(p & t)), fp=int(np.sum(p & ~t)),
            tn=int(np.sum(~p & ~t)), fn=int(np.sum(~p & t)))
    return out
