"""End-to-end run: IMU log -> detector -> filter -> metrics + artifacts.

The detector sees only the raw IMU stream (never the filter's output);
the filter consumes the detector's flags for both its conditioned
propagation and its pseudo-measurement update.  The filter initializes
itself from the leading stationary window, which the input sequence must
provide (1 s by default).

Each iteration k propagates from t[k] to t[k+1] holding sample k's
inputs, then updates at t[k+1] with the pseudo-measurements built from
sample k under the active flags.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .detectors import AmvdDetector, MotionFlags, NetworkDetector
from .iekf import (FilterState, InitialUncertainty, MeasurementNoise,
                   ProcessNoise, filter_step, initialize_stationary)
from .io_csv import (read_flags_csv, read_imu_csv, read_pose_csv,
                     write_covariance_trace_csv, write_flags_csv,
                     write_pose_csv)
from .iekf import ATT, VEL, POS, BGW, BAC
from .metrics import MetricsReport, TrajectoryRecord, compute_metrics
from .state import GravityModel, ImuSample, NOMINAL_DT
from .weights_io import load_weights


class OracleDetector:
    """Replays precomputed ground-truth flags.

    Like the learned detector, consuming the sample at instant k yields
    the flags describing instant k+1 (the step being entered).
    """

    def __init__(self, times: np.ndarray, flags: list[MotionFlags]):
        self.times = np.asarray(times, float)
        self.flags = flags

    def step(self, sample: ImuSample) -> MotionFlags:
        i = int(np.searchsorted(self.times, sample.timestamp))
        if i > 0 and (i == len(self.times) or
                      abs(self.times[i - 1] - sample.timestamp)
                      <= abs(self.times[i] - sample.timestamp)):
            i -= 1
        return self.flags[min(i + 1, len(self.flags) - 1)]


def build_detector(spec: str, flags_path: str | Path | None = None):
    """Detector factory: 'oracle' | 'amvd' | 'network:<weights path>'."""
    if spec == "oracle":
        if flags_path is None:
            raise ValueError("oracle detector needs a flags csv path")
        times, flags = read_flags_csv(flags_path)
        return OracleDetector(times, flags)
    if spec == "amvd":
        return AmvdDetector()
    if spec.startswith("network:"):
        return NetworkDetector(load_weights(spec.split(":", 1)[1]))
    raise ValueError(f"unknown detector spec {spec!r} "
                     "(use oracle, amvd, or network:<path>)")


@dataclass
class FilterRun:
    t: np.ndarray
    position: np.ndarray
    rotation: np.ndarray
    velocity: np.ndarray
    cov_traces: np.ndarray        # (n, 5) block traces
    flags: list[MotionFlags]      # flags actually applied (after policies)
    raw_flags: list[MotionFlags]  # detector emissions, untouched
    final_state: FilterState
    irregular_dt: int

    def trajectory(self) -> TrajectoryRecord:
        return TrajectoryRecord(t=self.t, position=self.position,
                                rotation=self.rotation)


def run_filter(fs: FilterState, samples: list[ImuSample],
               flags_source, q: ProcessNoise, n: MeasurementNoise,
               gravity: GravityModel | None = None,
               use_lat_up: bool = True,
               nominal_dt: float = NOMINAL_DT,
               innovation_gate: float | None = None,
               debounce: int = 5,
               zupt_speed_limit: float | None = 2.5,
               zero_rate_limit: float | None = 0.05) -> FilterRun:
    """Drive the filter over a sample stream.

    ``flags_source`` is either a detector object with ``step(sample)`` or
    a list of per-sample MotionFlags, entry k describing instant k.  The
    step from k to k+1 is conditioned on the flags for instant k+1
    (detectors emit that prediction from sample k).

    Two plausibility policies protect the filter from detector false
    alarms, which are far more damaging than misses (a missed profile
    just means plain dead reckoning for a few samples):

    * the zero-velocity and zero-angular profiles engage on the
      ``debounce``-th consecutive detection, keeping the boundary samples
      of a stop and isolated false detections out of the conditioned
      model;
    * a zero-velocity detection is ignored outright while the filter's
      speed estimate exceeds ``zupt_speed_limit`` (m/s): asserting
      standstill against a confidently moving estimate would slam the
      velocity to zero and wreck the trajectory;
    * a zero-angular detection is ignored while the bias-corrected gyro
      reading exceeds ``zero_rate_limit`` (rad/s), since the gyro
      measures the very quantity the profile declares zero; freezing the
      attitude across a real rotation injects permanent heading error.

    Sample gaps outside [0.5, 2] times the nominal spacing are counted
    as irregular (and still integrated).
    """
    if debounce < 1:
        raise ValueError("debounce must be at least 1")
    n_samples = len(samples)
    times = np.array([s.timestamp for s in samples])
    t_out = [times[0]]
    pos = [fs.nav.position_w]
    rot = [fs.nav.rotation]
    vel = [fs.nav.velocity_w]
    traces = [_block_traces(fs.cov)]
    used_flags: list[MotionFlags] = []
    raw_flags: list[MotionFlags] = []
    irregular = 0
    from_list = isinstance(flags_source, list)
    vel_run = ang_run = 0
    if from_list:
        vel_run = int(flags_source[0].z_vel)
        ang_run = int(flags_source[0].z_ang)

    for k in range(n_samples - 1):
        dt = float(times[k + 1] - times[k])
        if not 0.5 * nominal_dt <= dt <= 2.0 * nominal_dt:
            irregular += 1
        cur = flags_source[k + 1] if from_list else flags_source.step(samples[k])
        raw_flags.append(cur)
        vel_run = vel_run + 1 if cur.z_vel else 0
        ang_run = ang_run + 1 if cur.z_ang else 0
        vel_plausible = (zupt_speed_limit is None or
                         float(np.linalg.norm(fs.nav.velocity_w)) <= zupt_speed_limit)
        ang_plausible = (zero_rate_limit is None or
                         float(np.linalg.norm(samples[k].gyro - fs.nav.gyro_bias))
                         <= zero_rate_limit)
        flags = MotionFlags(z_vel=vel_run >= debounce and vel_plausible,
                            z_ang=ang_run >= debounce and ang_plausible,
                            z_lat=cur.z_lat,
                            z_up=cur.z_up and use_lat_up)
        if not use_lat_up:
            flags = replace(flags, z_lat=False)
        used_flags.append(flags)
        fs = filter_step(fs, samples[k], flags, q, n, dt, gravity,
                         innovation_gate=innovation_gate)
        t_out.append(times[k + 1])
        pos.append(fs.nav.position_w)
        rot.append(fs.nav.rotation)
        vel.append(fs.nav.velocity_w)
        traces.append(_block_traces(fs.cov))

    return FilterRun(t=np.array(t_out), position=np.array(pos),
                     rotation=np.array(rot), velocity=np.array(vel),
                     cov_traces=np.array(traces), flags=used_flags,
                     raw_flags=raw_flags, final_state=fs, irregular_dt=irregular)


def _block_traces(cov: np.ndarray) -> np.ndarray:
    return np.array([np.trace(cov[b, b]) for b in (ATT, VEL, POS, BGW, BAC)])


@dataclass(frozen=True)
class RunConfig:
    imu_path: str
    output_dir: str
    truth_path: str | None = None
    flags_path: str | None = None      # oracle detector input
    detector: str = "oracle"
    process_noise: ProcessNoise = field(default_factory=ProcessNoise)
    measurement_noise: MeasurementNoise = field(default_factory=MeasurementNoise)
    initial_uncertainty: InitialUncertainty = field(default_factory=InitialUncertainty)
    init_stop_duration: float = 1.0    # leading stationary window, s
    nominal_dt: float = NOMINAL_DT
    use_lat_up: bool = True
    innovation_gate: float | None = None  # per-dof sigma bound, None disables
    debounce: int = 5  # consecutive detections before vel/ang engage
    zupt_speed_limit: float | None = 2.5  # m/s, ignore zero-vel above this
    zero_rate_limit: float | None = 0.05  # rad/s, ignore zero-ang above this
    seed: int = 0

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            raw = json.load(fh)
        for key, typ in (("process_noise", ProcessNoise),
                         ("measurement_noise", MeasurementNoise),
                         ("initial_uncertainty", InitialUncertainty)):
            if key in raw:
                raw[key] = typ(**raw[key])
        return cls(**raw)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)


@dataclass
class PipelineResult:
    run: FilterRun
    report: MetricsReport | None
    output_dir: Path


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Initialize on the leading stop, stream detector + filter, write
    artifacts, and score against ground truth when available."""
    samples = read_imu_csv(config.imu_path)
    flags_path = config.flags_path
    if flags_path is None and config.detector == "oracle":
        flags_path = Path(config.imu_path).parent / "flags.csv"
    detector = build_detector(config.detector, flags_path)
    truth = read_pose_csv(config.truth_path) if config.truth_path else None

    t0 = samples[0].timestamp
    n_init = sum(1 for s in samples if s.timestamp <= t0 + config.init_stop_duration)
    fs = initialize_stationary(samples[:n_init],
                               sigmas=config.initial_uncertainty)

    # Warm the detector on the init window so recurrent state is primed.
    for s in samples[:n_init - 1]:
        detector.step(s)

    run = run_filter(fs, samples[n_init - 1:], detector,
                     config.process_noise, config.measurement_noise,
                     use_lat_up=config.use_lat_up,
                     nominal_dt=config.nominal_dt,
                     innovation_gate=config.innovation_gate,
                     debounce=config.debounce,
                     zupt_speed_limit=config.zupt_speed_limit,
                     zero_rate_limit=config.zero_rate_limit)
    if run.irregular_dt:
        warnings.warn(f"{run.irregular_dt} sample gaps outside "
                      f"[0.5, 2] x {config.nominal_dt} s", stacklevel=2)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pose_csv(out / "trajectory.csv", run.trajectory())
    write_flags_csv(out / "flags_used.csv", run.t[1:], run.flags)
    write_covariance_trace_csv(out / "cov_trace.csv", run.t, run.cov_traces)
    (out / "config.json").write_text(config.to_json())

    report = None
    if truth is not None:
        report = compute_metrics(run.trajectory(), truth,
                                 max_gap=config.nominal_dt)
        (out / "metrics.txt").write_text(report.as_text())
        (out / "metrics.json").write_text(
            json.dumps(dataclasses.asdict(report), indent=2))
    return PipelineResult(run=run, report=report, output_dir=out)
