"""IMU-only dead reckoning for wheeled vehicles.

Strapdown integration on the extended pose group, a right-invariant EKF
fusing zero-velocity / zero-angular / lateral / vertical motion-profile
pseudo-measurements, pluggable detectors, a synthetic trajectory bench,
and trajectory error metrics.
"""

from .detectors import MotionFlags, amvd_detect, evaluate_detector, oracle_labels
from .iekf import (FilterState, InitialUncertainty, MeasurementNoise,
                   ProcessNoise, filter_step, initialize_stationary)
from .metrics import TrajectoryRecord, aligned_m_ate, compute_metrics, final_distance, m_ate
from .pipeline import RunConfig, run_pipeline
from .simulate import GroundTruth, ImuCorruption, TrajectorySpec, corrupt, generate_truth
from .state import GravityModel, ImuSample, NavState, correct_measurement, propagate_nav

__all__ = [
    "MotionFlags", "amvd_detect", "evaluate_detector", "oracle_labels",
    "FilterState", "InitialUncertainty", "MeasurementNoise", "ProcessNoise",
    "filter_step", "initialize_stationary",
    "TrajectoryRecord", "aligned_m_ate", "compute_metrics", "final_distance",
    "m_ate",
    "RunConfig", "run_pipeline",
    "GroundTruth", "ImuCorruption", "TrajectorySpec", "corrupt",
    "generate_truth",
    "GravityModel", "ImuSample", "NavState", "correct_measurement",
    "propagate_nav",
]
