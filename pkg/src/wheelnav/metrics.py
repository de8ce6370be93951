"""Trajectory error metrics.

All three metrics compare planar (x, y) positions of an estimate against
ground truth after associating samples by nearest timestamp:

  * mean absolute trajectory error: mean planar distance over pairs;
  * aligned variant: the same after the planar rigid transform
    (heading + 2D translation, no scale) that minimizes the summed
    squared planar error;
  * final distance: planar distance of the last associated pair,
    un-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TrajectoryRecord:
    t: np.ndarray          # (n,)
    position: np.ndarray   # (n, 3)
    rotation: np.ndarray | None = None  # (n, 3, 3), optional

    def __post_init__(self):
        t = np.asarray(self.t, float)
        if len(t) and np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "position", np.asarray(self.position, float))

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class MetricsReport:
    m_ate: float
    aligned_m_ate: float
    final_distance: float
    length: float     # ground-truth path length, m
    duration: float   # overlap duration, s
    matched: int
    dropped: int

    def as_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.__dict__.items())


def associate(est_t: np.ndarray, gt_t: np.ndarray,
              max_gap: float) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbor timestamp pairing within max_gap.

    Returns (est_indices, gt_indices); estimate samples with no ground
    truth within the gap are dropped.
    """
    gt_t = np.asarray(gt_t, float)
    est_t = np.asarray(est_t, float)
    pos = np.searchsorted(gt_t, est_t)
    lo = np.clip(pos - 1, 0, len(gt_t) - 1)
    hi = np.clip(pos, 0, len(gt_t) - 1)
    pick = np.where(np.abs(gt_t[hi] - est_t) < np.abs(gt_t[lo] - est_t), hi, lo)
    ok = np.abs(gt_t[pick] - est_t) <= max_gap
    return np.nonzero(ok)[0], pick[ok]


def _paired_planar(est: TrajectoryRecord, gt: TrajectoryRecord,
                   max_gap: float | None) -> tuple[np.ndarray, np.ndarray, int]:
    if len(est) == 0 or len(gt) == 0:
        raise ValueError("empty trajectory")
    if max_gap is None:
        dt = np.min(np.diff(gt.t)) if len(gt) > 1 else 1.0
        max_gap = 0.5 * dt
    ei, gi = associate(est.t, gt.t, max_gap)
    if len(ei) == 0:
        raise ValueError("no associable samples within the timestamp gap")
    dropped = len(est) - len(ei)
    return est.position[ei][:, :2], gt.position[gi][:, :2], dropped


def m_ate(est: TrajectoryRecord, gt: TrajectoryRecord,
          max_gap: float | None = None) -> float:
    """Mean planar translation error over associated pairs."""
    p_est, p_gt, _ = _paired_planar(est, gt, max_gap)
    return float(np.mean(np.linalg.norm(p_est - p_gt, axis=1)))


def planar_alignment(p_est: np.ndarray, p_gt: np.ndarray,
                     weights: np.ndarray | None = None
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form planar rigid fit: R, t minimizing the (weighted) sum of
    squared planar errors ||R p_est + t - p_gt||^2."""
    if len(p_est) < 2:
        raise ValueError("need at least 2 points to align")
    w = np.ones(len(p_est)) if weights is None else weights
    w = w / np.sum(w)
    mu_e = w @ p_est
    mu_g = w @ p_gt
    ce = p_est - mu_e
    cg = p_gt - mu_g
    if not (np.any(np.abs(ce) > 1e-12) or np.any(np.abs(cg) > 1e-12)):
        raise ValueError("degenerate geometry: all points coincide")
    theta = np.arctan2(np.sum(w * (ce[:, 0] * cg[:, 1] - ce[:, 1] * cg[:, 0])),
                       np.sum(w * (ce[:, 0] * cg[:, 0] + ce[:, 1] * cg[:, 1])))
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    trans = mu_g - rot @ mu_e
    return rot, trans


def _align_mean_norm(p_est: np.ndarray, p_gt: np.ndarray,
                     iters: int = 200, tol: float = 1e-14) -> np.ndarray:
    """Planar rigid transform minimizing the MEAN planar error norm.

    Iteratively reweighted least squares started at the identity: each
    step is a weighted Procrustes fit with weights 1/||residual||, a
    majorize-minimize scheme for the sum of norms, so the objective never
    rises above its identity-transform value.  Returns the moved points.
    """
    moved = p_est
    cost = float(np.mean(np.linalg.norm(moved - p_gt, axis=1)))
    for _ in range(iters):
        residual = np.linalg.norm(moved - p_gt, axis=1)
        weights = 1.0 / np.maximum(residual, 1e-12)
        rot, trans = planar_alignment(p_est, p_gt, weights)
        candidate = p_est @ rot.T + trans
        new_cost = float(np.mean(np.linalg.norm(candidate - p_gt, axis=1)))
        if new_cost > cost:
            break
        moved = candidate
        if cost - new_cost < tol * max(cost, 1.0):
            cost = new_cost
            break
        cost = new_cost
    return moved


def aligned_m_ate(est: TrajectoryRecord, gt: TrajectoryRecord,
                  max_gap: float | None = None) -> float:
    """m_ate after the planar rigid alignment minimizing it."""
    p_est, p_gt, _ = _paired_planar(est, gt, max_gap)
    moved = _align_mean_norm(p_est, p_gt)
    return float(np.mean(np.linalg.norm(moved - p_gt, axis=1)))


def final_distance(est: TrajectoryRecord, gt: TrajectoryRecord,
                   max_gap: float | None = None) -> float:
    """Planar distance between the last associated pair, un-aligned."""
    p_est, p_gt, _ = _paired_planar(est, gt, max_gap)
    return float(np.linalg.norm(p_est[-1] - p_gt[-1]))


def compute_metrics(est: TrajectoryRecord, gt: TrajectoryRecord,
                    max_gap: float | None = None) -> MetricsReport:
    p_est, p_gt, dropped = _paired_planar(est, gt, max_gap)
    moved = _align_mean_norm(p_est, p_gt)
    errors = np.linalg.norm(p_est - p_gt, axis=1)
    length = float(np.sum(np.linalg.norm(np.diff(gt.position, axis=0), axis=1)))
    return MetricsReport(
        m_ate=float(np.mean(errors)),
        aligned_m_ate=float(np.mean(np.linalg.norm(moved - p_gt, axis=1))),
        final_distance=float(errors[-1]),
        length=length,
        duration=float(gt.t[-1] - gt.t[0]),
        matched=len(p_est),
        dropped=dropped,
    )
