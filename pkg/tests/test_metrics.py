import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wheelnav.metrics import (MetricsReport, TrajectoryRecord, aligned_m_ate,
                              associate, compute_metrics, final_distance,
                              m_ate, planar_alignment)


def _record(positions, t0=0.0, dt=0.1):
    positions = np.asarray(positions, float)
    return TrajectoryRecord(t=t0 + dt * np.arange(len(positions)),
                            position=positions)


def _random_record(rng, n=40):
    steps = rng.uniform(-1, 1, (n, 3))
    return _record(np.cumsum(steps, axis=0))


def test_identical_trajectories_all_zero():
    rec = _random_record(np.random.default_rng(0))
    assert m_ate(rec, rec) == 0.0
    assert aligned_m_ate(rec, rec) < 1e-12
    assert final_distance(rec, rec) == 0.0


def test_constant_offset_345():
    gt = _random_record(np.random.default_rng(1))
    est = _record(gt.position + np.array([3.0, 4.0, 0.0]))
    assert m_ate(est, gt) == 5.0


def test_m_ate_matches_brute_force():
    rng = np.random.default_rng(2)
    gt = _random_record(rng)
    est = _record(gt.position + 0.1 * rng.standard_normal(gt.position.shape))
    expected = np.mean([np.hypot(*(e - g)[:2]) for e, g
                        in zip(est.position, gt.position)])
    assert m_ate(est, gt) == pytest.approx(expected, abs=1e-12)


def test_aligned_recovers_rigid_transform():
    rng = np.random.default_rng(3)
    gt = _random_record(rng)
    theta = np.deg2rad(30.0)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    est = _record(gt.position @ rot.T + np.array([100.0, -40.0, 0.0]))
    assert aligned_m_ate(est, gt) < 1e-9
    assert m_ate(est, gt) > 10


def test_aligned_never_worse_than_unaligned():
    rng = np.random.default_rng(4)
    for _ in range(100):
        gt = _random_record(rng, n=25)
        est = _record(gt.position + 0.5 * rng.standard_normal((25, 3)))
        assert aligned_m_ate(est, gt) <= m_ate(est, gt) + 1e-12


def test_alignment_beats_grid_search():
    rng = np.random.default_rng(5)
    gt = _random_record(rng, n=30)
    est = _record(gt.position + 0.3 * rng.standard_normal((30, 3)))
    p_est, p_gt = est.position[:, :2], gt.position[:, :2]
    best = np.inf
    for theta in np.linspace(-np.pi, np.pi, 3601):
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        moved = p_est @ rot.T
        trans = p_gt.mean(axis=0) - moved.mean(axis=0)
        best = min(best, np.sum(np.linalg.norm(moved + trans - p_gt, axis=1)**2))
    rot, trans = planar_alignment(p_est, p_gt)
    ours = np.sum(np.linalg.norm(p_est @ rot.T + trans - p_gt, axis=1)**2)
    assert ours <= best + 1e-9


def test_metrics_invariant_to_common_rigid_transform():
    rng = np.random.default_rng(6)
    gt = _random_record(rng)
    est = _record(gt.position + 0.2 * rng.standard_normal(gt.position.shape))
    theta = 1.1
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    shift = np.array([-7.0, 12.0, 0.0])
    gt2 = _record(gt.position @ rot.T + shift)
    est2 = _record(est.position @ rot.T + shift)
    assert abs(m_ate(est2, gt2) - m_ate(est, gt)) < 1e-9
    assert abs(aligned_m_ate(est2, gt2) - aligned_m_ate(est, gt)) < 1e-9
    assert abs(final_distance(est2, gt2) - final_distance(est, gt)) < 1e-9


def test_final_distance_simple():
    gt = _record([[0, 0, 0], [50, 0, 0], [100, 0, 0]])
    est = _record([[0, 0, 0], [49, 0, 0], [80, 0, 0]])
    assert final_distance(est, gt) == 20.0


def test_final_distance_urban_benchmark_fixture():
    """Stored endpoint pair reproducing the 20 m final error of the
    73-minute reference run."""
    gt = _record([[0, 0, 0], [2000.0, 1000.0, 2.0]], dt=2190.0)
    est = _record([[0, 0, 0], [2012.0, 1016.0, 1.0]], dt=2190.0)
    assert final_distance(est, gt) == 20.0


def test_final_distance_ignores_altitude():
    gt = _record([[0, 0, 0], [10, 0, 5.0]])
    est = _record([[0, 0, 0], [10, 0, -5.0]])
    assert final_distance(est, gt) == 0.0


def test_association_drops_unmatched():
    gt = TrajectoryRecord(t=np.arange(10) * 0.1, position=np.zeros((10, 3)))
    est = TrajectoryRecord(t=np.array([0.0, 0.101, 0.35, 2.0]),
                           position=np.zeros((4, 3)))
    ei, gi = associate(est.t, gt.t, max_gap=0.05)
    assert list(ei) == [0, 1, 2]
    assert list(gi) == [0, 1, 3]  # 0.35 pairs with 0.3 or 0.4


def test_empty_inputs_rejected():
    rec = _record([[0, 0, 0], [1, 0, 0]])
    empty = TrajectoryRecord(t=np.array([]), position=np.zeros((0, 3)))
    with pytest.raises(ValueError):
        m_ate(empty, rec)
    with pytest.raises(ValueError):
        final_distance(rec, empty)


def test_no_overlap_rejected():
    a = _record([[0, 0, 0], [1, 0, 0]], t0=0.0)
    b = _record([[0, 0, 0], [1, 0, 0]], t0=100.0)
    with pytest.raises(ValueError):
        m_ate(a, b)


def test_degenerate_alignment_rejected():
    pts = np.zeros((5, 2))
    with pytest.raises(ValueError):
        planar_alignment(pts, pts)


def test_timestamps_must_increase():
    with pytest.raises(ValueError):
        TrajectoryRecord(t=np.array([0.0, 0.0, 0.1]), position=np.zeros((3, 3)))


def test_report_text_and_fields():
    rng = np.random.default_rng(7)
    gt = _random_record(rng)
    est = _record(gt.position + np.array([3.0, 4.0, 0.0]))
    report = compute_metrics(est, gt)
    assert report.m_ate == 5.0
    assert report.aligned_m_ate < 1e-9
    assert report.final_distance == 5.0
    assert report.matched == len(gt)
    assert "m_ate=5.0" in report.as_text()


@given(dx=st.floats(-50, 50), dy=st.floats(-50, 50))
@settings(max_examples=50)
def test_offset_only_m_ate_is_norm(dx, dy):
    gt = _random_record(np.random.default_rng(8), n=15)
    est = _record(gt.position + np.array([dx, dy, 0.0]))
    assert m_ate(est, gt) == pytest.approx(np.hypot(dx, dy), rel=1e-12, abs=1e-12)
