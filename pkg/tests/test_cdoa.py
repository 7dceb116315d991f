import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdoa_loc.cdoa import (CdoaSmoother, RssiGradient, cdoa_from_gradient, compute_gradient, estimate_cdoa,
                           gradient_general, gradient_lsq, gradient_rect4, sensor_angles, sensor_stencils)
from cdoa_loc.channel import ChannelModel, RssiSnapshot, sample_window
from cdoa_loc.core import (InvalidLayoutError, NodeLayout, NoSignalDirectionError, Position,
                           RankDeficiencyError, angular_error)

reading = st.floats(-100, 0, allow_nan=False)


def snap_of(layout, values):
    return RssiSnapshot(0.0, tuple(float(v) for v in values), tuple(layout.ids))


def linear_snap(layout, a, b, c=0.0):
    return snap_of(layout, [a * x + b * y + c for x, y in layout.positions])


def test_rect4_constant_field_is_zero(layout6):
    g = gradient_rect4(layout6, snap_of(layout6, [-50] * 4))
    assert (g.g_x, g.g_y) == (0.0, 0.0)


def test_rect4_linear_field(layout6):
    snap = snap_of(layout6, [0, 12, 18, 6])  # S = x + 2y at SW, NW, NE, SE
    g = gradient_rect4(layout6, snap)
    assert (g.g_x, g.g_y) == (1.0, 2.0)


def test_rect4_noiseless_channel_hand_evaluated(layout6, clean):
    robot = (4.5, 3.0)
    s = [-40 - 30 * math.log10(math.dist(robot, c)) for c in [(0, 0), (0, 6), (6, 6), (6, 0)]]
    gx = (s[2] - s[1]) / 12 + (s[3] - s[0]) / 12
    gy = (s[1] - s[0]) / 12 + (s[2] - s[3]) / 12
    g = gradient_rect4(layout6, sample_window(clean, layout6, Position(*robot), 1, np.random.default_rng(0)))
    assert g.g_x == pytest.approx(gx, abs=1e-12) and g.g_y == pytest.approx(gy, abs=1e-12)


def test_rect4_rejects_other_layouts():
    layout = NodeLayout.from_points([(0, 0), (4, 0), (0, 4)])
    with pytest.raises(InvalidLayoutError):
        gradient_rect4(layout, snap_of(layout, [1, 2, 3]))


@given(st.lists(reading, min_size=4, max_size=4), st.floats(0.5, 20), st.floats(0.5, 20))
def test_general_equals_rect4(values, w, h):
    layout = NodeLayout.from_points([(0, 0), (0, h), (w, h), (w, 0)])
    snap = snap_of(layout, values)
    a, b = gradient_rect4(layout, snap), gradient_general(layout, snap)
    assert b.g_x == pytest.approx(a.g_x, rel=1e-12, abs=1e-12)
    assert b.g_y == pytest.approx(a.g_y, rel=1e-12, abs=1e-12)


def test_general_linear_and_constant(layout6):
    g = gradient_general(layout6, linear_snap(layout6, 1.0, 2.0))
    assert (g.g_x, g.g_y) == (pytest.approx(1.0), pytest.approx(2.0))
    g = gradient_general(layout6, snap_of(layout6, [3] * 4))
    assert (g.g_x, g.g_y) == (0.0, 0.0)


def test_general_needs_nodes_near_offsets():
    layout = NodeLayout.from_points([(0, 0), (0, 6), (6, 6), (6, 0), (3, 3)])
    g = gradient_general(layout, linear_snap(layout, 1.0, -1.0))
    assert (g.g_x, g.g_y) == (pytest.approx(1.0), pytest.approx(-1.0))
    skewed = NodeLayout.from_points([(0, 0), (0, 6), (4, 6), (6, 0)])
    with pytest.raises(InvalidLayoutError):
        gradient_general(skewed, snap_of(skewed, [1, 2, 3, 4]))


def test_lsq_three_nodes_plane():
    layout = NodeLayout.from_points([(0, 0), (4, 1), (1, 3)])
    g = gradient_lsq(layout, linear_snap(layout, 2.0, -1.0, 5.0))
    assert g.g_x == pytest.approx(2.0, abs=1e-12) and g.g_y == pytest.approx(-1.0, abs=1e-12)
    g = gradient_lsq(layout, snap_of(layout, [-7] * 3))
    assert g.g_x == pytest.approx(0.0, abs=1e-12) and g.g_y == pytest.approx(0.0, abs=1e-12)


def _normal_equations_oracle(pts, s):
    """Solve [x y 1]^T [x y 1] beta = [x y 1]^T s by Gaussian elimination with partial pivoting."""
    rows = [[p[0], p[1], 1.0] for p in pts]
    a = [[sum(r[i] * r[j] for r in rows) for j in range(3)] + [sum(r[i] * v for r, v in zip(rows, s))]
         for i in range(3)]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        for r in range(col + 1, 3):
            f = a[r][col] / a[col][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    beta = [0.0] * 3
    for i in (2, 1, 0):
        beta[i] = (a[i][3] - sum(a[i][j] * beta[j] for j in range(i + 1, 3))) / a[i][i]
    return beta


@given(st.lists(reading, min_size=4, max_size=4))
def test_lsq_matches_normal_equation_oracle(values):
    layout = NodeLayout.from_points([(0, 0), (0, 6), (6, 6), (6, 0)])
    g = gradient_lsq(layout, snap_of(layout, values))
    a, b, _ = _normal_equations_oracle(layout.positions.tolist(), values)
    assert g.g_x == pytest.approx(a, abs=1e-9) and g.g_y == pytest.approx(b, abs=1e-9)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-50, 50))
def test_lsq_reproduces_rect4_on_linear_fields(a, b, c):
    layout = NodeLayout.from_points([(0, 0), (0, 6), (6, 6), (6, 0)])
    snap = linear_snap(layout, a, b, c)
    r, q = gradient_rect4(layout, snap), gradient_lsq(layout, snap)
    assert q.g_x == pytest.approx(r.g_x, abs=1e-9) and q.g_y == pytest.approx(r.g_y, abs=1e-9)


def test_lsq_and_rect4_agree_near_centroid(layout6, clean):
    rng = np.random.default_rng(0)
    for _ in range(200):
        r, t = 1.5 * math.sqrt(rng.random()), rng.uniform(-math.pi, math.pi)
        p = Position(3 + r * math.cos(t), 3 + r * math.sin(t))
        snap = sample_window(clean, layout6, p, 1, rng)
        a = cdoa_from_gradient(gradient_rect4(layout6, snap))
        b = cdoa_from_gradient(gradient_lsq(layout6, snap))
        assert abs(angular_error(a, b)) <= 0.1 * math.pi


def test_lsq_rejects_collinear_nodes():
    layout = NodeLayout.from_points([(0, 0), (1, 1), (2, 2), (0, 1)])
    collinear = layout.positions.copy()
    collinear[3] = (3, 3)
    with pytest.raises(RankDeficiencyError):
        gradient_lsq(_CollinearLayout(collinear), snap_of(layout, [1, 2, 3, 4]))


class _CollinearLayout:
    """Bare stand-in: NodeLayout itself refuses zero-extent layouts but not diagonal lines."""

    def __init__(self, pts):
        self.positions = pts
        self.ids = [f"N{k + 1}" for k in range(len(pts))]


@pytest.mark.parametrize("g,expected", [((1, 0), 0.0), ((0, 1), math.pi / 2), ((-1, -1), -3 * math.pi / 4)])
def test_cdoa_from_gradient(g, expected):
    assert cdoa_from_gradient(RssiGradient(*g)) == pytest.approx(expected)


def test_cdoa_zero_gradient_raises():
    with pytest.raises(NoSignalDirectionError):
        cdoa_from_gradient(RssiGradient(0.0, 0.0))


def test_compute_gradient_dispatch(layout6):
    snap = linear_snap(layout6, 1.0, 1.0)
    for m in ("auto", "rect4", "general", "lsq"):
        g = compute_gradient(layout6, snap, m)
        assert g.g_x == pytest.approx(1.0)
    with pytest.raises(ValueError):
        compute_gradient(layout6, snap, "nope")


def test_estimate_first_measurement_unsmoothed(layout6, clean):
    sm = CdoaSmoother(0.7)
    m = estimate_cdoa(layout6, sample_window(clean, layout6, Position(4, 2), 1, np.random.default_rng(0)), sm)
    assert m.angle == m.raw_angle


def test_estimate_due_east(layout6, clean):
    m = estimate_cdoa(layout6, sample_window(clean, layout6, Position(4, 3), 1, np.random.default_rng(0)),
                      CdoaSmoother())
    assert abs(m.raw_angle) < 0.05


def test_estimate_identical_snapshots_fixed_point(layout6):
    snap = sample_window(ChannelModel(noise_std=3), layout6, Position(1, 5), 1, np.random.default_rng(4))
    sm = CdoaSmoother(0.3)
    estimate_cdoa(layout6, snap, sm)
    m = estimate_cdoa(layout6, snap, sm)
    assert m.angle == pytest.approx(m.raw_angle, abs=1e-12)


def test_estimate_symmetric_snapshot_leaves_smoother(layout6):
    sm = CdoaSmoother(0.5)
    estimate_cdoa(layout6, linear_snap(layout6, 1.0, 0.0), sm)
    before = (sm.angle, sm.sensor.copy())
    with pytest.raises(NoSignalDirectionError):
        estimate_cdoa(layout6, snap_of(layout6, [-60] * 4), sm)
    assert sm.angle == before[0] and np.array_equal(sm.sensor, before[1])


def _bearing_oracle(robot):
    s = [-40 - 30 * math.log10(max(math.dist(robot, c), 0.1)) for c in [(0, 0), (0, 6), (6, 6), (6, 0)]]
    return math.atan2((s[1] - s[0]) + (s[2] - s[3]), (s[2] - s[1]) + (s[3] - s[0]))


def test_bearing_ring_matches_independent_oracle(layout6, clean):
    for deg in range(360):
        t = math.radians(deg)
        robot = (3 + math.cos(t), 3 + math.sin(t))
        m = estimate_cdoa(layout6, sample_window(clean, layout6, Position(*robot), 1, np.random.default_rng(0)),
                          CdoaSmoother())
        assert m.raw_angle == pytest.approx(_bearing_oracle(robot), abs=1e-12)


def test_rotating_robot_rotates_bearing(layout6, clean):
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = rng.uniform(0.2, 5.8, 2)
        a = estimate_cdoa(layout6, sample_window(clean, layout6, Position(x, y), 1, rng), CdoaSmoother())
        # 90 degrees counter-clockwise about (3, 3) maps the square onto itself
        b = estimate_cdoa(layout6, sample_window(clean, layout6, Position(6 - y, x), 1, rng), CdoaSmoother())
        assert abs(angular_error(b.raw_angle, a.raw_angle + math.pi / 2)) < 1e-9


def test_sensor_stencils_are_exact_on_planes(layout6):
    ops = sensor_stencils(layout6)
    vals = np.array([2.0 * x - 3.0 * y + 7 for x, y in layout6.positions])
    g = ops @ vals
    assert np.allclose(g, [[2.0, -3.0]] * 4, atol=1e-12)
    assert np.allclose(ops.sum(axis=2), 0.0, atol=1e-12)


def test_sensor_angles_nan_on_flat_readings(layout6):
    out = sensor_angles(sensor_stencils(layout6), np.full(4, -50.0))
    assert np.isnan(out).all()


def test_smoother_keeps_previous_sensor_bearing_on_nan():
    sm = CdoaSmoother(0.5)
    sm.update(0.1, np.array([0.1, 0.2]))
    _, sensor = sm.update(0.1, np.array([math.nan, 0.2]))
    assert sensor[0] == pytest.approx(0.1)
