import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdoa_loc.core import (InvalidLayoutError, NodeLayout, Position, Workspace, angular_error, ewma_angle,
                           wrap_angle, wrap_angles)

finite = st.floats(-1e6, 1e6, allow_nan=False)
angle = st.floats(-math.pi, math.pi, exclude_min=True)


def test_position_rejects_non_finite():
    with pytest.raises(ValueError):
        Position(math.nan, 0.0)
    with pytest.raises(ValueError):
        Position(0.0, math.inf)


def test_workspace_validation_and_geometry():
    with pytest.raises(ValueError):
        Workspace(1.0, 1.0, 0.0, 2.0)
    ws = Workspace(0.0, 4.0, 1.0, 2.0)
    assert ws.area == 4.0 and ws.center == Position(2.0, 1.5)
    pts = np.array([[-1.0, 5.0], [2.0, 1.5]])
    ws.clip(pts)
    assert pts.tolist() == [[0.0, 2.0], [2.0, 1.5]]


def test_layout_reorders_rectangle_into_sw_nw_ne_se():
    layout = NodeLayout.from_points([(6, 6), (0, 0), (6, 0), (0, 6)], ids=["a", "b", "c", "d"])
    assert layout.ids == ["b", "d", "a", "c"]
    assert layout.permutation == (1, 3, 0, 2)
    assert layout.is_rect4
    assert layout.positions.tolist() == [[0, 0], [0, 6], [6, 6], [6, 0]]


def test_layout_rejects_bad_inputs():
    with pytest.raises(InvalidLayoutError):
        NodeLayout.from_points([(0, 0), (1, 1)])
    with pytest.raises(InvalidLayoutError):
        NodeLayout.from_points([(0, 0), (0, 0), (1, 1)])
    with pytest.raises(InvalidLayoutError):
        NodeLayout.from_points([(0, 0), (1, 0), (2, 0)])  # no y extent


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=3, max_size=8, unique=True))
def test_layout_centroid_matches_brute_force(pts):
    try:
        layout = NodeLayout.from_points(pts)
    except InvalidLayoutError:
        return
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    assert abs(layout.centroid.x - cx) < 1e-12 * max(1, abs(cx)) + 1e-12
    assert abs(layout.centroid.y - cy) < 1e-12 * max(1, abs(cy)) + 1e-12


@pytest.mark.parametrize("theta,expected", [(0.0, 0.0), (3 * math.pi, math.pi), (-3 * math.pi / 2, math.pi / 2),
                                            (-math.pi, math.pi)])
def test_wrap_angle_examples(theta, expected):
    assert wrap_angle(theta) == pytest.approx(expected, abs=1e-12)


def test_wrap_angle_rejects_non_finite():
    with pytest.raises(ValueError):
        wrap_angle(math.inf)


@given(finite)
def test_wrap_angle_range_congruence_idempotence(x):
    w = wrap_angle(x)
    assert -math.pi < w <= math.pi
    k = (x - w) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-6
    assert wrap_angle(w) == w


@given(st.lists(finite, min_size=1, max_size=20))
def test_vector_wrap_agrees_with_scalar(xs):
    got = wrap_angles(np.array(xs))
    for x, g in zip(xs, got):
        # the two routes may land on opposite sides of the seam only at |w| == pi
        assert abs(angular_error(g, wrap_angle(x))) < 1e-9


@pytest.mark.parametrize("a,b,expected", [(0.0, 0.0, 0.0), (math.pi - 0.1, -math.pi + 0.1, -0.2),
                                          (math.pi / 2, 0.0, math.pi / 2)])
def test_angular_error_examples(a, b, expected):
    assert angular_error(a, b) == pytest.approx(expected, abs=1e-12)


@given(angle, angle)
def test_angular_error_antisymmetric(a, b):
    e = angular_error(a, b)
    assert abs(e) <= math.pi
    if abs(abs(e) - math.pi) > 1e-9:
        assert angular_error(b, a) == pytest.approx(-e, abs=1e-12)


def test_ewma_examples():
    assert ewma_angle(0.0, 0.0, 0.5) == 0.0
    assert ewma_angle(0.3, -2.0, 1.0) == -2.0
    assert ewma_angle(0.3, -2.0, 0.0) == 0.3
    assert ewma_angle(math.pi - 0.05, -math.pi + 0.05, 0.5) == pytest.approx(math.pi, abs=1e-12)


def test_ewma_degenerate_antipodal_returns_new_and_flags():
    out, flag = ewma_angle(0.0, math.pi, 0.5, with_flag=True)
    assert flag and out == pytest.approx(math.pi)
    _, flag = ewma_angle(0.0, 1.0, 0.5, with_flag=True)
    assert not flag


def test_ewma_alpha_out_of_range():
    with pytest.raises(ValueError):
        ewma_angle(0.0, 1.0, 1.5)


@given(angle, angle, st.floats(0.05, 0.95), st.floats(-10, 10))
def test_ewma_rotation_equivariant(prev, new, alpha, phi):
    if abs(angular_error(prev, new)) > math.pi - 1e-3:
        return  # near-antipodal inputs are ill-conditioned
    base = ewma_angle(prev, new, alpha)
    rotated = ewma_angle(wrap_angle(prev + phi), wrap_angle(new + phi), alpha)
    assert abs(angular_error(rotated, base + phi)) < 1e-9
