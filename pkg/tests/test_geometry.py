import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynlab.errors import GeometryError
from dynlab.geometry import (
    JordanDisk,
    fill_union,
    modulus_lower_bound,
    pseudo_hyperbolic_ball,
    shape_stats,
    winding_number,
)


def ellipse(a, b, m=512):
    t = np.arange(m) / m
    return JordanDisk(a * np.cos(2 * np.pi * t) + 1j * b * np.sin(2 * np.pi * t), 0)


def test_shape_unit_circle_center():
    s = shape_stats(JordanDisk.circle(0, 1), 0)
    assert s.shape == pytest.approx(1.0, abs=1e-4)


def test_shape_offset_center():
    s = shape_stats(JordanDisk.circle(0, 1, m=4096), 0.5)
    assert s.inner_radius == pytest.approx(0.5, abs=1e-5)
    assert s.outer_radius == pytest.approx(1.5, abs=1e-5)
    assert s.shape == pytest.approx(3.0, abs=1e-4)


def test_shape_ellipse():
    s = shape_stats(ellipse(2, 1, m=4096), 0)
    assert s.shape == pytest.approx(2.0, abs=1e-4)


def test_shape_outside_raises():
    with pytest.raises(GeometryError):
        shape_stats(JordanDisk.circle(0, 1), 2.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_shape_scaling_covariance(s):
    disk = ellipse(2, 1, m=256)
    scaled = JordanDisk(disk.boundary * s, 0)
    z = 0.5 + 0.2j
    a = shape_stats(disk, z)
    b = shape_stats(scaled, z * s)
    assert b.shape == pytest.approx(a.shape, rel=1e-12)


def test_modulus_round_annulus_exact():
    outer = JordanDisk.circle(0, math.exp(2 * math.pi), m=8192)
    inner = JordanDisk.circle(0, 1, m=512)
    mb = modulus_lower_bound(outer, inner)
    assert mb.lower == pytest.approx(1.0, abs=1e-6)
    assert mb.method == "round-annulus"


def test_modulus_never_exceeds_round_truth():
    # concentric round annuli: bound equals (1/2pi) log(R/r) up to sampling
    for R, r in [(2.0, 0.5), (10.0, 1.0), (1.5, 1.2)]:
        outer = JordanDisk.circle(0, R, m=8192)
        inner = JordanDisk.circle(0, r, m=8192)
        truth = math.log(R / r) / (2 * math.pi)
        mb = modulus_lower_bound(outer, inner)
        assert mb.lower <= truth + 1e-9
        assert mb.lower == pytest.approx(truth, abs=1e-5)


def test_modulus_degenerate():
    outer = JordanDisk.circle(0, 1, m=512)
    inner = JordanDisk.circle(0, 1 - 1e-9, m=512)
    # boundaries at distance 1e-9: either rejected as non-contained or ~0
    try:
        mb = modulus_lower_bound(outer, inner)
        assert mb.lower == pytest.approx(0.0, abs=1e-6)
    except GeometryError:
        pass


def test_modulus_square_outer():
    t = np.linspace(0, 4, 512, endpoint=False)
    side = np.where(t < 1, 2 - 4j * (t - 0.5),
                    np.where(t < 2, -2j + (1.5 - t) * 4,
                             np.where(t < 3, -2 + 4j * (t - 2.5),
                                      2j + (t - 3.5) * 4)))
    square = JordanDisk(side.astype(complex), 0)
    inner = JordanDisk.circle(0, 0.5, m=1024)
    mb = modulus_lower_bound(square, inner)
    assert mb.lower >= math.log(2 / 0.5) / (2 * math.pi) - 1e-6


def test_modulus_containment_violated():
    with pytest.raises(GeometryError):
        modulus_lower_bound(JordanDisk.circle(0, 1), JordanDisk.circle(3, 1))


def test_fill_union_identity():
    core = JordanDisk.circle(0, 1)
    assert fill_union(core, []) is core


def test_fill_union_peanut():
    core = JordanDisk.circle(0, 1, m=1024)
    other = JordanDisk.circle(1.5, 1, m=1024)
    peanut = fill_union(core, [other])
    assert peanut.diameter == pytest.approx(3.5, abs=1e-3)
    assert peanut.contains(0) and peanut.contains(1.5)


def test_fill_union_fills_hole():
    # ring of 8 overlapping disks around an uncovered hole at the origin
    ring = [JordanDisk.circle(2 * np.exp(2j * np.pi * k / 8), 1.0, m=256)
            for k in range(8)]
    filled = fill_union(ring[0], ring[1:])
    # brute-force grid: every point of the hole must be inside the filling
    for z in (0, 0.3 + 0.2j, -0.4j, 0.9):
        assert filled.contains(complex(z))
    assert winding_number(filled.boundary, 0) == 1


def test_fill_union_idempotent():
    core = JordanDisk.circle(0, 1, m=512)
    other = JordanDisk.circle(1.2, 0.8, m=512)
    once = fill_union(core, [other])
    again = fill_union(once, [])
    assert np.allclose(once.boundary, again.boundary, atol=1e-9)


def test_fill_union_disjoint_raises():
    with pytest.raises(GeometryError):
        fill_union(JordanDisk.circle(0, 1), [JordanDisk.circle(5, 1)])


def test_hyperbolic_ball_unit_disk():
    amb = JordanDisk.circle(0, 1, m=2048)
    ball = pseudo_hyperbolic_ball(amb, 0, 1.0)
    r = np.abs(ball.boundary).max()
    assert r == pytest.approx(math.tanh(0.5), abs=1e-3)


def test_hyperbolic_ball_shrinks_with_lambda():
    amb = JordanDisk.circle(0, 1, m=1024)
    r_small = np.abs(pseudo_hyperbolic_ball(amb, 0, 1e-3).boundary).max()
    assert r_small < 1e-3


def test_hyperbolic_ball_scaling():
    amb = JordanDisk.circle(0, 2, m=2048)
    ball = pseudo_hyperbolic_ball(amb, 0, 1.0)
    assert np.abs(ball.boundary).max() == pytest.approx(2 * math.tanh(0.5),
                                                        abs=2e-3)


def test_diameter_invariant():
    disk = ellipse(2, 1)
    d = disk.boundary
    assert disk.diameter >= np.abs(d[:, None] - d[None, :]).max() - 1e-12
