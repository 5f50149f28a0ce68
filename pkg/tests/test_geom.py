import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spindle.errors import ChordTooLong, DegenerateChord, InvalidPolygon, OutOfRange
from spindle.geom import (EPS_GEO, DiscPolygon, Point, Side, arc_polygon_area, certificate_excess,
                          circle_centers_through, classify_in_disc, disc_excess, segment_area,
                          shoelace)

coord = st.floats(-5, 5, allow_nan=False)


def mc_fraction(pred, box, m, seed):
    """Fraction of uniform draws in ``box`` satisfying ``pred``, scaled by box area."""
    (x0, x1), (y0, y1) = box
    gen = np.random.default_rng(seed)
    pts = np.column_stack([gen.uniform(x0, x1, m), gen.uniform(y0, y1, m)])
    return pred(pts).mean() * (x1 - x0) * (y1 - y0)


def in_disc(pts, c, r):
    return np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= r


# centers -------------------------------------------------------------------

def test_diameter_chord_centers_coincide():
    left, right = circle_centers_through((-1, 0), (1, 0), 1.0)
    assert tuple(left) == pytest.approx((0, 0), abs=1e-12)
    assert tuple(right) == pytest.approx((0, 0), abs=1e-12)


def test_unit_chord_centers():
    left, right = circle_centers_through((0, 0), (1, 0), 1.0)
    assert tuple(left) == pytest.approx((0.5, math.sqrt(3) / 2), abs=1e-12)
    assert tuple(right) == pytest.approx((0.5, -math.sqrt(3) / 2), abs=1e-12)


def test_center_residuals():
    p, q = (0.0, 0.0), (0.3, 0.4)
    for c in circle_centers_through(p, q, 2.0):
        assert math.dist(c, p) == pytest.approx(2.0, abs=1e-12)
        assert math.dist(c, q) == pytest.approx(2.0, abs=1e-12)


def test_center_errors():
    with pytest.raises(DegenerateChord):
        circle_centers_through((1, 1), (1, 1), 1.0)
    with pytest.raises(ChordTooLong):
        circle_centers_through((0, 0), (3, 0), 1.0)


@given(coord, coord, coord, coord, st.floats(0.1, 10))
def test_centers_swap_symmetry(px, py, qx, qy, r):
    d = math.hypot(qx - px, qy - py)
    if d < 1e-6 or d > 2 * r:
        return
    l1, r1 = circle_centers_through((px, py), (qx, qy), r)
    l2, r2 = circle_centers_through((qx, qy), (px, py), r)
    assert tuple(l1) == pytest.approx(tuple(r2), abs=1e-9)
    assert tuple(r1) == pytest.approx(tuple(l2), abs=1e-9)


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point(math.nan, 0.0)


# classification --------------------------------------------------------------

@pytest.mark.parametrize("x, side", [((0, 0), Side.INSIDE), ((1, 0), Side.ON_BOUNDARY),
                                     ((1.5, 0), Side.OUTSIDE)])
def test_classify(x, side):
    assert classify_in_disc((0, 0), 1.0, x) is side


def test_classify_band_scales_with_r():
    assert classify_in_disc((0, 0), 100.0, (100 + 50 * EPS_GEO, 0)) is Side.ON_BOUNDARY
    assert classify_in_disc((0, 0), 100.0, (100 + 200 * EPS_GEO, 0)) is Side.OUTSIDE


# segments --------------------------------------------------------------------

def test_segment_endpoints():
    assert segment_area(0.0, 1.0) == 0.0
    assert segment_area(2.0, 1.0) == pytest.approx(math.pi / 2, rel=1e-14)


def test_segment_matches_formula_and_sampling():
    th = math.pi / 3
    assert segment_area(1.0, 1.0) == pytest.approx((th - math.sin(th)) / 2, rel=1e-14)
    # chord from (-1/2, c) to (1/2, c) of the unit circle centred at the origin
    c = math.sqrt(3) / 2
    est = mc_fraction(lambda p: in_disc(p, (0, 0), 1) & (p[:, 1] >= c), ((-0.5, 0.5), (c, 1)),
                      2_000_000, 1)
    assert est == pytest.approx(segment_area(1.0, 1.0), rel=5e-3)


def test_segment_small_chord_series_branch():
    # the series branch must agree with a high precision evaluation
    import mpmath as mp
    mp.mp.dps = 50
    for chord in (1e-6, 1e-3, 0.04, 0.06):
        th = 2 * mp.asin(mp.mpf(chord) / 2)
        exact = float((th - mp.sin(th)) / 2)
        assert segment_area(chord, 1.0) == pytest.approx(exact, rel=1e-12)


@given(st.floats(0, 1), st.floats(0.01, 100))
def test_segment_bounds(frac, r):
    a = segment_area(2 * r * frac, r)
    assert 0.0 <= a <= math.pi * r * r / 2 * (1 + 1e-12)


def test_segment_out_of_range():
    with pytest.raises(OutOfRange):
        segment_area(-0.1, 1.0)
    with pytest.raises(OutOfRange):
        segment_area(2.1, 1.0)


def test_segment_vectorised():
    c = np.array([0.0, 1.0, 2.0])
    assert np.allclose(segment_area(c, 1.0), [segment_area(float(v), 1.0) for v in c])


# polygons --------------------------------------------------------------------

def test_single_vertex_polygon():
    poly = DiscPolygon(np.array([[0.3, 0.1]]), 1.0)
    assert poly.f0 == 1 and poly.edge_count == 0
    assert arc_polygon_area(poly) == 0.0


def test_lens_area_against_sampling():
    poly = DiscPolygon(np.array([[-0.5, 0.0], [0.5, 0.0]]), 1.0)
    assert poly.edge_count == 2
    area = arc_polygon_area(poly)
    assert area == pytest.approx(2 * segment_area(1.0, 1.0), rel=1e-14)
    c = math.sqrt(3) / 2
    est = mc_fraction(lambda p: in_disc(p, (0, c), 1) & in_disc(p, (0, -c), 1),
                      ((-0.5, 0.5), (-0.2, 0.2)), 2_000_000, 2)
    assert est == pytest.approx(area, rel=5e-3)


def test_equilateral_triangle_area():
    h = math.sqrt(3) / 2
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    poly = DiscPolygon(verts, 1.0)
    area = arc_polygon_area(poly)
    assert area == pytest.approx(math.sqrt(3) / 4 + 3 * segment_area(1.0, 1.0), rel=1e-14)
    centers = poly.edge_centers()

    def inside(p):
        ok = np.ones(len(p), bool)
        for c in centers:
            ok &= in_disc(p, c, 1.0)
        return ok

    est = mc_fraction(inside, ((-0.1, 1.1), (-0.15, 1.0)), 2_000_000, 3)
    assert est == pytest.approx(area, rel=5e-3)


def test_polygon_rejects_duplicates_and_long_chords():
    with pytest.raises(InvalidPolygon):
        DiscPolygon(np.array([[0.0, 0.0], [0.0, 0.0]]), 1.0)
    with pytest.raises(InvalidPolygon):
        DiscPolygon(np.array([[0.0, 0.0], [3.0, 0.0]]), 1.0)


def regular_polygon(k, rad=0.5, phase=0.1):
    a = phase + 2 * np.pi * np.arange(k) / k
    return np.column_stack([rad * np.cos(a), rad * np.sin(a)])


@given(st.integers(2, 12), st.floats(0, 2 * math.pi), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50)
def test_area_rigid_motion_invariance(k, ang, tx, ty):
    verts = regular_polygon(k)
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    a0 = arc_polygon_area(DiscPolygon(verts, 1.0))
    a1 = arc_polygon_area(DiscPolygon(verts @ rot.T + [tx, ty], 1.0))
    assert a1 == pytest.approx(a0, rel=1e-9)


@given(st.integers(2, 12), st.floats(0.55, 10))
@settings(max_examples=50)
def test_area_exceeds_shoelace(k, r):
    verts = regular_polygon(k)
    poly = DiscPolygon(verts, r)
    assert arc_polygon_area(poly) > shoelace(verts)


def test_shoelace_unit_square():
    assert shoelace(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)) == pytest.approx(1.0)


def test_certificate_matches_exact_excess():
    gen = np.random.default_rng(5)
    for _ in range(20):
        pts = gen.uniform(-1, 1, (20000, 2))
        centers = gen.uniform(-0.3, 0.3, (12, 2))
        r = gen.uniform(1.2, 1.6)
        assert certificate_excess(pts, centers, r) == pytest.approx(disc_excess(pts, centers, r),
                                                                    abs=1e-15)
