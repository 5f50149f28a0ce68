"""Disc-caps of a convex disc K and the arc-triangle functional.

A disc-cap is ``K \\ B°(c, r)``, the part of K outside an open radius-r disc.
The cap with vertex ``x_u = boundary(theta)`` and height ``t`` uses the center
``x_u - (r + t) u``. Cap areas are exact up to quadrature: the two boundary
crossings are located by bracketing and root finding, the region between the
boundary arc and its chord is integrated with Green's theorem, and the
circular segment between chord and circle is subtracted in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import (ChordTooLong, DegenerateTriangle, HeightOutOfRange, IntersectionNotFound,
                     PointsOutsideModel)
from .geom import EPS_GEO, Point, as_point, circle_centers_through, segment_area
from .quadrature import gauss_legendre
from .rng import Rng
from .shapes import GRID, TWO_PI, ConvexDiscModel

ROOT_XTOL = 1e-13
# grid extrema this close to zero are refined in case they hide two crossings
_REFINE_BAND = 1e-3
_H0 = 1e-9


# boundary/circle crossings ---------------------------------------------

def _gap(model: ConvexDiscModel, center: np.ndarray, r: float):
    """g(phi) = |boundary(phi) - center| - r; positive outside the disc."""
    def g(phi):
        xy = model.boundary(phi)
        return np.hypot(xy[..., 0] - center[0], xy[..., 1] - center[1]) - r
    return g


def _root(f, a: float, b: float) -> float:
    return optimize.brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)


def _march(f, theta: float, direction: float) -> float | None:
    """First crossing of f from positive to non-positive walking away from
    ``theta`` with geometrically growing steps; None if none within pi."""
    prev = 0.0
    h = _H0
    while True:
        h = min(h, math.pi)
        if f(theta + direction * h) <= 0.0:
            lo, hi = theta + direction * prev, theta + direction * h
            return _root(f, min(lo, hi), max(lo, hi))
        if h >= math.pi:
            return None
        prev, h = h, 2.0 * h


def _all_roots(f, start: float = 0.0) -> list[float]:
    """All sign changes of a 2*pi-periodic f on [start, start + 2*pi).

    A grid scan finds ordinary crossings; local extrema of the grid values
    are refined so that a pair of crossings inside one grid cell is found too.
    """
    phi = start + np.linspace(0.0, TWO_PI, GRID + 1)
    val = f(phi)
    roots = []
    h = TWO_PI / GRID
    for i in range(GRID):
        if (val[i] > 0) != (val[i + 1] > 0):
            roots.append(_root(f, phi[i], phi[i + 1]))
    cur = val[:-1]
    prev, nxt = np.roll(cur, 1), np.roll(cur, -1)
    for sign in (1.0, -1.0):
        # sign=1: local maxima that stay <= 0 on the grid but may poke above 0
        # inside a cell; sign=-1: local minima > 0 that may dip below it
        s_cur = sign * cur
        near = (s_cur >= sign * prev) & (s_cur >= sign * nxt) & (s_cur <= 0.0) & (s_cur > -_REFINE_BAND)
        if sign < 0:
            near &= cur > 0.0
        for i in np.flatnonzero(near):
            a, b = phi[i] - h, phi[i] + h
            res = optimize.minimize_scalar(lambda q: -sign * float(f(q)), bounds=(a, b),
                                           method="bounded", options={"xatol": 1e-14})
            peak = float(res.x)
            crossed = float(f(peak)) > 0.0 if sign > 0 else float(f(peak)) <= 0.0
            if crossed:
                for lo, hi in ((a, peak), (peak, b)):
                    if (f(lo) > 0) != (f(hi) > 0):
                        roots.append(_root(f, lo, hi))
    return sorted(float((x - start) % TWO_PI + start) for x in roots)


def _region_area(model: ConvexDiscModel, a: float, b: float) -> float:
    """Area between the boundary arc a -> b (counterclockwise) and its chord."""
    pa, pb = model.boundary(a), model.boundary(b)
    m = 0.5 * (pa + pb)

    def integrand(phi):
        x, y, dx, dy, _, _ = model.derivatives(phi)
        return 0.5 * ((x - m[0]) * dy - (y - m[1]) * dx)

    return gauss_legendre(integrand, a, b)


def _outside_piece(model: ConvexDiscModel, center: np.ndarray, r: float, a: float, b: float):
    """Area and circle-arc length of the cap piece whose boundary arc runs
    a -> b outside the disc and whose circle arc runs back b -> a clockwise."""
    pa, pb = model.boundary(a), model.boundary(b)
    chord = float(np.hypot(*(pb - pa)))
    psi_a = math.atan2(pa[1] - center[1], pa[0] - center[0])
    psi_b = math.atan2(pb[1] - center[1], pb[0] - center[0])
    sweep = (psi_b - psi_a) % TWO_PI
    minor = segment_area(min(chord, 2.0 * r), r)
    if sweep <= math.pi:
        seg = minor
        angle = 2.0 * math.asin(min(chord / (2.0 * r), 1.0))
    else:
        seg = math.pi * r * r - minor
        angle = TWO_PI - 2.0 * math.asin(min(chord / (2.0 * r), 1.0))
    return _region_area(model, a, b) - seg, r * angle


def cap_area_for_disc(model: ConvexDiscModel, center, r: float) -> float:
    """Area of K minus the open radius-r disc about ``center``."""
    c = np.asarray(tuple(center), dtype=float)
    f = _gap(model, c, r)
    roots = _all_roots(f)
    if not roots:
        probe = float(f(0.0))
        if probe <= 0.0:
            return 0.0
        # the circle misses the boundary: the disc is either inside K or disjoint
        return model.area - math.pi * r * r if model.contains(c) else model.area
    total = 0.0
    k = len(roots)
    for i in range(k):
        a = roots[i]
        b = roots[(i + 1) % k] + (TWO_PI if i + 1 == k else 0.0)
        if f(0.5 * (a + b)) > 0.0:
            total += _outside_piece(model, c, r, a, b)[0]
    return max(total, 0.0)


# caps by vertex and height ----------------------------------------------

@lru_cache(maxsize=4096)
def t_star(model: ConvexDiscModel, theta: float, r: float) -> float:
    """Largest height for which the closed disc still meets K, by bisection."""
    x = model.boundary(theta)
    u = model.normal(theta)
    grid = np.linspace(0.0, TWO_PI, GRID, endpoint=False)
    bxy = model.boundary(grid)

    def meets(t):
        c = x - (r + t) * u
        if model.contains(c):
            return True
        d = np.hypot(bxy[:, 0] - c[0], bxy[:, 1] - c[1])
        i = int(np.argmin(d))
        res = optimize.minimize_scalar(lambda s: float(np.hypot(*(model.boundary(s) - c))),
                                       bounds=(grid[i] - TWO_PI / GRID, grid[i] + TWO_PI / GRID),
                                       method="bounded", options={"xatol": 1e-13})
        return min(d[i], res.fun) <= r

    xmin, ymin, xmax, ymax = model.bbox
    lo, hi = 0.0, 1.01 * math.hypot(xmax - xmin, ymax - ymin) + 1e-9
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if meets(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class DiscCap:
    model: ConvexDiscModel
    theta: float
    t: float
    r: float
    vertex: Point
    normal: tuple[float, float]
    center: Point
    area: float
    arc_length: float
    t_star: float
    phi_minus: float
    phi_plus: float

    def outer_depth(self) -> float:
        """Depth along -u of the deepest point of the cap (the outer
        half-plane cap C+ has this height)."""
        phi = np.linspace(self.phi_minus, self.phi_plus, 257)
        xy = self.model.boundary(phi)
        u = np.asarray(self.normal)
        return float(np.max((np.asarray(tuple(self.vertex)) - xy) @ u))

    def sandwich_ratio(self) -> float:
        """Height of the largest half-plane cap inside the disc-cap (which is
        ``t``) over the height of the smallest one containing it."""
        if self.t == 0.0:
            return 1.0
        return self.t / self.outer_depth()


def cap_from_normal_height(model: ConvexDiscModel, theta: float, t: float, r: float) -> DiscCap:
    ts = t_star(model, float(theta), float(r))
    if t < 0.0 or t > ts:
        raise HeightOutOfRange(f"height {t!r} outside [0, {ts!r}]")
    x = model.boundary(theta)
    u = model.normal(theta)
    c = x - (r + t) * u
    kw = dict(model=model, theta=float(theta), t=float(t), r=float(r), vertex=as_point(x),
              normal=(float(u[0]), float(u[1])), center=as_point(c), t_star=ts)
    if t == 0.0:
        return DiscCap(area=0.0, arc_length=0.0, phi_minus=float(theta), phi_plus=float(theta), **kw)
    f = _gap(model, c, r)
    lo, hi = _march(f, theta, -1.0), _march(f, theta, +1.0)
    if lo is None or hi is None:
        roots = _all_roots(f, start=theta - math.pi)
        left = [p for p in roots if p < theta]
        right = [p for p in roots if p > theta]
        if not left or not right:
            raise IntersectionNotFound(f"circle does not cross the boundary twice around theta={theta!r}")
        lo, hi = left[-1], right[0]
    area, length = _outside_piece(model, c, r, lo, hi)
    return DiscCap(area=max(area, 0.0), arc_length=length, phi_minus=lo, phi_plus=hi, **kw)


@dataclass(frozen=True)
class CapPair:
    minus_area: float
    plus_area: float


def caps_through_pair(model: ConvexDiscModel, x, y, r: float) -> CapPair:
    """Areas of the two disc-caps cut off by the radius-r circles through x, y."""
    x, y = as_point(x), as_point(y)
    if not (model.contains(x) and model.contains(y)):
        raise PointsOutsideModel("both points must lie in K")
    left, right = circle_centers_through(x, y, r)
    a1, a2 = cap_area_for_disc(model, left, r), cap_area_for_disc(model, right, r)
    return CapPair(min(a1, a2), max(a1, a2))


# triangles inside a Euclidean cap -----------------------------------------

SHRINK = 1.0 / 20.0


@dataclass(frozen=True)
class CapTriangles:
    """``big`` is [w0, w1, w2]; ``small[j]`` is it shrunk by 1/20 toward w_j."""

    big: np.ndarray
    small: tuple[np.ndarray, np.ndarray, np.ndarray]

    @staticmethod
    def area_of(tri: np.ndarray) -> float:
        (ax, ay), (bx, by), (cx, cy) = tri
        return 0.5 * abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))

    @property
    def area(self) -> float:
        return self.area_of(self.big)


def cap_triangles(model: ConvexDiscModel, theta: float, t: float) -> CapTriangles:
    if t <= 0.0:
        raise HeightOutOfRange("cap height must be positive")
    x = model.boundary(theta)
    u = model.normal(theta)

    def f(phi):
        return t - float((x - model.boundary(phi)) @ u)

    lo, hi = _march(f, theta, -1.0), _march(f, theta, +1.0)
    if lo is None or hi is None:
        raise HeightOutOfRange(f"line at depth {t!r} does not cut the boundary twice")
    w1, w2 = model.boundary(lo), model.boundary(hi)
    big = np.array([x, w1, w2])
    small = tuple(big[j] + SHRINK * (big - big[j]) for j in range(3))
    return CapTriangles(big, small)


# arc triangle -------------------------------------------------------------

def arc_triangle_areas(z0, z1, z2, r: float) -> np.ndarray:
    """Vectorised over rows of ``z0``; see :func:`arc_triangle_area`."""
    z0 = np.atleast_2d(np.asarray(z0, dtype=float))
    z1 = np.asarray(tuple(z1), dtype=float)
    z2 = np.asarray(tuple(z2), dtype=float)
    a, b = z1 - z0, z2 - z0
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    scale = np.maximum(np.einsum("ij,ij->i", a, a), np.einsum("ij,ij->i", b, b))
    if np.any(np.abs(cross) <= 1e-14 * scale):
        raise DegenerateTriangle("arc triangle vertices are collinear")
    s01 = np.hypot(a[:, 0], a[:, 1])
    s02 = np.hypot(b[:, 0], b[:, 1])
    s12 = float(np.hypot(*(z2 - z1)))
    if max(float(s01.max()), float(s02.max()), s12) > 2.0 * r * (1.0 + EPS_GEO):
        raise ChordTooLong("arc triangle side longer than 2r")
    return 0.5 * np.abs(cross) + segment_area(s01, r) + segment_area(s02, r) - segment_area(s12, r)


def arc_triangle_area(z0, z1, z2, r: float) -> float:
    """Area of the non-convex arc triangle: z0 joined to z1 and z2 by radius-r
    arcs bulging outward, z1 joined to z2 by a radius-r arc bulging inward."""
    return float(arc_triangle_areas([tuple(z0)], z1, z2, r)[0])


def uniform_in_triangle(tri: np.ndarray, gen: np.random.Generator, m: int) -> np.ndarray:
    """``m`` uniform points in a triangle by rejection from its parallelogram."""
    out = np.empty((m, 2))
    filled = 0
    while filled < m:
        uv = gen.random((2 * (m - filled) + 16, 2))
        uv = uv[uv.sum(axis=1) <= 1.0][: m - filled]
        out[filled:filled + len(uv)] = tri[0] + uv[:, :1] * (tri[1] - tri[0]) + uv[:, 1:] * (tri[2] - tri[0])
        filled += len(uv)
    return out


def variance_se(values: np.ndarray) -> tuple[float, float]:
    """Unbiased sample variance and its distribution-free standard error."""
    m = len(values)
    var = float(np.var(values, ddof=1))
    dev = values - values.mean()
    m4 = float(np.mean(dev**4))
    se2 = (m4 - var * var * (m - 3) / (m - 1)) / m
    return var, math.sqrt(max(se2, 0.0))


def lemma1_variance(model: ConvexDiscModel, theta: float, t: float, samples: int, rng: Rng,
                    r: float = 1.0, *, return_se: bool = False):
    """Sample variance of the arc-triangle area with z0 uniform in the small
    triangle at the vertex and z1, z2 fixed at the centroids of the other two."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    tri = cap_triangles(model, theta, t)
    z1, z2 = tri.small[1].mean(axis=0), tri.small[2].mean(axis=0)
    z0 = uniform_in_triangle(tri.small[0], rng.generator(), samples)
    var, se = variance_se(arc_triangle_areas(z0, z1, z2, r))
    return (var, se) if return_se else var
