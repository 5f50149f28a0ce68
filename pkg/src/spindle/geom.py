"""Planar primitives: points, radius-r circles through point pairs, circular
segments and the area of disc-polygons.

Tolerance policy: one relative tolerance ``EPS_GEO`` scaled by the radius of
the circle involved. A point within ``EPS_GEO * r`` of a circle counts as on
the circle; a chord up to ``2 r (1 + EPS_GEO)`` is still admissible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ChordTooLong, DegenerateChord, InvalidPolygon, OutOfRange

EPS_GEO = 1e-9

# below this central angle the segment area uses a Taylor series
_SERIES_THETA = 0.05


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y

    def __sub__(self, other: "Point") -> tuple[float, float]:
        return (self.x - other.x, self.y - other.y)


class Side(enum.Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on_boundary"
    OUTSIDE = "outside"


def as_point(p) -> Point:
    if isinstance(p, Point):
        return p
    x, y = p
    return Point(float(x), float(y))


def as_array(points) -> np.ndarray:
    """Coerce points to a finite float array of shape (n, 2)."""
    arr = np.asarray([tuple(p) for p in points] if not isinstance(points, np.ndarray) else points,
                     dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    return arr


def circle_centers_through(p, q, r: float) -> tuple[Point, Point]:
    """Centers of the two radius-``r`` circles through ``p`` and ``q``.

    Returns ``(left, right)`` relative to the directed chord p -> q; the left
    center makes a positive turn p -> q -> center. For a chord of length 2r
    both centers are the midpoint.
    """
    p, q = as_point(p), as_point(q)
    dx, dy = q.x - p.x, q.y - p.y
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise DegenerateChord(f"coincident chord endpoints {p}")
    if d > 2.0 * r * (1.0 + EPS_GEO):
        raise ChordTooLong(f"chord {d!r} exceeds diameter {2.0 * r!r}")
    h = d / 2.0
    off = math.sqrt(max(r * r - h * h, 0.0))
    mx, my = p.x + dx / 2.0, p.y + dy / 2.0
    nx, ny = -dy / d, dx / d
    return Point(mx + off * nx, my + off * ny), Point(mx - off * nx, my - off * ny)


def left_centers(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    """Vectorised left centers for directed chords ``a[i] -> b[i]``.

    Chords longer than the diameter (beyond tolerance) yield NaN rows.
    """
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    half = length / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        off = np.sqrt(np.maximum(r * r - half * half, 0.0)) / length
    off = np.where(length > 2.0 * r * (1.0 + EPS_GEO), np.nan, off)
    mid = a + d / 2.0
    return np.column_stack((mid[:, 0] - off * d[:, 1], mid[:, 1] + off * d[:, 0]))


def classify_in_disc(center, r: float, x) -> Side:
    if r <= 0:
        raise ValueError("radius must be positive")
    c, x = as_point(center), as_point(x)
    dist = math.hypot(x.x - c.x, x.y - c.y)
    band = EPS_GEO * r
    if dist < r - band:
        return Side.INSIDE
    if dist > r + band:
        return Side.OUTSIDE
    return Side.ON_BOUNDARY


def _theta_minus_sin(theta):
    theta = np.asarray(theta, dtype=float)
    t2 = theta * theta
    series = theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)))
    return np.where(theta < _SERIES_THETA, series, theta - np.sin(theta))


def segment_area(chord, r: float):
    """Area of the minor circular segment cut from a radius-``r`` circle by a
    chord of the given length. Accepts scalars or arrays."""
    c = np.asarray(chord, dtype=float)
    if np.any(c < 0) or np.any(c > 2.0 * r * (1.0 + EPS_GEO)):
        raise OutOfRange(f"chord must lie in [0, 2r] for r={r!r}")
    s = np.minimum(c / (2.0 * r), 1.0)
    theta = 2.0 * np.arcsin(s)
    area = 0.5 * r * r * _theta_minus_sin(theta)
    return float(area) if area.ndim == 0 else area


def shoelace(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True, slots=True)
class ArcEdge:
    """Directed edge ``a -> b`` along a radius-``radius`` arc bulging to the
    right of the chord; ``center`` is on the left (inner) side."""

    a: Point
    b: Point
    center: Point
    radius: float

    @property
    def chord(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


@dataclass(frozen=True)
class DiscPolygon:
    """Counterclockwise disc-polygon: vertices joined by outward radius-r arcs.

    ``vertices`` is an (f0, 2) array. One vertex is a point, two vertices a
    lens, three or more a proper disc-polygon with one arc per side.
    """

    vertices: np.ndarray
    radius: float
    _centers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = as_array(self.vertices).copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.radius <= 0:
            raise InvalidPolygon("radius must be positive")
        if len(v) != len({(float(x), float(y)) for x, y in v}):
            raise InvalidPolygon("duplicate vertices")
        if len(v) >= 2:
            nxt = np.roll(v, -1, axis=0)
            centers = left_centers(v, nxt, self.radius)
            if np.any(np.isnan(centers)):
                raise InvalidPolygon("an edge chord exceeds the diameter 2r")
        else:
            centers = np.empty((0, 2))
        centers.setflags(write=False)
        object.__setattr__(self, "_centers", centers)

    @property
    def f0(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self._centers)

    def edge_centers(self) -> np.ndarray:
        return self._centers

    @property
    def edges(self) -> list[ArcEdge]:
        v = self.vertices
        k = len(v)
        return [
            ArcEdge(as_point(v[i]), as_point(v[(i + 1) % k]), as_point(self._centers[i]), self.radius)
            for i in range(len(self._centers))
        ]

    def points(self) -> list[Point]:
        return [as_point(p) for p in self.vertices]

    def vertex_set(self) -> frozenset[tuple[float, float]]:
        return frozenset((float(x), float(y)) for x, y in self.vertices)

    def max_excess(self, points: np.ndarray | None = None) -> float:
        """Largest ``(|p - c| - r) / r`` over the given points (default: the
        vertices) and all edge discs. Non-positive up to ``EPS_GEO`` means the
        spindle-convexity certificate holds."""
        pts = self.vertices if points is None else as_array(points)
        if len(self._centers) == 0 or len(pts) == 0:
            return -math.inf
        return disc_excess(pts, self._centers, self.radius)

    def is_certified(self, points: np.ndarray | None = None) -> bool:
        return self.max_excess(points) <= EPS_GEO


def disc_excess(points: np.ndarray, centers: np.ndarray, r: float, chunk: int = 1 << 14) -> float:
    """max over points p and centers c of (|p - c| - r) / r."""
    worst = -math.inf
    c2 = np.einsum("ij,ij->i", centers, centers)
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        p2 = np.einsum("ij,ij->i", p, p)
        d2 = p2[:, None] - 2.0 * (p @ centers.T) + c2[None, :]
        worst = max(worst, float(d2.max()))
    return (math.sqrt(max(worst, 0.0)) - r) / r


def certificate_excess(points: np.ndarray, centers: np.ndarray, r: float, cells: int = 48) -> float:
    """Certify that every point lies in every disc of radius ``r`` about ``centers``.

    Points are binned on a ``cells`` x ``cells`` grid over their bounding box.
    A cell whose four corners lie in a disc lies in that disc (discs are
    convex), so its points need no test against it. Each point is tested
    individually only against the discs its cell could not be certified for.
    Returns the largest relative excess ``(|p - c| - r) / r`` over those
    individual tests, or ``-inf`` when none were needed. The result is
    ``<= EPS_GEO`` exactly when :func:`disc_excess` is.
    """
    if len(points) == 0 or len(centers) == 0:
        return -math.inf
    if len(points) * len(centers) <= 1 << 16:
        return disc_excess(points, centers, r)
    x, y = points[:, 0], points[:, 1]
    x0, y0 = float(x.min()), float(y.min())
    wx = (float(x.max()) - x0) / cells or 1.0
    wy = (float(y.max()) - y0) / cells or 1.0
    gx = x0 + wx * np.arange(cells + 1)
    gy = y0 + wy * np.arange(cells + 1)
    # rounding margin so that a node reported inside really is inside
    rr = (r * (1.0 - 1e-12)) ** 2
    dx2 = (gx[:, None] - centers[None, :, 0]) ** 2
    dy2 = (gy[:, None] - centers[None, :, 1]) ** 2
    node_in = dx2[:, None, :] + dy2[None, :, :] < rr          # (nx, ny, centers)
    cell_in = node_in[:-1, :-1] & node_in[1:, :-1] & node_in[:-1, 1:] & node_in[1:, 1:]

    ix = np.minimum(((x - x0) / wx).astype(np.intp), cells - 1)
    iy = np.minimum(((y - y0) / wy).astype(np.intp), cells - 1)
    cell_id = ix * cells + iy
    cell_in = cell_in.reshape(cells * cells, -1)
    todo = np.flatnonzero(~cell_in.all(axis=1)[cell_id])
    if len(todo) == 0:
        return -math.inf
    order = todo[np.argsort(cell_id[todo], kind="stable")]
    sorted_cells = cell_id[order]
    first = np.searchsorted(sorted_cells, np.arange(cells * cells), side="left")
    count = np.searchsorted(sorted_cells, np.arange(cells * cells), side="right") - first
    bad_cell, bad_center = np.nonzero(~cell_in & (count > 0)[:, None])
    reps = count[bad_cell]
    # ragged gather: every point of each bad cell against that cell's bad disc
    offsets = np.repeat(first[bad_cell] - np.cumsum(reps) + reps, reps) + np.arange(int(reps.sum()))
    pts = points[order[offsets]]
    ctr = centers[np.repeat(bad_center, reps)]
    d2 = np.einsum("ij,ij->i", pts - ctr, pts - ctr)
    return (math.sqrt(float(d2.max())) - r) / r


def arc_polygon_area(poly: DiscPolygon) -> float:
    """Shoelace area of the vertices plus one minor segment per edge."""
    v = poly.vertices
    if len(v) < 2:
        return 0.0
    chords = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
    try:
        segs = segment_area(chords, poly.radius)
    except OutOfRange as exc:
        raise InvalidPolygon(str(exc)) from exc
    return shoelace(v) + float(np.sum(segs))


def sort_ccw(points: Sequence) -> np.ndarray:
    """Order points in convex position counterclockwise about their centroid."""
    v = as_array(points)
    if len(v) < 2:
        return v
    c = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
    return v[np.argsort(ang, kind="stable")]
