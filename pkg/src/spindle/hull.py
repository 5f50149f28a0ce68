"""r-spindle convex hulls of finite point sets.

``hull_oracle`` follows the definition literally: a pair of points spans an
edge iff one of the two radius-r discs through them contains every point.
``hull_fast`` computes the ordinary convex hull, thins it with a Graham-style
stack scan using the disc predicate, and certifies the result against every
input point before returning it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ChordTooLong, EmptyInput, HullError, NoEnclosingDisc, VertexOutsideModel
from .geom import (EPS_GEO, DiscPolygon, arc_polygon_area, as_array, certificate_excess, disc_excess,
                   left_centers)
from .shapes import ConvexDiscModel

log = logging.getLogger(__name__)

_ORACLE_CHUNK = 4096
# largest input on which a failed certificate falls back to the full oracle
_FULL_ORACLE_LIMIT = 600


@dataclass(frozen=True)
class HullSummary:
    f0: int
    hull_area: float
    missed_area: float
    edge_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def _dedupe(arr: np.ndarray) -> np.ndarray:
    seen, keep = set(), []
    for i, (x, y) in enumerate(arr.tolist()):
        if (x, y) not in seen:
            seen.add((x, y))
            keep.append(i)
    return arr[keep]


def _check_diameter(arr: np.ndarray, r: float) -> None:
    if len(arr) < 2:
        return
    dmax = 0.0
    for start in range(0, len(arr), 256):
        diff = arr[start:start + 256, None, :] - arr[None, :, :]
        dmax = max(dmax, math.sqrt(float(np.max(np.einsum("ijk,ijk->ij", diff, diff)))))
    if dmax > 2.0 * r * (1.0 + EPS_GEO):
        raise ChordTooLong(f"point pair at distance {dmax!r} exceeds 2r = {2.0 * r!r}")


def oracle_edges(points, r: float) -> list[tuple[int, int]]:
    """Directed edges (i, j) of the r-hull, as indices into the deduplicated
    points: the left disc of the chord i -> j contains all points, boundary
    included."""
    arr = _dedupe(as_array(points))
    return _oracle_edges(arr, r)


def _oracle_edges(arr: np.ndarray, r: float) -> list[tuple[int, int]]:
    n = len(arr)
    ii, jj = np.triu_indices(n, k=1)
    src = np.concatenate((ii, jj))
    dst = np.concatenate((jj, ii))
    limit = (r * (1.0 + EPS_GEO)) ** 2
    edges = []
    for start in range(0, len(src), _ORACLE_CHUNK):
        s, d = src[start:start + _ORACLE_CHUNK], dst[start:start + _ORACLE_CHUNK]
        centers = left_centers(arr[s], arr[d], r)
        if np.any(np.isnan(centers)):
            bad = int(np.flatnonzero(np.isnan(centers[:, 0]))[0])
            raise ChordTooLong(f"points {arr[s[bad]]} and {arr[d[bad]]} are farther apart than 2r")
        diff = arr[None, :, :] - centers[:, None, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        ok = np.all(d2 <= limit, axis=1)
        edges.extend(zip(s[ok].tolist(), d[ok].tolist()))
    return edges


def hull_oracle(points, r: float) -> DiscPolygon:
    """Brute-force r-hull straight from the definition; O(n^3)."""
    arr = _dedupe(as_array(points))
    if len(arr) == 0:
        raise EmptyInput("cannot hull an empty point set")
    if len(arr) == 1:
        return DiscPolygon(arr, r)
    edges = _oracle_edges(arr, r)
    if not edges:
        raise NoEnclosingDisc(f"no disc of radius {r!r} contains all {len(arr)} points")
    return DiscPolygon(arr[_boundary_cycle(arr, edges)], r)


def _boundary_cycle(arr: np.ndarray, edges: list[tuple[int, int]]) -> list[int]:
    """Indices of the boundary walked counterclockwise along accepted edges.

    From each vertex the walk takes the accepted edge with the smallest
    counterclockwise step, so concyclic runs keep every point. Near-ties can
    accept chords that skip over an endpoint of some other accepted edge;
    such endpoints are not on the walked cycle and are dropped.
    """
    used = sorted({i for e in edges for i in e})
    c = arr[used].mean(axis=0)
    ang = np.arctan2(arr[used, 1] - c[1], arr[used, 0] - c[0])
    pos = {idx: k for k, idx in enumerate(np.asarray(used)[np.argsort(ang, kind="stable")].tolist())}
    k = len(pos)
    # drop endpoints without an outgoing edge until every kept vertex can continue
    live = {i for i, _ in edges}
    while True:
        succ: dict[int, int] = {}
        for i, j in edges:
            if i in live and j in live:
                step = (pos[j] - pos[i]) % k
                if i not in succ or step < (pos[succ[i]] - pos[i]) % k:
                    succ[i] = j
        if set(succ) == live:
            break
        live = set(succ)
    start = min(live, key=pos.get)
    seen: dict[int, int] = {}
    walk = []
    v = start
    while v not in seen:
        seen[v] = len(walk)
        walk.append(v)
        v = succ[v]
    return walk[seen[v]:]


def _extreme_polygon(x: np.ndarray, y: np.ndarray, dirs: np.ndarray) -> list[int]:
    ext = np.argmax(dirs[:, :1] * x + dirs[:, 1:] * y, axis=1)
    poly = [int(ext[0])]
    for e in ext[1:].tolist():
        if e != poly[-1] and e != poly[0]:
            poly.append(e)
    return poly


def _outside_or_on(x: np.ndarray, y: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Mask of points not strictly inside the convex CCW polygon (px, py)."""
    keep = np.zeros(len(x), dtype=bool)
    for k in range(len(px)):
        ex, ey = px[(k + 1) % len(px)] - px[k], py[(k + 1) % len(px)] - py[k]
        keep |= ex * (y - py[k]) - ey * (x - px[k]) <= 0.0
    return keep


_FINE = np.array([[math.cos(a), math.sin(a)] for a in (np.arange(16) + 0.5) * (math.pi / 8)])


def _akl_toussaint(arr: np.ndarray) -> np.ndarray:
    """Discard points strictly inside a polygon of extreme input points.

    Two passes: an octagon of axis/diagonal extremes with an inscribed-box
    shortcut, then a 16-direction polygon on the survivors.
    """
    x, y = arr[:, 0].copy(), arr[:, 1].copy()
    s, d = x + y, x - y
    # extremes at angles 0, 45, ..., 315 degrees, counterclockwise
    order = [np.argmax(x), np.argmax(s), np.argmax(y), np.argmin(d),
             np.argmin(x), np.argmin(s), np.argmin(y), np.argmax(d)]
    poly = []
    for e in map(int, order):
        if not poly or (e != poly[-1] and e != poly[0]):
            poly.append(e)
    if len(poly) < 3:
        return arr
    px, py = x[poly], y[poly]
    # largest box centred at the octagon's vertex mean that fits inside it
    cx, cy = float(px.mean()), float(py.mean())
    hx, hy = float(px.max() - px.min()) / 2.0, float(py.max() - py.min()) / 2.0
    scale = math.inf
    for k in range(len(poly)):
        ex, ey = px[(k + 1) % len(poly)] - px[k], py[(k + 1) % len(poly)] - py[k]
        # inside means ex*(qy-py) - ey*(qx-px) >= 0 for every corner q
        room = ex * (cy - py[k]) - ey * (cx - px[k])
        need = abs(ex) * hy + abs(ey) * hx
        scale = min(scale, room / need if need > 0 else math.inf)
    scale *= 1.0 - 1e-9
    cand = np.ones(len(arr), dtype=bool)
    if scale > 0:
        cand = (np.abs(x - cx) >= scale * hx) | (np.abs(y - cy) >= scale * hy)
    idx = np.flatnonzero(cand)
    sub_x, sub_y = x[idx], y[idx]
    idx = idx[_outside_or_on(sub_x, sub_y, px, py)]
    sub_x, sub_y = x[idx], y[idx]
    fine = _extreme_polygon(sub_x, sub_y, _FINE)
    if len(fine) >= 3:
        mask = _outside_or_on(sub_x, sub_y, sub_x[fine], sub_y[fine])
        mask[fine] = True
        idx = idx[mask]
    return arr[np.union1d(idx, poly)]


def _monotone_chain(arr: np.ndarray) -> np.ndarray:
    pts = sorted(map(tuple, arr.tolist()))

    def half(seq):
        out = []
        for p in seq:
            while len(out) > 1 and ((out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                                    - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(pts), half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def convex_hull_ccw(arr: np.ndarray) -> np.ndarray:
    """Vertices of the ordinary convex hull, counterclockwise, no collinear points."""
    if len(arr) < 3:
        return arr
    cand = _akl_toussaint(arr) if len(arr) > 64 else arr
    try:
        hull = ConvexHull(cand)
    except QhullError:
        return _monotone_chain(cand)
    return cand[hull.vertices]


def min_enclosing_circle(arr: np.ndarray) -> tuple[float, float, float]:
    """Welzl's algorithm (iterative form) on a deterministically shuffled copy."""
    pts = arr[np.random.default_rng(0).permutation(len(arr))].tolist()

    def inside(c, p):
        return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1.0 + 1e-12) + 1e-15

    def two(p, q):
        return ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2, math.hypot(p[0] - q[0], p[1] - q[1]) / 2)

    def three(p, q, s):
        ax, ay = q[0] - p[0], q[1] - p[1]
        bx, by = s[0] - p[0], s[1] - p[1]
        d = 2.0 * (ax * by - ay * bx)
        if d == 0.0:
            cands = [two(p, q), two(p, s), two(q, s)]
            return max(cands, key=lambda c: c[2])
        a2, b2 = ax * ax + ay * ay, bx * bx + by * by
        ux, uy = (by * a2 - ay * b2) / d, (ax * b2 - bx * a2) / d
        return (p[0] + ux, p[1] + uy, math.hypot(ux, uy))

    c = (pts[0][0], pts[0][1], 0.0)
    for i in range(1, len(pts)):
        if inside(c, pts[i]):
            continue
        c = (pts[i][0], pts[i][1], 0.0)
        for j in range(i):
            if inside(c, pts[j]):
                continue
            c = two(pts[i], pts[j])
            for k in range(j):
                if not inside(c, pts[k]):
                    c = three(pts[i], pts[j], pts[k])
    return c


def _strictly_inside_left_disc(a, p, b, r: float) -> bool:
    """Is ``b`` strictly inside the radius-r disc through a, p centred left of a -> p?"""
    dx, dy = p[0] - a[0], p[1] - a[1]
    d = math.hypot(dx, dy)
    off = math.sqrt(max(r * r - d * d / 4.0, 0.0)) / d
    cx, cy = a[0] + dx / 2.0 - off * dy, a[1] + dy / 2.0 + off * dx
    return math.hypot(b[0] - cx, b[1] - cy) < r * (1.0 - EPS_GEO)


def spindle_scan(ring: np.ndarray, r: float) -> np.ndarray:
    """Thin a counterclockwise convex polygon to its r-hull vertices.

    ``ring[0]`` must be a vertex of the r-hull. A point is popped only when it
    lies strictly inside the disc through its stack neighbours, which puts it
    inside their lens and so rules it out as a vertex.
    """
    pts = ring.tolist()
    stack = [pts[0]]
    for p in pts[1:] + [pts[0]]:
        while len(stack) >= 2 and stack[-2] != p and _strictly_inside_left_disc(stack[-2], p, stack[-1], r):
            stack.pop()
        if p is not pts[0]:
            stack.append(p)
    return np.array(stack, dtype=float)


def hull_fast(points, r: float, incidents: list | None = None) -> DiscPolygon:
    """r-hull via convex hull + stack scan, certified against all points.

    If the certificate fails the oracle result is returned instead and an
    incident is appended to ``incidents`` (and logged).
    """
    arr = as_array(points)
    if len(arr) == 0:
        raise EmptyInput("cannot hull an empty point set")
    ring = _dedupe(convex_hull_ccw(arr))
    if len(ring) <= 3:
        return hull_oracle(arr, r) if len(arr) <= 3 else hull_oracle(ring, r)
    cx, cy, rad = min_enclosing_circle(ring)
    if rad > r * (1.0 + EPS_GEO):
        _check_diameter(ring, r)
        raise NoEnclosingDisc(f"smallest enclosing circle has radius {rad!r} > r = {r!r}")
    start = int(np.argmax(np.hypot(ring[:, 0] - cx, ring[:, 1] - cy)))
    ring = np.roll(ring, -start, axis=0)
    poly = DiscPolygon(spindle_scan(ring, r), r)
    excess = certificate_excess(arr, poly.edge_centers(), r)
    if excess <= EPS_GEO:
        return poly

    incident = {"reason": "certificate", "n": len(arr), "f0": poly.f0, "excess": excess}
    log.warning("hull_fast certificate failed (%s); falling back to oracle", incident)
    if incidents is not None:
        incidents.append(incident)
    poly = hull_oracle(arr if len(arr) <= _FULL_ORACLE_LIMIT else ring, r)
    if disc_excess(arr, poly.edge_centers(), r) > EPS_GEO:
        raise HullError("oracle fallback failed its certificate")
    return poly


def summarize(model: ConvexDiscModel, poly: DiscPolygon) -> HullSummary:
    if not np.all(model.contains_many(poly.vertices)):
        raise VertexOutsideModel("hull vertex outside the model")
    hull_area = arc_polygon_area(poly)
    return HullSummary(poly.f0, hull_area, model.area - hull_area, poly.edge_count)
