"""Smooth convex discs K with strictly positive boundary curvature.

Every model is a counterclockwise 2*pi-periodic boundary map theta -> (x, y)
with first and second derivatives. Curvature, outer normal, r_M and the
Green's-theorem area are derived from these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import InvalidModel, SamplerStall
from .geom import Point, as_array
from .quadrature import adaptive_simpson
from .rng import Rng

TWO_PI = 2.0 * math.pi
GRID = 4096
MAX_DRAWS_PER_POINT = 10**6
_CONTAINS_TOL = 1e-12


class ConvexDiscModel:
    """Base class; subclasses implement :meth:`derivatives`."""

    kind = "abstract"

    def derivatives(self, theta):
        """Return x, y, x', y', x'', y'' at ``theta`` (array-valued)."""
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError

    # boundary geometry -------------------------------------------------

    def boundary(self, theta) -> np.ndarray:
        x, y, *_ = self.derivatives(np.asarray(theta, dtype=float))
        return np.stack((x, y), axis=-1)

    def tangent(self, theta) -> np.ndarray:
        _, _, dx, dy, _, _ = self.derivatives(np.asarray(theta, dtype=float))
        return np.stack((dx, dy), axis=-1)

    def speed(self, theta):
        _, _, dx, dy, _, _ = self.derivatives(np.asarray(theta, dtype=float))
        return np.hypot(dx, dy)

    def normal(self, theta) -> np.ndarray:
        _, _, dx, dy, _, _ = self.derivatives(np.asarray(theta, dtype=float))
        s = np.hypot(dx, dy)
        return np.stack((dy / s, -dx / s), axis=-1)

    def curvature(self, theta):
        _, _, dx, dy, ddx, ddy = self.derivatives(np.asarray(theta, dtype=float))
        return (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3

    # derived constants ---------------------------------------------------

    @cached_property
    def kappa_min(self) -> float:
        return _curvature_extreme(self, minimum=True)

    @cached_property
    def kappa_max(self) -> float:
        return _curvature_extreme(self, minimum=False)

    @property
    def r_M(self) -> float:
        return 1.0 / self.kappa_min

    @cached_property
    def area(self) -> float:
        def integrand(t):
            x, y, dx, dy, _, _ = self.derivatives(t)
            return 0.5 * (x * dy - y * dx)

        return adaptive_simpson(integrand, 0.0, TWO_PI, abs_tol=1e-14, rel_tol=1e-11)

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) from support values in the four axis directions."""
        t = np.linspace(0.0, TWO_PI, GRID, endpoint=False)
        xy = self.boundary(t)
        out = []
        for col, sign in ((0, -1.0), (1, -1.0), (0, 1.0), (1, 1.0)):
            k = int(np.argmax(sign * xy[:, col]))
            res = optimize.minimize_scalar(
                lambda s: -sign * float(self.boundary(s)[col]),
                bounds=(t[k] - TWO_PI / GRID, t[k] + TWO_PI / GRID), method="bounded",
                options={"xatol": 1e-12})
            out.append(sign * max(sign * xy[k, col], -float(res.fun)))
        return tuple(out)

    def _validate(self) -> None:
        t = np.linspace(0.0, TWO_PI, GRID, endpoint=False)
        k = self.curvature(t)
        if not np.all(np.isfinite(k)) or np.min(k) <= 0.0:
            raise InvalidModel(f"{self.kind}: curvature must be strictly positive on the boundary")
        start, end = self.boundary(0.0), self.boundary(TWO_PI)
        if np.hypot(*(start - end)) > 1e-9 * (1.0 + np.hypot(*start)):
            raise InvalidModel(f"{self.kind}: boundary map is not 2*pi-periodic")
        # counterclockwise, traced once: the tangent turns by exactly +2*pi
        tan = self.tangent(t)
        ang = np.arctan2(tan[:, 1], tan[:, 0])
        steps = np.diff(np.append(ang, ang[0]))
        turn = float(np.sum((steps + math.pi) % TWO_PI - math.pi))
        if abs(turn - TWO_PI) > 1e-6:
            raise InvalidModel(f"{self.kind}: boundary must turn once counterclockwise")

    # membership ----------------------------------------------------------

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        """Closed membership for an (m, 2) array; generic support-function test."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        t = np.linspace(0.0, TWO_PI, 512, endpoint=False)
        xy, nrm = self.boundary(t), self.normal(t)
        out = np.empty(len(pts), dtype=bool)
        for i, p in enumerate(pts):
            s = np.einsum("ij,ij->i", p - xy, nrm)
            k = int(np.argmax(s))
            res = optimize.minimize_scalar(
                lambda a: -float(np.dot(p - self.boundary(a), self.normal(a))),
                bounds=(t[k] - TWO_PI / 256, t[k] + TWO_PI / 256), method="bounded",
                options={"xatol": 1e-13})
            out[i] = max(s[k], -res.fun) <= _CONTAINS_TOL
        return out

    def contains(self, p) -> bool:
        return bool(self.contains_many(np.array([tuple(p)], dtype=float))[0])


def _curvature_extreme(model: ConvexDiscModel, minimum: bool) -> float:
    """Grid scan on 4096 points, then golden-section refinement."""
    sign = 1.0 if minimum else -1.0
    t = np.linspace(0.0, TWO_PI, GRID, endpoint=False)
    k = sign * model.curvature(t)
    i = int(np.argmin(k))
    h = TWO_PI / GRID
    f = lambda s: sign * float(model.curvature(s))
    res = optimize.minimize_scalar(f, bracket=(t[i] - h, t[i], t[i] + h), method="golden",
                                   options={"xtol": 1e-10})
    return sign * min(k[i], float(res.fun))


@dataclass(frozen=True, eq=True)
class Circle(ConvexDiscModel):
    rho: float = 1.0
    kind = "circle"

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise InvalidModel("circle radius must be positive")

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        c, s = self.rho * np.cos(theta), self.rho * np.sin(theta)
        return c, s, -s, c, -c, -s

    def curvature(self, theta):
        return np.full_like(np.asarray(theta, dtype=float), 1.0 / self.rho)

    @cached_property
    def kappa_min(self) -> float:
        return 1.0 / self.rho

    @cached_property
    def kappa_max(self) -> float:
        return 1.0 / self.rho

    @property
    def r_M(self) -> float:
        return self.rho

    @cached_property
    def area(self) -> float:
        return math.pi * self.rho**2

    @cached_property
    def bbox(self):
        return (-self.rho, -self.rho, self.rho, self.rho)

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.einsum("ij,ij->i", pts, pts) <= self.rho**2 * (1.0 + _CONTAINS_TOL)

    def spec(self):
        return {"kind": "circle", "rho": self.rho}


@dataclass(frozen=True, eq=True)
class Ellipse(ConvexDiscModel):
    a: float = 1.0
    b: float = 1.0
    kind = "ellipse"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidModel("ellipse semi-axes must be positive")

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        c, s = np.cos(theta), np.sin(theta)
        a, b = self.a, self.b
        return a * c, b * s, -a * s, b * c, -a * c, -b * s

    def curvature(self, theta):
        theta = np.asarray(theta, dtype=float)
        a, b = self.a, self.b
        return a * b / (a * a * np.sin(theta) ** 2 + b * b * np.cos(theta) ** 2) ** 1.5

    @cached_property
    def kappa_min(self) -> float:
        big, small = max(self.a, self.b), min(self.a, self.b)
        return small / big**2

    @cached_property
    def kappa_max(self) -> float:
        big, small = max(self.a, self.b), min(self.a, self.b)
        return big / small**2

    @property
    def r_M(self) -> float:
        big, small = max(self.a, self.b), min(self.a, self.b)
        return big**2 / small

    @cached_property
    def area(self) -> float:
        return math.pi * self.a * self.b

    @cached_property
    def bbox(self):
        return (-self.a, -self.b, self.a, self.b)

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts[:, 0] / self.a) ** 2 + (pts[:, 1] / self.b) ** 2 <= 1.0 + _CONTAINS_TOL

    def spec(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=True)
class Parametric(ConvexDiscModel):
    """A boundary given by code: ``gamma(theta) -> (x, y)`` plus its first and
    second derivatives, all vectorised over numpy arrays."""

    name: str
    gamma: Callable
    d1: Callable
    d2: Callable
    options: tuple = ()
    kind = "parametric"

    def __post_init__(self):
        self._validate()

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        x, y = self.gamma(theta)
        dx, dy = self.d1(theta)
        ddx, ddy = self.d2(theta)
        return (np.asarray(x, float), np.asarray(y, float), np.asarray(dx, float),
                np.asarray(dy, float), np.asarray(ddx, float), np.asarray(ddy, float))

    @cached_property
    def area(self) -> float:
        def integrand(t):
            x, y, dx, dy, _, _ = self.derivatives(t)
            return 0.5 * (x * dy - y * dx)

        return adaptive_simpson(integrand, 0.0, TWO_PI, abs_tol=1e-14, rel_tol=1e-11)

    def spec(self):
        return {"kind": self.name, **dict(self.options)}


def boundary_point(model: ConvexDiscModel, theta: float) -> tuple[Point, tuple[float, float], float]:
    """Boundary point, outer unit normal and curvature at parameter ``theta``."""
    xy = model.boundary(theta)
    u = model.normal(theta)
    return Point(float(xy[0]), float(xy[1])), (float(u[0]), float(u[1])), float(model.curvature(theta))


def contains(model: ConvexDiscModel, p) -> bool:
    return model.contains(p)


def model_area(model: ConvexDiscModel) -> float:
    return model.area


def sample_uniform(model: ConvexDiscModel, rng: Rng, n: int, *, return_draws: bool = False):
    """``n`` uniform points in K by rejection from the bounding box.

    Returns an (n, 2) array; with ``return_draws`` also the number of
    candidate points drawn.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    gen = rng.generator()
    xmin, ymin, xmax, ymax = model.bbox
    lo = np.array([xmin, ymin])
    span = np.array([xmax - xmin, ymax - ymin])
    p_acc = model.area / float(span[0] * span[1])
    out = np.empty((n, 2))
    filled = draws = 0
    cap = MAX_DRAWS_PER_POINT * n
    while filled < n:
        need = n - filled
        m = int(need / p_acc * 1.05) + 32
        cand = lo + gen.random((m, 2)) * span
        hits = np.flatnonzero(model.contains_many(cand))
        if len(hits) >= need:
            # candidates past the last accepted one are discarded, not counted
            hits = hits[:need]
            draws += int(hits[-1]) + 1
        else:
            draws += m
        out[filled:filled + len(hits)] = cand[hits]
        filled += len(hits)
        if draws > cap and filled < n:
            raise SamplerStall(f"rejection sampler stalled after {draws} draws ({filled}/{n} accepted)")
    return (out, draws) if return_draws else out


# model registry --------------------------------------------------------

_REGISTRY: dict[str, Callable[[dict], ConvexDiscModel]] = {}


def register_model(name: str, factory: Callable[[dict], ConvexDiscModel]) -> None:
    """Make a code-defined model available by name in configs and the CLI."""
    if name in ("circle", "ellipse"):
        raise ValueError(f"{name!r} is a built-in model kind")
    _REGISTRY[name] = factory


def registered_models() -> list[str]:
    return ["circle", "ellipse", *sorted(_REGISTRY)]


def model_from_spec(spec: dict) -> ConvexDiscModel:
    kind = spec.get("kind")
    try:
        if kind == "circle":
            return Circle(float(spec.get("rho", 1.0)))
        if kind == "ellipse":
            return Ellipse(float(spec.get("a", 1.0)), float(spec.get("b", 1.0)))
    except (TypeError, ValueError) as exc:
        raise InvalidModel(str(exc)) from exc
    if kind in _REGISTRY:
        return _REGISTRY[kind](spec)
    raise InvalidModel(f"unknown model kind {kind!r}; known: {', '.join(registered_models())}")


def parametric_circle(radius: float = 1.0) -> Parametric:
    """The circle written as a generic parametric model (regression input)."""
    return Parametric(
        "parametric-circle",
        lambda t: (radius * np.cos(t), radius * np.sin(t)),
        lambda t: (-radius * np.sin(t), radius * np.cos(t)),
        lambda t: (-radius * np.cos(t), -radius * np.sin(t)),
        options=(("rho", radius),),
    )


register_model("parametric-circle", lambda spec: parametric_circle(float(spec.get("rho", 1.0))))


def points_in_model(model: ConvexDiscModel, points) -> bool:
    pts = as_array(points)
    return bool(np.all(model.contains_many(pts))) if len(pts) else True
