"""Limit constants for the expected vertex number and missed area.

    E f0 * n^(-1/3)        -> (2 / (3 A))^(1/3) * Gamma(5/3) * c1
    E A(K \\ hull) * n^(2/3) -> (2 A^2 / 3)^(1/3) * Gamma(5/3) * c1

with c1 = integral over the boundary of (kappa - 1/r)^(1/3) ds, for r > r_M.
For the unit circle and r = 1 the coefficients vanish; the limits there are
E f0 -> pi^2 / 2 and n * E A(B \\ hull) -> pi^3 / 2.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import RadiusNotAdmissible
from .quadrature import adaptive_simpson
from .shapes import TWO_PI, ConvexDiscModel

# math.gamma is correctly rounded to within a few ulp on IEEE doubles
GAMMA_5_3 = math.gamma(5.0 / 3.0)

CIRCLE_VERTEX_LIMIT = math.pi**2 / 2.0
CIRCLE_AREA_LIMIT = math.pi**3 / 2.0


@dataclass(frozen=True)
class LimitConstants:
    c1: float
    vertex_coeff: float
    area_coeff: float
    gamma_5_3: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_radius(model: ConvexDiscModel, r: float, strict: bool) -> None:
    if strict and not r > model.r_M:
        raise RadiusNotAdmissible(f"need r > r_M, got r={r!r} <= r_M={model.r_M!r}")
    if not r >= model.r_M * (1.0 - 1e-12):
        raise RadiusNotAdmissible(f"need r >= r_M, got r={r!r} < r_M={model.r_M!r}")


def c1(model: ConvexDiscModel, r: float, *, strict: bool = True, rel_tol: float = 1e-8,
       a: float = 0.0, b: float = TWO_PI) -> float:
    """Boundary integral of (kappa - 1/r)^(1/3) over parameters [a, b].

    ``strict=False`` admits r = r_M, where the integrand may vanish.
    """
    _check_radius(model, r, strict)

    def integrand(theta):
        k = np.maximum(model.curvature(theta) - 1.0 / r, 0.0)
        return np.cbrt(k) * model.speed(theta)

    return adaptive_simpson(integrand, a, b, abs_tol=1e-12, rel_tol=rel_tol)


def limit_constants(model: ConvexDiscModel, r: float, *, strict: bool = True) -> LimitConstants:
    value = c1(model, r, strict=strict)
    area = model.area
    return LimitConstants(
        c1=value,
        vertex_coeff=(2.0 / (3.0 * area)) ** (1.0 / 3.0) * GAMMA_5_3 * value,
        area_coeff=(2.0 * area * area / 3.0) ** (1.0 / 3.0) * GAMMA_5_3 * value,
        gamma_5_3=GAMMA_5_3,
    )
