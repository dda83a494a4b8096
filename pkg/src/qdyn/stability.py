"""Fixed points and linear stability of the coupled quadratic map.

Fixed points solve ``x = a x**2 + sigma y + 1`` and ``y = b x**2 - 1``.
Substituting ``y`` gives ``(a + sigma b) x**2 - x + (1 - sigma) = 0``, so
every fixed point is available in closed form.  The Jacobian at ``(x, y)`` is
``[[2 a x, sigma], [2 b x, 0]]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import OrbitDiverged, SystemParams, SystemState, linear_roots, step_system

__all__ = [
    "NotAFixedPoint",
    "FixedPointReport",
    "fixed_points",
    "jacobian_eigenvalues",
    "classify_fixed_point",
    "stability_report",
    "NONHYPERBOLIC_TOL",
]

NONHYPERBOLIC_TOL = 1e-9
RESIDUAL_TOL = 1e-12


class NotAFixedPoint(ValueError):
    pass


@dataclass(frozen=True)
class FixedPointReport:
    location: tuple[float, float]
    eigenvalues: tuple[complex, complex]
    stability: str
    oscillatory: bool

    @property
    def label(self) -> str:
        return f"oscillatory {self.stability}" if self.oscillatory else self.stability


def fixed_points(p: SystemParams) -> list[tuple[float, float]]:
    """All real fixed points with finite coordinates, ascending in ``x``."""
    quad = p.a + p.sigma * p.b
    const = 1.0 - p.sigma
    if quad == 0.0:
        xs = [const]
    else:
        disc = 1.0 - 4.0 * quad * const
        if disc < 0.0:
            return []
        # stable form: q never cancels because the linear coefficient is -1
        q = 0.5 * (1.0 + math.sqrt(disc))
        xs = sorted({q / quad, const / q})
    pts = [(x, p.b * x * x - 1.0) for x in xs]
    # roots of a nearly degenerate quadratic can sit beyond float range
    return [pt for pt in pts if _representable(p, pt)]


def _representable(p: SystemParams, pt: tuple[float, float]) -> bool:
    if not all(math.isfinite(v) for v in pt):
        return False
    try:
        step_system(p, SystemState(*pt))
    except OrbitDiverged:
        return False
    return True


def jacobian_eigenvalues(p: SystemParams, x: float) -> tuple[complex, complex]:
    """Roots of ``lam**2 - 2 a x lam - 2 b sigma x = 0``, largest modulus first."""
    la = linear_roots(2.0 * p.b * p.sigma * x, 2.0 * p.a * x)
    return la.lambda1, la.lambda2


def _residual(p: SystemParams, pt: tuple[float, float]) -> tuple[float, float]:
    x, y = pt
    nxt = step_system(p, SystemState(x, y))
    res = max(abs(nxt.x - x), abs(nxt.y - y))
    # cancellation among large terms bounds what rounding can achieve
    scale = max(1.0, abs(x), abs(y), abs(p.a) * x * x, abs(p.sigma * y), abs(p.b) * x * x)
    return res, scale


def classify_fixed_point(p: SystemParams, pt: tuple[float, float]) -> FixedPointReport:
    res, scale = _residual(p, pt)
    if not res <= RESIDUAL_TOL * scale:
        raise NotAFixedPoint(f"not a fixed point: residual {res:.3e} at {pt}")
    lam = jacobian_eigenvalues(p, pt[0])
    mods = [abs(z) for z in lam]
    if any(abs(m - 1.0) <= NONHYPERBOLIC_TOL for m in mods):
        kind = "non-hyperbolic"
    elif all(m < 1.0 for m in mods):
        kind = "sink"
    elif all(m > 1.0 for m in mods):
        kind = "source"
    else:
        kind = "saddle"
    oscillatory = any(z.imag != 0.0 or z.real < 0.0 for z in lam)
    return FixedPointReport((float(pt[0]), float(pt[1])), lam, kind, oscillatory)


def stability_report(p: SystemParams) -> list[FixedPointReport]:
    return [classify_fixed_point(p, pt) for pt in fixed_points(p)]
