"""Scalar difference-equation family and the coupled quadratic 2D map.

The scalar family is ``x[n+1] = a * x[n]**alpha + b * x[n-1]**alpha`` with
``0 < alpha <= 2``.  Negative bases at fractional exponents use the odd
(sign-preserving) extension; ``alpha`` of exactly 1 or 2 use true powers.

The coupled map is::

    x' = a * x**2 + sigma * y + 1
    y' = b * x**2 - 1
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "OrbitDiverged",
    "MapParams",
    "OrbitState",
    "SystemParams",
    "SystemState",
    "LinearAnalysis",
    "LinearClass",
    "Orbit",
    "Trajectory",
    "signed_power",
    "step_map",
    "iterate_orbit",
    "step_system",
    "iterate_system",
    "linear_roots",
    "classify_linear",
    "sampled_map_step",
    "batch_orbit_sup",
]


class OrbitDiverged(ArithmeticError):
    """Raised when an iterate overflows to a non-finite value."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class MapParams:
    a: float
    b: float
    alpha: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("map coefficients must be finite")
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")


@dataclass(frozen=True)
class OrbitState:
    x_prev: float
    x_curr: float
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("step index must be non-negative")


@dataclass(frozen=True)
class SystemParams:
    a: float
    b: float
    sigma: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.sigma)):
            raise ValueError("system coefficients must be finite")


@dataclass(frozen=True)
class SystemState:
    x: float
    y: float
    t: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("step index must be non-negative")


@dataclass(frozen=True)
class LinearAnalysis:
    lambda1: complex
    lambda2: complex
    spectral_radius: float
    converges_to_zero: bool
    oscillates_about_zero: bool


@dataclass(frozen=True)
class LinearClass:
    oscillatory: bool
    convergent: bool

    @property
    def label(self) -> str:
        if self.convergent:
            return "oscillatory convergent" if self.oscillatory else "convergent"
        if self.oscillatory:
            return "oscillatory non-convergent"
        return "non-oscillatory non-convergent"

    def __str__(self) -> str:
        return self.label


class Orbit(NamedTuple):
    """Finite prefix of an orbit; ``diverged_at`` is the first non-finite step."""

    values: list[float]
    diverged_at: int | None = None


class Trajectory(NamedTuple):
    states: list[SystemState]
    diverged_at: int | None = None


def signed_power(x: float, alpha: float) -> float:
    """Return ``sign(x) * |x|**alpha``; alpha 1 and 2 are the true powers."""
    if not math.isfinite(x):
        raise ValueError("non-finite input")
    if alpha == 2.0:
        return x * x
    if alpha == 1.0:
        return x
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** alpha, x)


def step_map(p: MapParams, s: OrbitState) -> OrbitState:
    if p.alpha == 1.0:
        nxt = p.a * s.x_curr + p.b * s.x_prev
    else:
        nxt = p.a * signed_power(s.x_curr, p.alpha) + p.b * signed_power(s.x_prev, p.alpha)
    if not math.isfinite(nxt):
        raise OrbitDiverged("orbit diverged (non-finite)", s.n + 1)
    return OrbitState(s.x_curr, nxt, s.n + 1)


def iterate_orbit(p: MapParams, x_prev0: float, x0: float, steps: int) -> Orbit:
    """Iterate the scalar map from ``(x[-1], x[0])`` and return ``x[1..steps]``.

    Iteration stops at the first non-finite value; the finite prefix is
    returned together with the index of the offending step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    state = OrbitState(float(x_prev0), float(x0))
    out: list[float] = []
    for _ in range(steps):
        try:
            state = step_map(p, state)
        except (OrbitDiverged, OverflowError):
            return Orbit(out, len(out) + 1)
        out.append(state.x_curr)
    return Orbit(out)


def step_system(p: SystemParams, s: SystemState) -> SystemState:
    xx = s.x * s.x
    x_new = p.a * xx + p.sigma * s.y + 1.0
    y_new = p.b * xx - 1.0
    if not (math.isfinite(x_new) and math.isfinite(y_new)):
        raise OrbitDiverged("system orbit diverged", s.t + 1)
    return SystemState(x_new, y_new, s.t + 1)


def iterate_system(p: SystemParams, x0: float, y0: float, steps: int) -> Trajectory:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    state = SystemState(float(x0), float(y0))
    out: list[SystemState] = []
    for _ in range(steps):
        try:
            state = step_system(p, state)
        except (OrbitDiverged, OverflowError):
            return Trajectory(out, len(out) + 1)
        out.append(state)
    return Trajectory(out)


def _root_order(z: complex) -> tuple[float, float, float]:
    return (-abs(z), -z.real, -z.imag)


def linear_roots(a: float, b: float) -> LinearAnalysis:
    """Roots of the characteristic equation ``lam**2 - b*lam - a = 0``.

    Roots are ordered by decreasing modulus (ties: larger real part, then
    positive imaginary part first).
    """
    # scale so that b**2 + 4a neither underflows nor overflows
    scale = max(abs(b), 2.0 * math.sqrt(abs(a)))
    if scale == 0.0:
        roots = [complex(0.0), complex(0.0)]
    else:
        bs = b / scale
        disc = bs * bs + 4.0 * ((a / scale) / scale)
        if disc >= 0.0:
            q = 0.5 * (b + math.copysign(scale * math.sqrt(disc), b))
            # + 0.0 folds a negative zero into +0
            roots = [complex(q + 0.0), complex(-a / q + 0.0)]
        else:
            half = 0.5 * scale * math.sqrt(-disc)
            roots = [complex(0.5 * b, half), complex(0.5 * b, -half)]
    lam1, lam2 = sorted(roots, key=_root_order)
    radius = max(abs(lam1), abs(lam2))
    positive_real = any(z.imag == 0.0 and z.real > 0.0 for z in (lam1, lam2))
    return LinearAnalysis(
        lambda1=lam1,
        lambda2=lam2,
        spectral_radius=radius,
        converges_to_zero=radius < 1.0,
        oscillates_about_zero=not positive_real,
    )


def classify_linear(a: float, b: float) -> LinearClass:
    la = linear_roots(a, b)
    return LinearClass(oscillatory=la.oscillates_about_zero, convergent=la.converges_to_zero)


def sampled_map_step(p: MapParams, T: float, s: OrbitState) -> OrbitState:
    """One step of ``x((n+1)T) = a x(nT)**2 - b x((n-1)T)**2``.

    ``T`` only labels the time axis; the recurrence is the quadratic map with
    the second coefficient negated.
    """
    if not T > 0.0:
        raise ValueError("sampling period must be positive")
    return step_map(replace(p, b=-p.b, alpha=2.0), s)


def batch_orbit_sup(a, b, x_prev0, x0, steps: int, alpha: float = 2.0) -> np.ndarray:
    """Largest ``|x[n]|`` over ``n = 1..steps`` for many orbits at once.

    All arguments broadcast together.  Orbits that overflow report ``inf``.
    Arithmetic matches :func:`step_map` exactly for ``alpha`` in {1, 2}.
    """
    if not (0.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (0, 2]")
    a, b, xp, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, x_prev0, x0)))
    xp, x = xp.copy(), x.copy()
    sup = np.zeros(x.shape)

    def pw(v):
        if alpha == 2.0:
            return v * v
        if alpha == 1.0:
            return v
        return np.sign(v) * np.power(np.abs(v), alpha)

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            xp, x = x, a * pw(x) + b * pw(xp)
            mag = np.abs(x)
            np.maximum(sup, np.where(np.isfinite(mag), mag, np.inf), out=sup)
    return sup
