"""Escape-time rasters over the disk of initial values and polar parameters.

Each pixel at plane point ``(u, v) = r (cos t, sin t)`` iterates the scalar
map from ``x[-1] = 0, x[0] = r`` with coefficients derived from the angle
``t``.  The cell stores the 1-based index of the first iterate with
``|x| >= threshold`` (non-finite counts as escaped), or 0 when the orbit stays
below the threshold for the whole budget.

Modes
-----
polar
    ``a = k cos t, b = k sin t``
abs-polar
    ``a = k |cos t|, b = k |sin t|``
sign
    ``a = sgn(cos t), b = sgn(sin t)`` with ``sgn(0) = 0``
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import MapParams, signed_power

__all__ = [
    "MODES",
    "DISK_RADIUS",
    "GridSpec",
    "EscapeGrid",
    "PointParams",
    "pixel_to_plane",
    "params_for_point",
    "escape_code",
    "render_escape_grid",
    "white_fraction",
    "mask_diff",
    "analytic_bound_holds",
]

MODES = ("polar", "abs-polar", "sign")

# sufficient radius for boundedness of the k=1 polar quadratic family
DISK_RADIUS = math.sqrt(0.5)


@dataclass(frozen=True)
class GridSpec:
    pixels: int = 256
    radius: float = 2.0
    mode: str = "polar"
    k: float = 1.0
    alpha: float = 2.0
    iters: int = 30
    threshold: float = 2.0

    def __post_init__(self):
        if self.pixels < 2:
            raise ValueError("pixels must be >= 2")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if not math.isfinite(self.k):
            raise ValueError("k must be finite")
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (0, 2]")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True, eq=False)
class EscapeGrid:
    spec: GridSpec
    cells: np.ndarray

    def __post_init__(self):
        n = self.spec.pixels
        if self.cells.shape != (n, n):
            raise ValueError(f"cells shape {self.cells.shape} does not match {n}x{n}")

    @property
    def bounded(self) -> np.ndarray:
        return self.cells == 0


class PointParams(NamedTuple):
    params: MapParams
    r: float
    theta: float


def pixel_to_plane(spec: GridSpec, i: int, j: int) -> tuple[float, float]:
    """Centre of pixel ``(i, j)``; row 0 is the top edge."""
    n = spec.pixels
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"pixel ({i}, {j}) outside {n}x{n} grid")
    step = 2.0 * spec.radius / n
    return -spec.radius + (j + 0.5) * step, spec.radius - (i + 0.5) * step


_TINY, _HUGE = 2.0**-500, 2.0**500


def _polar(u, v):
    """Radius and direction cosines of ``(u, v)``; works on floats and arrays.

    ``r`` is ``sqrt(u*u + v*v)``.  Inputs far from unit scale are first
    rescaled by an exact power of two so the squares neither underflow nor
    overflow; ordinary pixel coordinates are untouched.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = np.maximum(np.abs(u), np.abs(v))
    scale = np.where(m < _TINY, 2.0**600, np.where(m > _HUGE, 2.0**-600, 1.0))
    us, vs = u * scale, v * scale
    rs = np.sqrt(us * us + vs * vs)
    safe = np.where(rs == 0.0, 1.0, rs)
    # cos/sin as u/r, v/r so axis points give exact zeros; r=0 maps to theta=0
    c = np.where(rs == 0.0, 1.0, us / safe)
    s = np.where(rs == 0.0, 0.0, vs / safe)
    return rs / scale, c, s


def _coefficients(mode: str, k: float, u, v, c, s):
    if mode == "sign":
        return np.sign(u), np.sign(v)
    if mode == "abs-polar":
        c, s = np.abs(c), np.abs(s)
    return k * c, k * s


def params_for_point(mode: str, k: float, u: float, v: float, alpha: float = 2.0) -> PointParams:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    r, c, s = _polar(u, v)
    a, b = _coefficients(mode, k, u, v, c, s)
    return PointParams(MapParams(float(a), float(b), alpha), float(r), math.atan2(v, u))


def escape_code(p: MapParams, r: float, iters: int, threshold: float) -> int:
    """First 1-based iterate index with ``|x| >= threshold``, else 0.

    Only iterates are tested, never the initial values ``(0, r)``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x_prev, x = 0.0, r
    for n in range(1, iters + 1):
        x_prev, x = x, p.a * signed_power(x, p.alpha) + p.b * signed_power(x_prev, p.alpha)
        if not abs(x) < threshold:
            return n
    return 0


def _vec_power(x: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 2.0:
        return x * x
    if alpha == 1.0:
        return x
    return np.sign(x) * np.power(np.abs(x), alpha)


def _render_rows(spec: GridSpec, rows: range) -> np.ndarray:
    n = spec.pixels
    step = 2.0 * spec.radius / n
    j = np.arange(n, dtype=float)
    i = np.asarray(rows, dtype=float)[:, None]
    u = np.broadcast_to(-spec.radius + (j + 0.5) * step, (len(rows), n))
    v = np.broadcast_to(spec.radius - (i + 0.5) * step, (len(rows), n))
    r, c, s = _polar(u, v)
    a, b = _coefficients(spec.mode, spec.k, u, v, c, s)

    code = np.zeros((len(rows), n), dtype=np.int32)
    active = np.ones_like(code, dtype=bool)
    x_prev = np.zeros_like(r)
    x = r.copy()
    with np.errstate(all="ignore"):
        for it in range(1, spec.iters + 1):
            x_new = a * _vec_power(x, spec.alpha) + b * _vec_power(x_prev, spec.alpha)
            escaped = active & ~(np.abs(x_new) < spec.threshold)
            code[escaped] = it
            active &= ~escaped
            if not active.any():
                break
            # escaped cells are frozen at zero so they never overflow
            x_new[~active] = 0.0
            x_prev, x = x, x_new
            x_prev[~active] = 0.0
    return code


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def render_escape_grid(spec: GridSpec, workers: int | None = None) -> EscapeGrid:
    """Render the full raster, splitting rows across a thread pool.

    Each row is computed from immutable inputs and written to its own slice,
    so the result does not depend on ``workers``.
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = spec.pixels
    cells = np.empty((n, n), dtype=np.int32)
    block = max(1, -(-n // (4 * workers)))
    blocks = [range(s, min(n, s + block)) for s in range(0, n, block)]
    if workers == 1:
        for rows in blocks:
            cells[rows.start:rows.stop] = _render_rows(spec, rows)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rows, out in zip(blocks, pool.map(lambda rr: _render_rows(spec, rr), blocks)):
                cells[rows.start:rows.stop] = out
    return EscapeGrid(spec, cells)


def white_fraction(g: EscapeGrid) -> float:
    return float(np.count_nonzero(g.cells == 0)) / g.cells.size


def mask_diff(g1: EscapeGrid, g2: EscapeGrid) -> float:
    """Fraction of cells whose bounded/escaped classification differs."""
    if g1.cells.shape != g2.cells.shape or g1.spec.radius != g2.spec.radius:
        raise ValueError("grids differ in size or extent")
    return float(np.count_nonzero(g1.bounded != g2.bounded)) / g1.cells.size


def analytic_bound_holds(x_prev: float, x_curr: float) -> bool:
    """Sufficient condition for boundedness of the k=1 polar quadratic map.

    Inside the closed disk ``|x| <= 1/sqrt(2)`` one step gives
    ``|cos t x**2 + sin t y**2| <= r**2 (|cos t| + |sin t|) <= r**2 sqrt(2) = r``,
    so the square is invariant.
    """
    return abs(x_prev) <= DISK_RADIUS and abs(x_curr) <= DISK_RADIUS
