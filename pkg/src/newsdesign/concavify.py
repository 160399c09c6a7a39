"""Concave envelopes of sampled functions on [0, 1] and their two-point supports."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

log = logging.getLogger(__name__)

# the bundled TBB is too old for numba; the portable work-queue layer suffices
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

COLLINEAR_TOL = 1e-12
MIN_GRID = 101
DEFAULT_GRID = 2001
REFINE_POINTS = 201


@dataclass(frozen=True)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if grid.size < 2:
            raise ValueError("need at least two grid points")
        if not np.all(np.isfinite(values)):
            raise ValueError("function values must be finite")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], grid) -> "SampledFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(func(grid), dtype=float))


@dataclass(frozen=True)
class Support:
    points: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def is_single(self) -> bool:
        return len(self.points) == 1


def _scale(values: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(values))))


def upper_hull(x: np.ndarray, y: np.ndarray, tol: float = COLLINEAR_TOL) -> np.ndarray:
    """Indices of the upper hull of points sorted by ``x`` (monotone chain).

    A middle point is discarded when it lies on or below the chord of its
    neighbours, so collinear runs keep only their extreme points.
    """
    eps = tol * _scale(y)
    hull: list[int] = []
    for k in range(len(x)):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
            if cross >= -eps * (x[k] - x[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    return np.asarray(hull, dtype=np.int64)


@dataclass(frozen=True)
class Envelope:
    func: SampledFunction
    vertices: np.ndarray  # indices into func.grid

    @property
    def grid(self) -> np.ndarray:
        return self.func.grid

    @property
    def vertex_x(self) -> np.ndarray:
        return self.func.grid[self.vertices]

    @property
    def vertex_y(self) -> np.ndarray:
        return self.func.values[self.vertices]

    @property
    def values(self) -> np.ndarray:
        """Envelope evaluated on the function's own grid."""
        return self(self.func.grid)

    @property
    def is_vertex(self) -> np.ndarray:
        mask = np.zeros(self.func.grid.size, dtype=bool)
        mask[self.vertices] = True
        return mask

    def __call__(self, x):
        return np.interp(x, self.vertex_x, self.vertex_y)


def concave_envelope(f: SampledFunction) -> Envelope:
    """Smallest concave majorant of the sampled points."""
    return Envelope(f, upper_hull(f.grid, f.values))


def support_at(env: Envelope, x: float, tol: float = COLLINEAR_TOL) -> Support:
    """Bayes-plausible split of ``x`` attaining the envelope.

    Returns ``{x}`` when the function already touches its envelope at ``x``
    (no information is the smaller support); otherwise the hull segment
    around ``x`` with weights ``((qR-x)/(qR-qL), (x-qL)/(qR-qL))``.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"support point must lie in [0, 1], got {x}")
    grid, vals = env.func.grid, env.func.values
    vx, vy = env.vertex_x, env.vertex_y
    eps = tol * _scale(vals)
    k = int(np.searchsorted(grid, x))
    on_grid = k < grid.size and abs(grid[k] - x) <= 1e-15
    if on_grid and vals[k] >= float(env(x)) - eps:
        return Support((float(x),), (1.0,))
    if x < vx[0] or x > vx[-1]:
        raise ValueError("point lies outside the sampled range")
    r = int(np.searchsorted(vx, x, side="left"))
    r = min(max(r, 1), vx.size - 1)
    a, b = vx[r - 1], vx[r]
    ya, yb = vy[r - 1], vy[r]
    # collinear interior grid points: report the narrowest bracket around x
    inner = (grid > a) & (grid < b)
    if np.any(inner):
        gx, gy = grid[inner], vals[inner]
        chord = ya + (yb - ya) * (gx - a) / (b - a)
        on = gy >= chord - eps
        if np.any(on):
            left = gx[on & (gx <= x)]
            right = gx[on & (gx >= x)]
            if left.size or right.size:
                log.debug("collinear support at x=%.6g: segment [%.6g, %.6g] narrowed", x, a, b)
            if left.size:
                a = float(left[-1])
            if right.size:
                b = float(right[0])
    w_left = (b - x) / (b - a)
    return Support((float(a), float(b)), (float(w_left), float(1.0 - w_left)))


def refined_envelope(
    func: Callable[[np.ndarray], np.ndarray],
    grid: np.ndarray,
    x: float | None = None,
    refine_points: int = REFINE_POINTS,
) -> Envelope:
    """Hull on ``grid`` (plus ``x``), then one pass of local refinement.

    ``refine_points`` extra abscissae are inserted within one grid step of
    every hull vertex and the hull is recomputed on the union.
    """
    grid = np.asarray(grid, dtype=float)
    if x is not None:
        grid = np.union1d(grid, [x])
    env = concave_envelope(SampledFunction.from_callable(func, grid))
    if refine_points <= 0:
        return env
    h = float(np.max(np.diff(grid)))
    extra = [np.linspace(max(0.0, v - h), min(1.0, v + h), refine_points) for v in env.vertex_x]
    fine = np.union1d(grid, np.concatenate(extra))
    return concave_envelope(SampledFunction.from_callable(func, fine))


# ---------------------------------------------------------------------------
# batched kernel used by the dynamic solvers: one envelope per row of F


@numba.njit(cache=True, parallel=True)
def _cav_rows_kernel(q, F, xs, xi, tol):  # pragma: no cover - compiled
    m, n = F.shape
    value = np.empty(m)
    lo = np.empty(m)
    hi = np.empty(m)
    for r in numba.prange(m):
        row = F[r]
        scale = 1.0
        for j in range(n):
            a = abs(row[j])
            if a > scale:
                scale = a
        eps = tol * scale
        stack = np.empty(n, dtype=np.int64)
        top = 0
        for k in range(n):
            while top >= 2:
                i = stack[top - 2]
                j = stack[top - 1]
                cross = (q[j] - q[i]) * (row[k] - row[i]) - (row[j] - row[i]) * (q[k] - q[i])
                if cross >= -eps * (q[k] - q[i]):
                    top -= 1
                else:
                    break
            stack[top] = k
            top += 1
        x = xs[r]
        # hull segment containing x
        s = 1
        while s < top - 1 and q[stack[s]] < x:
            s += 1
        a = stack[s - 1]
        b = stack[s]
        if q[a] == x:
            value[r] = row[a]
            lo[r] = x
            hi[r] = x
            continue
        if q[b] == x:
            value[r] = row[b]
            lo[r] = x
            hi[r] = x
            continue
        chord = row[a] + (row[b] - row[a]) * (x - q[a]) / (q[b] - q[a])
        if xi[r] >= 0 and row[xi[r]] >= chord - eps:
            value[r] = row[xi[r]]
            lo[r] = x
            hi[r] = x
        else:
            value[r] = chord
            lo[r] = q[a]
            hi[r] = q[b]
    return value, lo, hi


def cav_rows(q: np.ndarray, F: np.ndarray, xs: np.ndarray, tol: float = COLLINEAR_TOL):
    """Envelope of each row ``F[r]`` over abscissae ``q``, evaluated at ``xs[r]``.

    Returns ``(value, support_lo, support_hi)``; ``lo == hi == x`` marks a
    row whose function touches its envelope at the query point.
    """
    q = np.ascontiguousarray(q, dtype=float)
    F = np.ascontiguousarray(F, dtype=float)
    xs = np.ascontiguousarray(xs, dtype=float)
    if F.ndim != 2 or F.shape[1] != q.size or xs.shape != (F.shape[0],):
        raise ValueError("shape mismatch between q, F and xs")
    if not np.all(np.isfinite(F)):
        raise ValueError("function values must be finite")
    k = np.searchsorted(q, xs)
    k = np.minimum(k, q.size - 1)
    xi = np.where(np.abs(q[k] - xs) <= 1e-15, k, -1).astype(np.int64)
    return _cav_rows_kernel(q, F, xs, xi, tol)


def default_grid_size(fallback: int = DEFAULT_GRID) -> int:
    """Grid size from ``NEWSDESIGN_GRID`` if set, else ``fallback``."""
    raw = os.environ.get("NEWSDESIGN_GRID")
    if raw is None or raw.strip() == "":
        return fallback
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"NEWSDESIGN_GRID must be an integer, got {raw!r}") from exc
    if n < MIN_GRID:
        raise ValueError(f"NEWSDESIGN_GRID={n} is below the minimum of {MIN_GRID}")
    return n


@dataclass(frozen=True)
class GridConfig:
    n: int = field(default_factory=default_grid_size)
    refine: bool = True
    refine_points: int = REFINE_POINTS

    def __post_init__(self):
        if self.n < MIN_GRID:
            raise ValueError(f"grid of {self.n} points is too coarse (minimum {MIN_GRID})")
        if self.refine_points < 0:
            raise ValueError("refine_points must be non-negative")


def uniform_grid(n: int) -> np.ndarray:
    if n < MIN_GRID:
        raise ValueError(f"grid of {n} points is too coarse (minimum {MIN_GRID})")
    return np.linspace(0.0, 1.0, n)
