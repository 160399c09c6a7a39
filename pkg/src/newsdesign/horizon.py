"""Random-horizon disclosure: the state is revealed exogenously with probability
``1 - delta`` each period, and the sender's value function is the fixed point
of a concavified Bellman operator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .cheaptalk import TOP, GgnLadder, ladder_errors, p_star
from .commitment import MeanNews
from .concavify import GridConfig, cav_rows, uniform_grid
from .gainloss import GainLossSpec

log = logging.getLogger(__name__)

DEFAULT_GRID = 1001
TOL = 1e-9
MONOTONE_SLACK = 1e-8
MAX_DEPTH = 1000


class NotConverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class DiscountedValue:
    delta: float
    grid: np.ndarray
    values: np.ndarray
    iterations: int
    step: float
    converged: bool

    def __call__(self, p):
        return np.interp(p, self.grid, self.values)


def _check_delta(delta: float) -> None:
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"continuation probability must lie in [0, 1), got {delta}")


class Bellman:
    """``phi(V)(p) = cav_q [mu(q-p) + delta V(q) + (1-delta) R(q)] (p)`` on a fixed grid,
    where ``R(q)`` is the expected news from revealing the state at belief ``q``."""

    def __init__(self, spec: GainLossSpec, delta: float, grid: np.ndarray):
        _check_delta(delta)
        model = MeanNews(spec)
        self.delta = float(delta)
        self.grid = np.asarray(grid, dtype=float)
        self._news = model.matrix(self.grid)
        self._reveal = (1.0 - self.delta) * model.terminal(self.grid)

    def __call__(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if V.shape != self.grid.shape:
            raise ValueError("value vector does not match the grid")
        F = self._news + (self.delta * V + self._reveal)[None, :]
        return cav_rows(self.grid, F, self.grid)[0]


def bellman(spec: GainLossSpec, delta: float, grid: np.ndarray, V: np.ndarray) -> np.ndarray:
    """One application of the Bellman operator."""
    return Bellman(spec, delta, grid)(V)


def value_iteration(
    spec: GainLossSpec,
    delta: float,
    grid_cfg: GridConfig | None = None,
    tol: float = TOL,
    max_iter: int | None = None,
) -> DiscountedValue:
    """Iterate the Bellman operator from ``V = 0`` until the sup-norm step is at most ``tol``."""
    _check_delta(delta)
    grid = uniform_grid(grid_cfg.n if grid_cfg is not None else DEFAULT_GRID)
    op = Bellman(spec, delta, grid)
    if max_iter is None:
        # contraction bound from V = 0 with |phi(0)| <= R, plus headroom
        max_iter = 50 if delta == 0 else int(math.log(tol / 4.0) / math.log(delta)) + 50
    V = np.zeros_like(grid)
    step = math.inf
    it = 0
    while it < max_iter:
        nxt = op(V)
        step = float(np.max(np.abs(nxt - V)))
        V = nxt
        it += 1
        if step <= tol:
            break
    converged = step <= tol
    if not converged:
        raise NotConverged(f"no convergence after {it} iterations (last step {step:.3g})")
    V[0] = V[-1] = 0.0
    return DiscountedValue(float(delta), grid, V, it, step, converged)


def check_monotone_delta(
    spec: GainLossSpec, delta_lo: float, delta_hi: float, grid_cfg: GridConfig | None = None
) -> bool:
    """Is the value function weakly higher at ``delta_hi`` on the whole grid?"""
    if delta_lo > delta_hi:
        raise ValueError("need delta_lo <= delta_hi")
    lo = value_iteration(spec, delta_lo, grid_cfg)
    if delta_lo == delta_hi:
        return True
    hi = value_iteration(spec, delta_hi, grid_cfg)
    return bool(np.all(hi.values >= lo.values - MONOTONE_SLACK))


def ggn_infinite(spec: GainLossSpec, pi0: float, delta: float, max_depth: int = MAX_DEPTH) -> list[GgnLadder]:
    """Gradual-good-news chains without a horizon cap, shortest first.

    Bad-state indifference does not involve ``delta``, so chains are built
    exactly as in the finite game; each ladder carries the minimal horizon
    that fits it.  Chains that accumulate below 1 are cut at ``max_depth``
    beliefs (with a warning).
    """
    _check_delta(delta)
    if not 0.0 < pi0 < 1.0:
        return [GgnLadder(pi0, (), 2)]
    found: list[tuple[float, ...]] = []
    stack: list[tuple[float, ...]] = [()]
    while stack:
        prefix = stack.pop()
        found.append(prefix)
        if len(prefix) >= max_depth:
            log.warning("gradual-good-news chain cut at %d beliefs (last %.12g)", max_depth, prefix[-1])
            continue
        last = prefix[-1] if prefix else pi0
        stack.extend(prefix + (q,) for q in reversed(p_star(spec, last).roots) if q < TOP)
    out = []
    for b in sorted(found, key=lambda b: (len(b), b)):
        lad = GgnLadder(pi0, b, len(b) + 1)
        errs = ladder_errors(spec, lad)
        if errs:
            raise ArithmeticError(f"ladder failed re-verification: {errs[0]}")
        out.append(lad)
    return out
