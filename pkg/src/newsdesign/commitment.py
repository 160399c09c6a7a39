"""Optimal dynamic disclosure under commitment.

Backwards induction over periods: the continuation value at prior ``x``
in period ``t`` is the concave envelope of ``q -> N(q|x) + U*_{t+1}(q)``
evaluated at ``x``.  The news kernel ``N`` is pluggable so that the same
machinery serves the mean-based and the percentile-based models.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .concavify import (
    GridConfig,
    SampledFunction,
    cav_rows,
    concave_envelope,
    support_at,
    uniform_grid,
)
from .gainloss import GainLossSpec, mu_deriv, mu_eval
from .infostruct import Branch, Node, PosteriorTree, TreeBuilder

log = logging.getLogger(__name__)

SNAP = 1e-9


class NewsModel(Protocol):
    def matrix(self, grid: np.ndarray) -> np.ndarray:
        """``N[i, j] = N(grid[j] | grid[i])``."""

    def row(self, x: float, q: np.ndarray) -> np.ndarray:
        """``N(q | x)`` for a vector of new beliefs."""

    def terminal(self, q: np.ndarray) -> np.ndarray:
        """Expected news from full revelation at belief ``q``."""


@dataclass(frozen=True)
class MeanNews:
    """Mean-based news: ``N(q|x) = mu(q - x)``."""

    spec: GainLossSpec

    def matrix(self, grid):
        return self.spec.value(grid[None, :] - grid[:, None])

    def row(self, x, q):
        return self.spec.value(np.asarray(q) - x)

    def terminal(self, q):
        q = np.asarray(q, dtype=float)
        return q * self.spec.value(1.0 - q) + (1.0 - q) * self.spec.value(-q)


@dataclass(frozen=True)
class ValueLayer:
    period: int
    grid: np.ndarray
    values: np.ndarray  # U*_t on the grid
    no_info: np.ndarray  # U_t(x | x): stay put this period
    support_lo: np.ndarray
    support_hi: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def rows(self):
        for k in range(self.grid.size):
            yield (self.period, self.grid[k], self.no_info[k], self.values[k], self.support_lo[k], self.support_hi[k])


@dataclass(frozen=True)
class OptimalPolicy:
    pi0: float
    T: int
    layers: tuple[ValueLayer, ...]  # periods 1..T-1
    tree: PosteriorTree
    value: float

    def layer(self, t: int) -> ValueLayer:
        return self.layers[t - 1]

    @property
    def good_path(self) -> tuple[float, ...]:
        """Beliefs along the path reached with positive probability in state G
        that moves up at every informative step (the all-good-news path)."""
        tree = self.tree
        nid = tree.root
        out = [tree.pi0]
        while tree.nodes[nid].children:
            best = None
            for br in tree.nodes[nid].children:
                if br.prob_G <= 0:
                    continue
                if best is None or tree.belief(br.child) > tree.belief(best):
                    best = br.child
            nid = best
            out.append(tree.belief(nid))
        return tuple(out)


def _grid_with(n: int, pi0: float) -> np.ndarray:
    return np.union1d(uniform_grid(n), [pi0])


def backward_induction(grid: np.ndarray, news: np.ndarray, terminal: np.ndarray, T: int) -> list[ValueLayer]:
    """Value layers for periods ``T-1`` down to 1, returned in period order."""
    if T < 2:
        raise ValueError("T must be at least 2")
    cont = np.asarray(terminal, dtype=float)
    layers = []
    for t in range(T - 1, 0, -1):
        values, lo, hi = cav_rows(grid, news + cont[None, :], grid)
        layers.append(ValueLayer(t, grid, values, cont.copy(), lo, hi))
        cont = values
    layers.reverse()
    return layers


def _snap(b: float) -> float:
    if b < SNAP:
        return 0.0
    if b > 1.0 - SNAP:
        return 1.0
    return b


def _local_support(model: NewsModel, layers, t: int, x: float, cfg: GridConfig):
    """Support of the period-``t`` envelope at prior ``x`` (refined off-grid)."""
    grid = layers[0].grid
    if t == len(layers):
        cont = model.terminal
    else:
        cont = layers[t]

    def f(q):
        return model.row(x, q) + cont(q)

    env = concave_envelope(SampledFunction.from_callable(f, np.union1d(grid, [x])))
    sup = support_at(env, x)
    if not cfg.refine or cfg.refine_points == 0 or sup.is_single:
        return sup
    h = float(np.max(np.diff(grid)))
    extra = [np.linspace(max(0.0, p - h), min(1.0, p + h), cfg.refine_points) for p in sup.points]
    fine = np.union1d(env.grid, np.concatenate(extra))
    return support_at(concave_envelope(SampledFunction.from_callable(f, fine)), x)


def extract_tree(model: NewsModel, layers, pi0: float, T: int, cfg: GridConfig) -> PosteriorTree:
    """Follow optimal supports from the prior; reveal the state at ``T``."""
    b = TreeBuilder(pi0, T)

    def grow(nid: int, x: float, t: int) -> None:
        if t == T:
            if x in (0.0, 1.0):
                b.child(nid, 1.0, 1.0, x)
            else:
                b.child(nid, 1.0, 0.0, 1.0)
                b.child(nid, 0.0, 1.0, 0.0)
            return
        if x in (0.0, 1.0):
            b.chain(nid, T)
            return
        sup = _local_support(model, layers, t, x, cfg)
        if sup.is_single:
            grow(b.child(nid, 1.0, 1.0, x), x, t + 1)
            return
        for q, w in zip(sup.points, sup.weights):
            if w <= 0:
                continue
            pg = w * q / x
            pb = w * (1.0 - q) / (1.0 - x)
            qs = _snap(q)
            grow(b.child(nid, pg, pb, qs), qs, t + 1)

    grow(b.root, pi0, 1)
    return _renormalise(b.build())


def _renormalise(tree: PosteriorTree) -> PosteriorTree:
    """Make per-state branch probabilities sum to one exactly and drop stored beliefs.

    Supports computed on a grid satisfy Bayes plausibility only up to
    rounding; rescaling the branch probabilities keeps the tree exactly
    consistent, and beliefs are then re-derived by Bayes' rule.
    """
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        kids = node.children
        sg = sum(br.prob_G for br in kids)
        sb = sum(br.prob_B for br in kids)
        kids = tuple(
            Branch(br.child, br.prob_G / sg if sg > 0 else 0.0, br.prob_B / sb if sb > 0 else 0.0) for br in kids
        )
        nodes.append(Node(nid, node.period, kids, None))
    return PosteriorTree(tree.pi0, tree.T, nodes, tree.root)


def solve_model(model: NewsModel, pi0: float, T: int, cfg: GridConfig | None = None, grid: np.ndarray | None = None):
    """Backwards induction plus tree extraction for an arbitrary news kernel."""
    cfg = cfg or GridConfig()
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError(f"prior must lie in [0, 1], got {pi0}")
    if T < 2:
        raise ValueError("T must be at least 2")
    if grid is None:
        grid = _grid_with(cfg.n, pi0)
    news = model.matrix(grid)
    layers = backward_induction(grid, news, model.terminal(grid), T)
    value = float(layers[0](pi0))
    tree = extract_tree(model, layers, pi0, T, cfg)
    return OptimalPolicy(pi0, T, tuple(layers), tree, value)


def solve(spec: GainLossSpec, pi0: float, T: int, grid_cfg: GridConfig | None = None) -> OptimalPolicy:
    """Optimal information structure for a mean-based news-utility receiver."""
    return solve_model(MeanNews(spec), pi0, T, grid_cfg)


# ---------------------------------------------------------------------------
# two-period objects


def two_period_objective(spec: GainLossSpec, pi0: float) -> Callable[[np.ndarray], np.ndarray]:
    """``U_1(q | pi0)``: news now plus expected news from revelation next period."""
    model = MeanNews(spec)

    def U1(q):
        q = np.asarray(q, dtype=float)
        return model.row(pi0, q) + model.terminal(q)

    return U1


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    best_support: tuple[float, ...]
    weights: tuple[float, ...]


def brute_force_T2(spec: GainLossSpec, pi0: float, support_grid) -> BruteForceResult:
    """Exhaustive search over 1-, 2- and 3-point posterior distributions.

    The grid is used as given (``pi0``, 0 and 1 are added if missing).
    Ties are resolved toward fewer posteriors.
    """
    q = np.union1d(np.asarray(support_grid, dtype=float), [0.0, pi0, 1.0])
    U = two_period_objective(spec, pi0)(q)
    k0 = int(np.searchsorted(q, pi0))
    best = (float(U[k0]), (float(pi0),), (1.0,))
    tie = 1e-13

    left = np.flatnonzero(q < pi0)
    right = np.flatnonzero(q > pi0)
    if left.size and right.size:
        a = q[left][:, None]
        c = q[right][None, :]
        wa = (c - pi0) / (c - a)
        val = wa * U[left][:, None] + (1.0 - wa) * U[right][None, :]
        i, j = np.unravel_index(int(np.argmax(val)), val.shape)
        if val[i, j] > best[0] + tie:
            best = (float(val[i, j]), (float(q[left[i]]), float(q[right[j]])), (float(wa[i, j]), float(1 - wa[i, j])))

        # three points a < b < c; the weight on b ranges over a segment and the
        # objective is linear in it, so checking the far end of that segment is exhaustive
        for jb in range(1, q.size - 1):
            bq = q[jb]
            A = left[left < jb]
            C = right[right > jb]
            if not A.size or not C.size:
                continue
            a = q[A][:, None]
            c = q[C][None, :]
            wb = np.minimum((c - pi0) / (c - bq), (pi0 - a) / (bq - a))
            wa = ((c - pi0) - wb * (c - bq)) / (c - a)
            wc = 1.0 - wa - wb
            val = wa * U[A][:, None] + wb * U[jb] + wc * U[C][None, :]
            ok = (wa >= -1e-15) & (wc >= -1e-15)
            val = np.where(ok, val, -np.inf)
            i, j = np.unravel_index(int(np.argmax(val)), val.shape)
            if val[i, j] > best[0] + tie:
                pts = (float(q[A[i]]), float(bq), float(q[C[j]]))
                ws = (float(wa[i, j]), float(wb[i, j]), float(wc[i, j]))
                keep = [(p, w) for p, w in zip(pts, ws) if w > 1e-15]
                best = (float(val[i, j]), tuple(p for p, _ in keep), tuple(w for _, w in keep))
    return BruteForceResult(*best)


# ---------------------------------------------------------------------------
# closed forms and conditions


def quadratic_p_high(alpha_p: float, beta_p: float, alpha_n: float, beta_n: float, pi0: float, tol: float = 1e-15) -> float:
    """High posterior of the optimal two-period split under quadratic news utility.

    Root in ``(max(pi0, (1+c)/3), 1)`` of
    ``h(p) = (1+c) p^2 - 2 p^3 - (c pi0 - pi0^2)`` with
    ``c = (alpha_n - alpha_p) / (beta_n + beta_p)``, found by Newton steps
    kept inside a shrinking sign bracket.
    """
    bsum = beta_p + beta_n
    c = (alpha_n - alpha_p) / bsum
    if not c < 1.0:
        raise ValueError("need alpha_n - alpha_p < beta_n + beta_p for partial good news to be optimal")
    if not 0.0 < pi0 < 1.0:
        raise ValueError("prior must lie in (0, 1)")
    rhs = c * pi0 - pi0 * pi0

    def h(p):
        return (1.0 + c) * p * p - 2.0 * p ** 3 - rhs

    def dh(p):
        return 2.0 * (1.0 + c) * p - 6.0 * p * p

    lo = max(pi0, (1.0 + c) / 3.0, 1.0 / 3.0) + 1e-12
    hi = 1.0 - 1e-12
    flo, fhi = h(lo), h(hi)
    if not (flo > 0 > fhi):
        raise ValueError(f"no root of the optimality cubic in ({lo:.6g}, {hi:.6g})")
    p = 0.5 * (lo + hi)
    for _ in range(200):
        fp = h(p)
        if fp > 0:
            lo = p
        else:
            hi = p
        d = dh(p)
        step = fp / d if d != 0 else math.inf
        cand = p - step
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if abs(cand - p) <= tol * max(1.0, abs(p)) or hi - lo <= tol:
            return cand
        p = cand
    return p


@dataclass(frozen=True)
class Suboptimality:
    holds: bool
    lhs_minus_rhs: float


def one_shot_suboptimal(spec: GainLossSpec, pi0: float) -> Suboptimality:
    """Sufficient condition for one-shot resolution to be strictly suboptimal."""
    v0 = float(pi0)
    slope0 = mu_deriv(spec, 0.0, "right")
    slope1 = mu_deriv(spec, 1.0 - v0, "right" if v0 < 1.0 else "left")
    if math.isinf(slope0):
        return Suboptimality(True, math.inf)
    val = (
        float(mu_eval(spec, 1.0 - v0))
        - float(mu_eval(spec, -v0))
        + slope0
        - slope1
        + float(mu_eval(spec, -1.0))
    )
    return Suboptimality(val > 0, val)


def quadratic_suboptimality_margin(alpha_p, beta_p, alpha_n, beta_n, pi0) -> float:
    """Closed form of the suboptimality margin for quadratic news utility."""
    return (1.0 - pi0) * (alpha_p - alpha_n) + (1.0 - pi0 * pi0) * (beta_p + beta_n)


def chord_condition(
    spec: GainLossSpec | None,
    pi0: float,
    q: float,
    grid_cfg: GridConfig | None = None,
    objective: Callable[[np.ndarray], np.ndarray] | None = None,
    margin: float = 1e-10,
) -> bool:
    """Does the chord from ``(0, U_1(0))`` to ``(q, U_1(q))`` lie strictly above ``U_1`` on ``(0, pi0)``?"""
    if q < pi0:
        raise ValueError("q must be at least pi0")
    n = (grid_cfg or GridConfig()).n
    U = objective if objective is not None else two_period_objective(spec, pi0)
    p = np.linspace(0.0, pi0, n)[1:-1]
    if p.size == 0:
        return True
    u0 = float(U(np.array([0.0]))[0])
    uq = float(U(np.array([q]))[0])
    chord = u0 + (uq - u0) * p / q
    return bool(np.all(chord - U(p) > margin))
