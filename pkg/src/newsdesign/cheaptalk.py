"""Cheap-talk equilibria with a benevolent but uncommitted sender.

The central object is the indifference set ``P*(pi)``: beliefs ``x > pi``
such that, in the bad state, inducing ``x`` and then 0 is worth exactly as
much as inducing 0 immediately.  Gradual-good-news equilibria are
increasing chains through these sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .gainloss import (
    GainLossSpec,
    LambdaScaled,
    MuPos,
    Quadratic,
    check_shape,
    mu_deriv,
    mu_eval,
)

SCAN_PANELS = 10_000
ROOT_TOL = 1e-12
LADDER_TOL = 1e-9
TANGENT_TOL = 1e-9
TOP = 1.0 - 1e-12


def indifference_gap(spec: GainLossSpec, x, pi: float):
    """``D(x) = N_B(x; pi) - N_B(0; pi)``."""
    x = np.asarray(x, dtype=float)
    return spec.value(x - pi) + spec.value(-x) - spec.value(-pi)


@dataclass(frozen=True)
class PStar:
    pi: float
    roots: tuple[float, ...]
    tangent: tuple[bool, ...]

    def __iter__(self) -> Iterator[float]:
        return iter(self.roots)

    def __len__(self) -> int:
        return len(self.roots)

    def __bool__(self) -> bool:
        return bool(self.roots)


def _bisect(f, a: float, b: float, fa: float, tol: float) -> float:
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _golden_min(f, a: float, b: float, tol: float = 1e-13) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def p_star_scan(spec: GainLossSpec, pi: float, tol: float = ROOT_TOL, panels: int = SCAN_PANELS) -> PStar:
    """Roots of ``D`` on ``(pi, 1]`` by sign scan and bisection."""
    if not 0.0 < pi < 1.0:
        raise ValueError(f"pi must lie in (0, 1), got {pi}")

    def D(x):
        return float(indifference_gap(spec, x, pi))

    xs = pi + (1.0 - pi) * np.arange(1, panels + 1) / panels
    ds = indifference_gap(spec, xs, pi)
    roots: list[float] = []
    flags: list[bool] = []
    for k in np.flatnonzero(ds == 0.0):
        roots.append(float(xs[k]))
        flags.append(False)
    pos = ds > 0
    cross = np.flatnonzero((ds[:-1] != 0.0) & (ds[1:] != 0.0) & (pos[:-1] != pos[1:]))
    for k in cross:
        roots.append(_bisect(D, float(xs[k]), float(xs[k + 1]), float(ds[k]), tol))
        flags.append(False)
    # touching without crossing: a local extremum of D close to zero
    a = np.abs(ds)
    touch = np.flatnonzero(
        (a[1:-1] < a[:-2]) & (a[1:-1] <= a[2:]) & (pos[:-2] == pos[1:-1]) & (pos[1:-1] == pos[2:])
        & (a[1:-1] < 1e-4)
    ) + 1
    for k in touch:
        xm = _golden_min(lambda x: abs(D(x)), float(xs[k - 1]), float(xs[k + 1]))
        if abs(D(xm)) <= TANGENT_TOL and not any(abs(xm - r) < 1e-8 for r in roots):
            roots.append(xm)
            flags.append(True)
    order = np.argsort(roots)
    return PStar(pi, tuple(float(roots[i]) for i in order), tuple(flags[i] for i in order))


def p_star_quadratic(spec: Quadratic, pi: float) -> PStar:
    """Closed-form indifference belief for quadratic news utility."""
    if not 0.0 < pi < 1.0:
        raise ValueError(f"pi must lie in (0, 1), got {pi}")
    a = spec.alpha_n - spec.alpha_p
    db = spec.beta_p - spec.beta_n
    if db == 0.0:
        if abs(2.0 * spec.beta_n * pi - a) <= 1e-15:
            raise ValueError("indifference holds on the whole interval; P* is not finite")
        return PStar(pi, (), ())
    x = (pi * (spec.beta_p + spec.beta_n) - a) / db
    if pi < x <= 1.0:
        return PStar(pi, (float(x),), (False,))
    return PStar(pi, (), ())


def p_star(spec: GainLossSpec, pi: float, tol: float = ROOT_TOL) -> PStar:
    if isinstance(spec, Quadratic):
        return p_star_quadratic(spec, pi)
    return p_star_scan(spec, pi, tol)


# ---------------------------------------------------------------------------
# ladders


@dataclass(frozen=True)
class GgnLadder:
    pi0: float
    beliefs: tuple[float, ...]
    T: int

    @property
    def J(self) -> int:
        return len(self.beliefs)

    @property
    def increments(self) -> tuple[float, ...]:
        full = (self.pi0,) + self.beliefs
        return tuple(b - a for a, b in zip(full, full[1:]))


@dataclass(frozen=True)
class EquilibriumPayoff:
    value_good: float
    value_bad: float
    total: float


def ladder_errors(spec: GainLossSpec, ladder: GgnLadder) -> list[str]:
    errs = []
    if ladder.J > ladder.T - 1:
        errs.append(f"{ladder.J} intermediate beliefs do not fit a horizon of {ladder.T}")
    prev = ladder.pi0
    for q in ladder.beliefs:
        if not prev < q < 1.0:
            errs.append(f"belief {q} does not lie in ({prev}, 1)")
        elif abs(float(indifference_gap(spec, q, prev))) > LADDER_TOL:
            errs.append(f"belief {q} is not bad-state indifferent after {prev}")
        prev = q
    return errs


def ggn_enumerate(spec: GainLossSpec, pi0: float, T: int, max_ladders: int = 10_000) -> list[GgnLadder]:
    """All deterministic gradual-good-news ladders of length at most ``T - 1``."""
    if T < 2:
        raise ValueError("T must be at least 2")
    if not 0.0 < pi0 < 1.0:
        return [GgnLadder(pi0, (), T)]
    found: list[tuple[float, ...]] = []

    def dfs(prefix: tuple[float, ...]) -> None:
        if len(found) >= max_ladders:
            return
        found.append(prefix)
        if len(prefix) >= T - 1:
            return
        last = prefix[-1] if prefix else pi0
        for q in p_star(spec, last):
            if q < TOP:
                dfs(prefix + (q,))

    dfs(())
    ladders = [GgnLadder(pi0, b, T) for b in sorted(found, key=lambda b: (len(b), b))]
    for lad in ladders:
        errs = ladder_errors(spec, lad)
        if errs:
            raise ArithmeticError(f"ladder failed re-verification: {errs[0]}")
    return ladders


def ggn_payoff(spec: GainLossSpec, ladder: GgnLadder) -> EquilibriumPayoff:
    errs = ladder_errors(spec, ladder)
    if errs:
        raise ValueError(f"invalid ladder: {errs[0]}")
    path = np.array((ladder.pi0,) + ladder.beliefs + (1.0,))
    good = float(np.sum(mu_eval(spec, np.diff(path))))
    bad = float(mu_eval(spec, -ladder.pi0))
    return EquilibriumPayoff(good, bad, ladder.pi0 * good + (1.0 - ladder.pi0) * bad)


@dataclass(frozen=True)
class BestPayoff:
    payoff: EquilibriumPayoff
    ladder: GgnLadder


def best_ggn_payoff(spec: GainLossSpec, pi0: float, T: int) -> BestPayoff:
    """Highest payoff among deterministic gradual-good-news equilibria (babbling included)."""
    best = None
    for lad in ggn_enumerate(spec, pi0, T):
        pay = ggn_payoff(spec, lad)
        if best is None or pay.total > best.payoff.total + 1e-12:
            best = BestPayoff(pay, lad)
    return best


def increasing_increments(ladder: GgnLadder | Sequence[float], pi0: float | None = None) -> bool:
    """Are the steps ``q(j) - q(j-1)`` strictly increasing?  Needs at least two beliefs."""
    if not isinstance(ladder, GgnLadder):
        seq = tuple(float(v) for v in ladder)
        if pi0 is None:
            pi0, seq = seq[0], seq[1:]
        ladder = GgnLadder(pi0, seq, len(seq) + 1)
    if ladder.J < 2:
        raise ValueError("need at least two intermediate beliefs")
    inc = ladder.increments
    return all(a < b for a, b in zip(inc, inc[1:]))


# ---------------------------------------------------------------------------
# uniqueness of babbling


@dataclass(frozen=True)
class BabblingVerdict:
    unique: bool | None
    reason: str
    witness: float | None = None


def _min_ratio(spec: GainLossSpec, pi0: float, n: int = SCAN_PANELS) -> float:
    z = np.linspace(0.0, 1.0 - pi0, n + 1)
    num = np.array([mu_deriv(spec, float(v), "right") for v in z])
    den = np.array([mu_deriv(spec, float(-(pi0 + v)), "left") for v in z])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    return float(np.min(r))


def lambda_bound(base: MuPos, pi0: float, n: int = SCAN_PANELS) -> float:
    """``min over z in [0, 1-pi0] of base'(z) / base'(pi0 + z)``."""
    z = np.linspace(0.0, 1.0 - pi0, n + 1)
    r = np.array([base.deriv(float(v)) / base.deriv(float(pi0 + v)) for v in z])
    return float(np.min(r))


def babbling_unique(spec: GainLossSpec, pi0: float, T: int = 2) -> BabblingVerdict:
    """Sufficient conditions for babbling to be the only equilibrium payoff.

    The ratio and lambda conditions are two-period results and are only
    applied when ``T == 2``.
    """
    shape = check_shape(spec)
    if spec.symmetric and shape.diminishing_sensitivity:
        return BabblingVerdict(True, "symmetric and strictly concave on gains")
    if 0.0 < pi0 < 1.0:
        ps = p_star(spec, pi0)
        if ps and T >= 2:
            w = next((q for q in ps if q < TOP), None)
            if w is not None:
                return BabblingVerdict(False, "indifference set is nonempty", w)
    if T == 2 and 0.0 < pi0 < 1.0:
        if isinstance(spec, LambdaScaled):
            bound = lambda_bound(spec.base, pi0)
            if spec.lam < bound:
                return BabblingVerdict(True, f"lambda {spec.lam:g} below the curvature bound {bound:.6g}")
        if shape.greater_sensitivity_to_losses and _min_ratio(spec, pi0) > 1.0:
            return BabblingVerdict(True, "gain/loss slope ratio exceeds 1 on [0, 1-pi0]")
    return BabblingVerdict(None, "no sufficient condition applies")


# ---------------------------------------------------------------------------
# loss-aversion thresholds


def lambda_threshold(base: MuPos, pi0: float, tol: float = 1e-10, panels: int = SCAN_PANELS) -> float:
    """Smallest loss-aversion coefficient at which ``P*(pi0)`` becomes nonempty.

    Bisection on ``lam`` of ``min over x in (pi0, 1] of D_lam(x) <= 0``.
    """
    if not base.infinite_slope_at_zero:
        raise ValueError("threshold needs a base with infinite slope at 0")
    if not 0.0 < pi0 < 1.0:
        raise ValueError("pi0 must lie in (0, 1)")
    xs = pi0 + (1.0 - pi0) * np.arange(1, panels + 1) / panels
    gain = base.value(xs - pi0)
    drop = base.value(xs) - base.value(pi0)

    def min_gap(lam: float) -> float:
        d = gain - lam * drop
        k = int(np.argmin(d))
        best = float(d[k])
        if 0 < k < panels - 1:
            a, b = float(xs[k - 1]), float(xs[k + 1])
            f = lambda x: float(base.value(x - pi0) - lam * (base.value(x) - base.value(pi0)))
            best = min(best, f(_golden_min(f, a, b)))
        return best

    lo, hi = 1.0, 2.0
    while min_gap(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise ArithmeticError("threshold diverges")
    if min_gap(lo) <= 0:
        return lo
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if min_gap(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lambda_threshold_boundary(base: MuPos, pi0: float) -> float:
    """``base(1-pi0) / (base(1) - base(pi0))``: indifference exactly at x = 1."""
    return float(base.value(1.0 - pi0) / (base.value(1.0) - base.value(pi0)))


def dominated_lottery_threshold(p: float) -> float:
    """Loss aversion above which a sqrt receiver prefers losing for sure to winning with probability ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return math.sqrt(p) * (1.0 + math.sqrt(1.0 - p)) / (1.0 - p)


def lottery_value(p: float, lam: float) -> float:
    """Consumption plus news utility of the lottery relative to a sure loss."""
    return p + p * math.sqrt(1.0 - p) - lam * (1.0 - p) * math.sqrt(p)
