"""Percentile-by-percentile news utility over consumption-utility distributions.

A belief ``p`` about a binary state induces the mixture ``p F_G + (1-p) F_B``
of consumption utilities; news from ``old`` to ``new`` integrates ``mu`` over
the quantile-wise differences ``Q_new(u) - Q_old(u)`` for ``u`` in (0, 1).

Two integration routes are provided.  ``percentile_news`` uses the midpoint
rule and works for any component; ``exact_news`` handles mixtures whose
quantile functions are piecewise linear (point masses and uniforms) by
integrating ``mu`` in closed form segment by segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .commitment import OptimalPolicy, solve_model
from .concavify import GridConfig
from .gainloss import GainLossSpec, Power, TwoPartLinear

N_QUAD = 10_000
QUANTILE_TOL = 1e-10
PERCENTILE_GRID = 401
FLAT_TOL = 1e-13
MAX_QUANTILE_STEPS = 200


# ---------------------------------------------------------------------------
# components


@dataclass(frozen=True)
class Degenerate:
    v: float

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.v, 1.0, 0.0)

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.v)

    @property
    def mean(self) -> float:
        return self.v


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"uniform needs hi > lo, got [{self.lo}, {self.hi}]")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"standard deviation must be positive, got {self.sd}")

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.sd)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))

    def quantile(self, u):
        return self.mean + self.sd * ndtri(np.asarray(u, dtype=float))


ConsumptionDist = Union[Degenerate, Uniform, Gaussian]


def _piecewise_linear(comp) -> bool:
    return isinstance(comp, (Degenerate, Uniform))


# ---------------------------------------------------------------------------
# piecewise-linear quantile functions


@dataclass(frozen=True)
class QuantileKnots:
    """Quantile function through ``(u[k], x[k])``, linear in between.

    ``u`` is non-decreasing; a repeated ``u`` marks a jump (a gap in the
    support) and a repeated ``x`` a flat stretch (an atom).
    """

    u: np.ndarray
    x: np.ndarray

    @classmethod
    def from_components(cls, weights: Sequence[float], comps: Sequence[ConsumptionDist]) -> "QuantileKnots":
        pairs = [(float(w), c) for w, c in zip(weights, comps) if w > 0]
        if not pairs:
            raise ValueError("mixture has no positive weight")
        if not all(_piecewise_linear(c) for _, c in pairs):
            raise TypeError("exact quantiles need point-mass or uniform components")
        pts = set()
        for _, c in pairs:
            pts.update((c.v,) if isinstance(c, Degenerate) else (c.lo, c.hi))
        xs = sorted(pts)

        def F(x, left):
            tot = 0.0
            for w, c in pairs:
                if isinstance(c, Degenerate):
                    tot += w * (c.v < x if left else c.v <= x)
                else:
                    tot += w * min(max((x - c.lo) / (c.hi - c.lo), 0.0), 1.0)
            return tot

        total = sum(w for w, _ in pairs)
        us, vs = [], []
        for x in xs:
            for uu in (F(x, True) / total, F(x, False) / total):
                if us and uu == us[-1] and x == vs[-1]:
                    continue
                us.append(uu)
                vs.append(x)
        us[0], us[-1] = 0.0, 1.0
        return cls(np.asarray(us), np.asarray(vs))

    def __call__(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}``."""
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(self.u, u, side="left"), 1, self.u.size - 1)
        u0, u1 = self.u[k - 1], self.u[k]
        x0, x1 = self.x[k - 1], self.x[k]
        span = u1 - u0
        t = np.divide(u - u0, span, out=np.ones_like(u), where=span > 0)
        return x0 + (x1 - x0) * t

    def segment_ends(self, a: np.ndarray, b: np.ndarray):
        """Values at ``a+`` and ``b-`` on the linear piece covering ``(a, b)``."""
        mid = 0.5 * (a + b)
        k = np.clip(np.searchsorted(self.u, mid, side="right"), 1, self.u.size - 1)
        u0, u1 = self.u[k - 1], self.u[k]
        x0, x1 = self.x[k - 1], self.x[k]
        slope = (x1 - x0) / (u1 - u0)
        return x0 + slope * (a - u0), x0 + slope * (b - u0)


def _linear_mu_integral(spec: GainLossSpec, da: np.ndarray, db: np.ndarray, length: np.ndarray) -> float:
    """``sum int mu`` over segments on which the argument runs linearly from ``da`` to ``db``."""
    diff = db - da
    flat = np.abs(diff) <= FLAT_TOL * np.maximum(1.0, np.abs(da))
    out = np.where(flat, spec.value(0.5 * (da + db)) * length, 0.0)
    steep = ~flat
    if np.any(steep):
        M = spec.antideriv(db[steep]) - spec.antideriv(da[steep])
        out[steep] = M / diff[steep] * length[steep]
    return float(np.sum(out))


def knots_news(new: QuantileKnots, old: QuantileKnots, spec: GainLossSpec) -> float:
    """Exact ``int_0^1 mu(Q_new(u) - Q_old(u)) du`` for piecewise-linear quantiles."""
    cuts = np.union1d(new.u, old.u)
    a, b = cuts[:-1], cuts[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    na, nb = new.segment_ends(a, b)
    oa, ob = old.segment_ends(a, b)
    return _linear_mu_integral(spec, na - oa, nb - ob, b - a)


def discrete_news(values: Sequence[float], new: Sequence[float], old: Sequence[float], spec: GainLossSpec) -> float:
    """Exact percentile news between two distributions on the same finite support."""
    comps = [Degenerate(float(v)) for v in values]
    return knots_news(QuantileKnots.from_components(new, comps), QuantileKnots.from_components(old, comps), spec)


# ---------------------------------------------------------------------------
# two-component mixtures


@dataclass(frozen=True)
class MixtureBelief:
    p: float
    good: ConsumptionDist
    bad: ConsumptionDist
    _knots: QuantileKnots | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.p}")
        if _piecewise_linear(self.good) and _piecewise_linear(self.bad):
            knots = QuantileKnots.from_components((self.p, 1.0 - self.p), (self.good, self.bad))
            object.__setattr__(self, "_knots", knots)

    @property
    def exact(self) -> bool:
        return self._knots is not None

    @property
    def knots(self) -> QuantileKnots:
        if self._knots is None:
            raise TypeError("mixture has a component without a piecewise-linear quantile")
        return self._knots

    @property
    def mean(self) -> float:
        return self.p * self.good.mean + (1.0 - self.p) * self.bad.mean

    def cdf(self, x):
        return self.p * self.good.cdf(x) + (1.0 - self.p) * self.bad.cdf(x)

    def quantile(self, u, tol: float = QUANTILE_TOL):
        """Generalised inverse CDF; exact for point masses and uniforms, else
        bracketed Newton/bisection to ``tol``."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise ValueError("quantile level must lie in (0, 1)")
        out = self._quantile(np.atleast_1d(u), tol)
        return out.reshape(u.shape) if u.ndim else float(out[0])

    def _quantile(self, u: np.ndarray, tol: float) -> np.ndarray:
        if self._knots is not None:
            return self._knots(u)
        if self.p == 1.0:
            return self.good.quantile(u)
        if self.p == 0.0:
            return self.bad.quantile(u)
        # at the smaller component quantile both CDFs are <= u, at the larger both are >= u
        qg, qb = self.good.quantile(u), self.bad.quantile(u)
        lo, hi = np.minimum(qg, qb), np.maximum(qg, qb)
        newton = isinstance(self.good, Gaussian) and isinstance(self.bad, Gaussian)
        if newton:
            # start at whichever component quantile already has the closer mixture CDF
            x = np.where(np.abs(self.cdf(lo) - u) <= np.abs(self.cdf(hi) - u), lo, hi)
        else:
            x = 0.5 * (lo + hi)
        act = np.flatnonzero(hi - lo > tol)
        for _ in range(MAX_QUANTILE_STEPS):
            if act.size == 0:
                return x
            xa, la, ha, ua = x[act], lo[act], hi[act], u[act]
            F = self.cdf(xa)
            below = F < ua
            la = np.where(below, xa, la)
            ha = np.where(below, ha, xa)
            mid = 0.5 * (la + ha)
            if newton:
                # Newton step, kept only where it lands strictly inside the bracket
                dens = self.p * self.good.pdf(xa) + (1.0 - self.p) * self.bad.pdf(xa)
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = xa - (F - ua) / dens
                ok = (step > la) & (step < ha)
                xn = np.where(ok, step, mid)
                done = (ha - la <= tol) | (ok & (np.abs(xn - xa) <= tol))
            else:
                xn = mid
                done = ha - la <= tol
            x[act], lo[act], hi[act] = xn, la, ha
            act = act[~done]
        raise ArithmeticError("quantile inversion did not converge")


def _same_components(a: MixtureBelief, b: MixtureBelief) -> None:
    if a.good != b.good or a.bad != b.bad:
        raise ValueError("news is defined between beliefs over the same component pair")


def quantile_levels(n_quad: int = N_QUAD) -> np.ndarray:
    return (np.arange(n_quad) + 0.5) / n_quad


def percentile_news(new: MixtureBelief, old: MixtureBelief, spec: GainLossSpec, n_quad: int = N_QUAD) -> float:
    """Midpoint-rule percentile news on ``n_quad`` equal quantile panels."""
    _same_components(new, old)
    u = quantile_levels(n_quad)
    return float(np.mean(spec.value(new.quantile(u) - old.quantile(u))))


def exact_news(new: MixtureBelief, old: MixtureBelief, spec: GainLossSpec) -> float:
    """Closed-form percentile news for point-mass and uniform components."""
    _same_components(new, old)
    return knots_news(new.knots, old.knots, spec)


# ---------------------------------------------------------------------------
# dynamic solver


class PercentileNews:
    """News kernel for the commitment solver: ``N(q | x)`` between mixtures."""

    def __init__(self, good: ConsumptionDist, bad: ConsumptionDist, spec: GainLossSpec, n_quad: int = N_QUAD):
        self.good, self.bad, self.spec = good, bad, spec
        self.u = quantile_levels(n_quad)
        self._cache: dict[float, np.ndarray] = {}

    def quantiles(self, beliefs) -> np.ndarray:
        beliefs = np.atleast_1d(np.asarray(beliefs, dtype=float))
        out = np.empty((beliefs.size, self.u.size))
        for i, b in enumerate(beliefs):
            key = float(b)
            row = self._cache.get(key)
            if row is None:
                row = MixtureBelief(key, self.good, self.bad).quantile(self.u)
                self._cache[key] = row
            out[i] = row
        return out

    def _news_from(self, Qx: np.ndarray, Qq: np.ndarray) -> np.ndarray:
        return np.mean(self.spec.value(Qq - Qx[None, :]), axis=1)

    def matrix(self, grid):
        Q = self.quantiles(grid)
        m = Q.shape[0]
        N = np.zeros((m, m))
        if not np.all(np.diff(Q, axis=0) >= 0.0):
            for i in range(m):
                N[i] = self._news_from(Q[i], Q)
            return N
        # quantiles rise with the belief, so moving up is pure gain and moving down pure loss
        for i in range(m):
            N[i, i + 1 :] = np.mean(self.spec.gain_value(Q[i + 1 :] - Q[i]), axis=1)
            N[i, :i] = -np.mean(self.spec.loss_value(Q[i] - Q[:i]), axis=1)
        return N

    def row(self, x, q):
        return self._news_from(self.quantiles(x)[0], self.quantiles(q))

    def terminal(self, q):
        q = np.asarray(q, dtype=float)
        Q = self.quantiles(q)
        ends = self.quantiles([0.0, 1.0])
        to_bad = np.mean(self.spec.value(ends[0][None, :] - Q), axis=1)
        to_good = np.mean(self.spec.value(ends[1][None, :] - Q), axis=1)
        return q * to_good + (1.0 - q) * to_bad


def solve_percentile(
    good: ConsumptionDist,
    bad: ConsumptionDist,
    spec: GainLossSpec,
    pi0: float,
    T: int,
    grid_cfg: GridConfig | None = None,
    n_quad: int = N_QUAD,
) -> OptimalPolicy:
    """Optimal disclosure when news is measured percentile by percentile."""
    cfg = grid_cfg or GridConfig(n=PERCENTILE_GRID)
    return solve_model(PercentileNews(good, bad, spec, n_quad), pi0, T, cfg)


def gaussian_environment(sigma: float) -> tuple[Gaussian, Gaussian]:
    """Good state ``N(1, sigma^2)``, bad state ``N(0, sigma^2)``."""
    return Gaussian(1.0, sigma), Gaussian(0.0, sigma)


@dataclass(frozen=True)
class InducedLinear:
    scale: float
    spec: TwoPartLinear


def induced_two_part_linear(spec: GainLossSpec) -> InducedLinear:
    """Mean-based equivalent when the states pay point masses at 0 and 1.

    Moving from ``x`` to ``q`` shifts a quantile band of width ``|q - x|`` by
    exactly one unit, so news is ``mu(1) (q - x)`` for good news and
    ``mu(-1) (x - q)`` for bad news: a two-part-linear kernel scaled by ``mu(1)``.
    """
    gain, loss = float(spec.value(1.0)), float(spec.value(-1.0))
    if not gain > 0:
        raise ValueError("need mu(1) > 0")
    return InducedLinear(gain, TwoPartLinear(-loss / gain))


# ---------------------------------------------------------------------------
# many states: improving on one-shot resolution


@dataclass(frozen=True)
class Improvement:
    delta_vs_one_shot: float
    one_shot: float
    muddled: float
    pooling_share: float


def kr_improvement_value(prior: Sequence[float], consumption_utils: Sequence[float], spec: GainLossSpec) -> Improvement:
    """Gain from pooling the second-best state with part of the best state.

    Period 1 reveals every state below the top two, reveals the top state
    with some probability, and otherwise sends a pooled message whose
    posterior puts the prior weight on the top state.  Period 2 reveals
    everything.  Both structures are evaluated exactly.
    """
    pi = np.asarray(prior, dtype=float)
    v = np.asarray(consumption_utils, dtype=float)
    K = pi.size
    if K < 3:
        raise ValueError("need at least three states")
    if v.shape != pi.shape:
        raise ValueError("prior and consumption utilities differ in length")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError("prior must be a strictly positive probability vector")
    if np.any(np.diff(v) <= 0):
        raise ValueError("consumption utilities must be strictly increasing")
    pi = pi / pi.sum()
    eye = np.eye(K)

    def N(new, old):
        return discrete_news(v, new, old, spec)

    reveal = [N(eye[k], pi) for k in range(K)]
    one_shot = float(np.dot(pi, reveal))

    share = pi[K - 2] / (1.0 - pi[K - 1])  # P[pooled message | top state]
    post = np.zeros(K)
    post[K - 1] = pi[K - 1]
    post[K - 2] = 1.0 - pi[K - 1]
    p_pool = pi[K - 2] + pi[K - 1] * share
    muddled = float(np.dot(pi[: K - 2], reveal[: K - 2]))
    muddled += pi[K - 1] * (1.0 - share) * reveal[K - 1]
    muddled += p_pool * (N(post, pi) + post[K - 2] * N(eye[K - 2], post) + post[K - 1] * N(eye[K - 1], post))
    return Improvement(float(muddled - one_shot), one_shot, float(muddled), float(share))


@dataclass(frozen=True)
class ResidualGain:
    max_gain: float
    argmax_eps: float
    eps: np.ndarray
    gains: np.ndarray


def default_eps_grid(n: int = 200) -> np.ndarray:
    return np.logspace(-4, math.log10(0.2), n)


def residual_power_gain(
    L: float,
    J: float,
    alpha: float,
    lam: float,
    eps_grid: Sequence[float] | None = None,
    pi0: float = 0.5,
) -> ResidualGain:
    """Improvement over one-shot resolution from a slightly noisy good-news message.

    Consumption utility is uniform on ``[0, L]`` in the bad state and on
    ``[J, J + L]`` in the good state; gain-loss utility is a power function
    with exponent ``alpha`` on both sides and loss weight ``lam``.  The
    message is sent always in the good state and sometimes in the bad
    state, so that its posterior is ``1 - eps``.
    """
    if not (L > 0 and J > 0):
        raise ValueError("need L > 0 and J > 0")
    if not 0.0 < pi0 < 1.0:
        raise ValueError("prior must lie in (0, 1)")
    spec = Power(alpha, alpha, lam)
    eps = default_eps_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if np.any((eps <= 0) | (eps > 1.0 - pi0)):
        raise ValueError("each eps must lie in (0, 1 - pi0]")
    good, bad = Uniform(J, J + L), Uniform(0.0, L)

    def mix(p):
        return MixtureBelief(float(p), good, bad)

    prior, top, bottom = mix(pi0), mix(1.0), mix(0.0)
    base_top = exact_news(top, prior, spec)
    base_bottom = exact_news(bottom, prior, spec)
    gains = np.empty(eps.size)
    for i, e in enumerate(eps):
        q = mix(1.0 - e)
        up = exact_news(q, prior, spec)
        gains[i] = pi0 * (up + exact_news(top, q, spec) - base_top) + e / (1.0 - e) * pi0 * (
            up + exact_news(bottom, q, spec) - base_bottom
        )
    k = int(np.argmax(gains))
    return ResidualGain(float(gains[k]), float(eps[k]), eps, gains)
