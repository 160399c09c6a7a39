"""Gain-loss (news) utility families.

Every family is stored as a pair of branch functions on [0, 1]: a gain
branch ``g`` and a loss-magnitude branch ``l`` with ``g(0) = l(0) = 0``, so
that ``mu(x) = g(x) for x >= 0`` and ``mu(x) = -l(-x) for x < 0``.  The four
public families only differ in which branches they pick.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Union

import numpy as np

DOMAIN_SLACK = 1e-12
SHAPE_GRID = 10_000
SHAPE_MARGIN = 1e-12


class DomainError(ValueError):
    """Raised when mu is evaluated outside [-1, 1]."""


# ---------------------------------------------------------------------------
# branch functions on [0, 1]


@dataclass(frozen=True)
class Sqrt:
    """``y -> sqrt(y)``."""

    def value(self, y):
        return np.sqrt(y)

    def deriv(self, y: float) -> float:
        return math.inf if y == 0 else 0.5 / math.sqrt(y)

    def antideriv(self, y):
        return (2.0 / 3.0) * np.power(y, 1.5)

    @property
    def infinite_slope_at_zero(self) -> bool:
        return True

    @property
    def strictly_concave(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"kind": "sqrt"}


@dataclass(frozen=True)
class PowerAlpha:
    """``y -> y**alpha`` with ``0 < alpha < 1``."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"power exponent must lie in (0, 1), got {self.alpha}")

    def value(self, y):
        return np.power(y, self.alpha)

    def deriv(self, y: float) -> float:
        return math.inf if y == 0 else self.alpha * y ** (self.alpha - 1.0)

    def antideriv(self, y):
        return np.power(y, self.alpha + 1.0) / (self.alpha + 1.0)

    @property
    def infinite_slope_at_zero(self) -> bool:
        return True

    @property
    def strictly_concave(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"kind": "power", "alpha": self.alpha}


@dataclass(frozen=True)
class QuadraticPos:
    """``y -> alpha*y - beta*y**2``; increasing on [0, 1] needs ``alpha >= 2*beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("quadratic branch needs alpha > 0 and beta > 0")
        if self.alpha < 2.0 * self.beta:
            raise ValueError(
                f"quadratic branch not increasing on [0,1]: alpha={self.alpha} < 2*beta={2 * self.beta}"
            )

    def value(self, y):
        return self.alpha * y - self.beta * np.square(y)

    def deriv(self, y: float) -> float:
        return self.alpha - 2.0 * self.beta * y

    def antideriv(self, y):
        return 0.5 * self.alpha * np.square(y) - self.beta * np.power(y, 3) / 3.0

    @property
    def infinite_slope_at_zero(self) -> bool:
        return False

    @property
    def strictly_concave(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"kind": "quadratic", "alpha": self.alpha, "beta": self.beta}


MuPos = Union[Sqrt, PowerAlpha, QuadraticPos]


@dataclass(frozen=True)
class _Scaled:
    """``y -> scale * base(y)``; ``base=None`` means the identity."""

    base: MuPos | None
    scale: float = 1.0

    def value(self, y):
        v = y if self.base is None else self.base.value(y)
        return self.scale * v

    def deriv(self, y: float) -> float:
        d = 1.0 if self.base is None else self.base.deriv(y)
        return self.scale * d

    def antideriv(self, y):
        a = 0.5 * np.square(y) if self.base is None else self.base.antideriv(y)
        return self.scale * a


# ---------------------------------------------------------------------------
# families


class _Family:
    """Shared evaluation; subclasses provide ``_gain`` and ``_loss`` branches."""

    family = ""

    @property
    def _gain(self) -> _Scaled:
        raise NotImplementedError

    @property
    def _loss(self) -> _Scaled:
        raise NotImplementedError

    def value(self, x):
        """Unchecked vectorised evaluation (any real argument)."""
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 0.0)
        neg = np.maximum(-x, 0.0)
        out = self._gain.value(pos) - self._loss.value(neg)
        return out if out.ndim else float(out)

    def gain_value(self, y):
        """``mu(y)`` for ``y >= 0`` (no sign split)."""
        return self._gain.value(np.asarray(y, dtype=float))

    def loss_value(self, y):
        """``-mu(-y)`` for ``y >= 0`` (no sign split)."""
        return self._loss.value(np.asarray(y, dtype=float))

    def antideriv(self, x):
        """``int_0^x mu(s) ds``, used for exact integration of piecewise-linear arguments."""
        x = np.asarray(x, dtype=float)
        out = self._gain.antideriv(np.maximum(x, 0.0)) + self._loss.antideriv(np.maximum(-x, 0.0))
        return out if out.ndim else float(out)

    def deriv(self, x: float, side: str = "right") -> float:
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        if x > 0 or (x == 0 and side == "right"):
            return float(self._gain.deriv(x))
        return float(self._loss.deriv(-x))

    @property
    def symmetric(self) -> bool:
        return False

    def to_json(self) -> dict:
        raise NotImplementedError

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class Quadratic(_Family):
    alpha_p: float
    beta_p: float
    alpha_n: float
    beta_n: float

    family = "quadratic"

    def __post_init__(self):
        # constructing the branches validates positivity and monotonicity
        QuadraticPos(self.alpha_p, self.beta_p)
        QuadraticPos(self.alpha_n, self.beta_n)

    @property
    def _gain(self):
        return _Scaled(QuadraticPos(self.alpha_p, self.beta_p))

    @property
    def _loss(self):
        return _Scaled(QuadraticPos(self.alpha_n, self.beta_n))

    @property
    def symmetric(self) -> bool:
        return self.alpha_p == self.alpha_n and self.beta_p == self.beta_n

    def to_json(self):
        return {
            "family": "quadratic",
            "alpha_p": self.alpha_p,
            "beta_p": self.beta_p,
            "alpha_n": self.alpha_n,
            "beta_n": self.beta_n,
        }


@dataclass(frozen=True)
class Power(_Family):
    alpha: float
    beta: float
    lam: float

    family = "power"

    def __post_init__(self):
        PowerAlpha(self.alpha)
        PowerAlpha(self.beta)
        if self.lam < 1.0:
            raise ValueError(f"power family needs lambda >= 1, got {self.lam}")

    @property
    def _gain(self):
        return _Scaled(PowerAlpha(self.alpha))

    @property
    def _loss(self):
        return _Scaled(PowerAlpha(self.beta), self.lam)

    @property
    def symmetric(self) -> bool:
        return self.alpha == self.beta and self.lam == 1.0

    def to_json(self):
        return {"family": "power", "alpha": self.alpha, "beta": self.beta, "lambda": self.lam}


@dataclass(frozen=True)
class LambdaScaled(_Family):
    """``mu(x) = base(x)`` on gains and ``mu(-x) = -lam * base(x)`` on losses."""

    base: MuPos
    lam: float

    family = "lambda_scaled"

    def __post_init__(self):
        if self.lam < 1.0:
            raise ValueError(f"lambda-scaled family needs lambda >= 1, got {self.lam}")

    @property
    def _gain(self):
        return _Scaled(self.base)

    @property
    def _loss(self):
        return _Scaled(self.base, self.lam)

    @property
    def symmetric(self) -> bool:
        return self.lam == 1.0

    def to_json(self):
        return {"family": "lambda_scaled", "base": self.base.to_json(), "lambda": self.lam}


@dataclass(frozen=True)
class TwoPartLinear(_Family):
    lam: float

    family = "two_part_linear"

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError(f"two-part linear needs lambda >= 0, got {self.lam}")

    @property
    def _gain(self):
        return _Scaled(None)

    @property
    def _loss(self):
        return _Scaled(None, self.lam)

    @property
    def symmetric(self) -> bool:
        return self.lam == 1.0

    def to_json(self):
        return {"family": "two_part_linear", "lambda": self.lam}


GainLossSpec = Union[Quadratic, Power, LambdaScaled, TwoPartLinear]


def sqrt_spec(lam: float) -> LambdaScaled:
    """The workhorse ``sqrt(x)`` / ``-lam*sqrt(-x)`` specification."""
    return LambdaScaled(Sqrt(), lam)


# ---------------------------------------------------------------------------
# JSON


def _take(obj: Mapping[str, Any], allowed: set[str], required: set[str], where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"unknown keys in {where}: {sorted(extra)}")
    missing = required - set(obj)
    if missing:
        raise ValueError(f"missing keys in {where}: {sorted(missing)}")


def _num(obj: Mapping[str, Any], key: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValueError(f"{key} must be a number, got {val!r}")
    if not math.isfinite(val):
        raise ValueError(f"{key} must be finite")
    return float(val)


def base_from_json(obj: Mapping[str, Any]) -> MuPos:
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise ValueError("base must be an object with a 'kind' key")
    kind = obj["kind"]
    if kind == "sqrt":
        _take(obj, {"kind"}, {"kind"}, "sqrt base")
        return Sqrt()
    if kind == "power":
        _take(obj, {"kind", "alpha"}, {"kind", "alpha"}, "power base")
        return PowerAlpha(_num(obj, "alpha"))
    if kind == "quadratic":
        _take(obj, {"kind", "alpha", "beta"}, {"kind", "alpha", "beta"}, "quadratic base")
        return QuadraticPos(_num(obj, "alpha"), _num(obj, "beta"))
    raise ValueError(f"unknown base kind {kind!r}")


def spec_from_json(obj: Mapping[str, Any] | str) -> GainLossSpec:
    """Parse a spec object (or its JSON text); unknown keys are rejected."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, Mapping) or "family" not in obj:
        raise ValueError("spec must be an object with a 'family' key")
    fam = obj["family"]
    if fam == "quadratic":
        keys = {"family", "alpha_p", "beta_p", "alpha_n", "beta_n"}
        _take(obj, keys, keys, "quadratic spec")
        return Quadratic(*(_num(obj, k) for k in ("alpha_p", "beta_p", "alpha_n", "beta_n")))
    if fam == "power":
        keys = {"family", "alpha", "beta", "lambda"}
        _take(obj, keys, keys, "power spec")
        return Power(_num(obj, "alpha"), _num(obj, "beta"), _num(obj, "lambda"))
    if fam == "lambda_scaled":
        keys = {"family", "base", "lambda"}
        _take(obj, keys, keys, "lambda_scaled spec")
        return LambdaScaled(base_from_json(obj["base"]), _num(obj, "lambda"))
    if fam == "sqrt":
        _take(obj, {"family", "lambda"}, {"family", "lambda"}, "sqrt spec")
        return sqrt_spec(_num(obj, "lambda"))
    if fam == "two_part_linear":
        _take(obj, {"family", "lambda"}, {"family", "lambda"}, "two_part_linear spec")
        return TwoPartLinear(_num(obj, "lambda"))
    raise ValueError(f"unknown family {fam!r}")


# ---------------------------------------------------------------------------
# public operations


def _check_domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("mu evaluated at a non-finite argument")
    if arr.size and np.max(np.abs(arr)) > 1.0 + DOMAIN_SLACK:
        raise DomainError(f"mu is defined on [-1, 1]; got max |x| = {np.max(np.abs(arr))!r}")
    return np.clip(arr, -1.0, 1.0)


def mu_eval(spec: GainLossSpec, x):
    """mu(x) for scalar or array ``x`` in [-1, 1]."""
    return spec.value(_check_domain(x))


def mu_deriv(spec: GainLossSpec, x: float, side: str = "right") -> float:
    """One-sided derivative; ``math.inf`` encodes an infinite slope at 0+."""
    _check_domain(x)
    return spec.deriv(float(np.clip(x, -1.0, 1.0)), side)


def n_bad(spec: GainLossSpec, x, pi):
    """Two-period bad-state total: move to ``x`` then to 0."""
    x = np.asarray(x, dtype=float)
    return mu_eval(spec, x - pi) + mu_eval(spec, -x)


def n_good(spec: GainLossSpec, p, pi):
    """Two-period good-state total: move to ``p`` then to 1."""
    p = np.asarray(p, dtype=float)
    return mu_eval(spec, p - pi) + mu_eval(spec, 1.0 - p)


def babbling_payoff(spec: GainLossSpec, pi0):
    """Expected news utility when everything is learned in a single step."""
    pi0 = np.asarray(pi0, dtype=float)
    out = pi0 * mu_eval(spec, 1.0 - pi0) + (1.0 - pi0) * mu_eval(spec, -pi0)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# shape predicates


@dataclass(frozen=True)
class ShapeReport:
    diminishing_sensitivity: bool
    weak_loss_aversion: bool
    strict_loss_aversion: bool
    greater_sensitivity_to_losses: bool
    monotone: bool

    def as_dict(self) -> dict:
        return {
            "diminishing_sensitivity": self.diminishing_sensitivity,
            "weak_loss_aversion": self.weak_loss_aversion,
            "strict_loss_aversion": self.strict_loss_aversion,
            "greater_sensitivity_to_losses": self.greater_sensitivity_to_losses,
            "monotone": self.monotone,
        }


def check_shape(spec: GainLossSpec) -> ShapeReport:
    """Shape flags from closed-form parameter conditions."""
    if isinstance(spec, Quadratic):
        a = spec.alpha_n - spec.alpha_p
        b = spec.beta_n - spec.beta_p
        # -mu(-x) - mu(x) = x*(a - b*x) and mu'(-x) - mu'(x) = a - 2*b*x on (0, 1]
        return ShapeReport(
            diminishing_sensitivity=True,
            weak_loss_aversion=a >= 0 and a >= b,
            strict_loss_aversion=a >= 0 and a > b,
            greater_sensitivity_to_losses=a >= 0 and a >= 2 * b,
            monotone=spec.alpha_p >= 2 * spec.beta_p and spec.alpha_n >= 2 * spec.beta_n,
        )
    if isinstance(spec, Power):
        al, be, lam = spec.alpha, spec.beta, spec.lam
        return ShapeReport(
            diminishing_sensitivity=True,
            weak_loss_aversion=be <= al and lam >= 1,
            strict_loss_aversion=be <= al and lam > 1,
            greater_sensitivity_to_losses=be <= al and lam * be >= al,
            monotone=True,
        )
    if isinstance(spec, LambdaScaled):
        if not isinstance(spec.base, (Sqrt, PowerAlpha, QuadraticPos)):
            return sampled_shape(spec)
        return ShapeReport(
            diminishing_sensitivity=spec.base.strictly_concave,
            weak_loss_aversion=spec.lam >= 1,
            strict_loss_aversion=spec.lam > 1,
            greater_sensitivity_to_losses=spec.lam >= 1,
            monotone=True,
        )
    if isinstance(spec, TwoPartLinear):
        return ShapeReport(
            diminishing_sensitivity=False,
            weak_loss_aversion=spec.lam >= 1,
            strict_loss_aversion=spec.lam > 1,
            greater_sensitivity_to_losses=spec.lam >= 1,
            monotone=spec.lam > 0,
        )
    raise TypeError(f"not a gain-loss spec: {spec!r}")


def sampled_shape(spec: GainLossSpec, n: int = SHAPE_GRID, margin: float = SHAPE_MARGIN) -> ShapeReport:
    """Grid-based shape flags; used as a fallback and as an independent check."""
    x = np.linspace(0.0, 1.0, n + 1)[1:]
    gain = spec.value(x)
    loss = spec.value(-x)
    g_full = spec.value(np.concatenate(([0.0], x)))
    l_full = spec.value(-np.concatenate(([0.0], x)))
    # second differences: concave on gains, convex on losses
    d2g = g_full[2:] - 2 * g_full[1:-1] + g_full[:-2]
    d2l = l_full[2:] - 2 * l_full[1:-1] + l_full[:-2]
    scale = max(1.0, float(np.max(np.abs(gain))), float(np.max(np.abs(loss))))
    tiny = margin * scale
    ds = bool(np.all(d2g < 0) and np.all(d2l > 0))
    weak = bool(np.all(-loss >= gain - tiny))
    strict = bool(np.all(-loss > gain + tiny))
    dg = np.array([spec.deriv(float(v), "right") for v in x])
    dl = np.array([spec.deriv(float(-v), "left") for v in x])
    gsl = bool(np.all(dg <= dl + tiny))
    full = spec.value(np.linspace(-1.0, 1.0, 2 * n + 1))
    mono = bool(np.all(np.diff(full) > 0))
    return ShapeReport(ds, weak, strict, gsl, mono)
