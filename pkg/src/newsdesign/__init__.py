"""Optimal dynamic information design for receivers with gain-loss news utility."""

from .gainloss import (
    LambdaScaled,
    Power,
    PowerAlpha,
    Quadratic,
    QuadraticPos,
    Sqrt,
    TwoPartLinear,
    babbling_payoff,
    check_shape,
    mu_deriv,
    mu_eval,
    n_bad,
    n_good,
    spec_from_json,
    sqrt_spec,
)

__version__ = "0.1.0"
