import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from newsdesign import (
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
from newsdesign.gainloss import DomainError, sampled_shape

from conftest import any_specs, ds_specs, quadratic_specs, power_specs, scaled_specs


class TestExamples:
    def test_mu_zero(self):
        assert mu_eval(Quadratic(2, 1, 2, 1), 0.0) == 0.0

    def test_power_loss(self):
        assert mu_eval(Power(0.5, 0.5, 1.5), -0.5) == pytest.approx(-1.5 * math.sqrt(0.5), abs=1e-12)
        assert mu_eval(Power(0.5, 0.5, 1.5), -0.5) == pytest.approx(-1.06066, abs=1e-5)

    def test_quadratic_rational(self):
        # -(2.1/3 - 0.2/9)
        assert mu_eval(Quadratic(2, 1, 2.1, 0.2), -1 / 3) == pytest.approx(-61 / 90, abs=1e-12)

    def test_derivatives_at_kink(self):
        q = Quadratic(2, 1, 3, 1)
        assert mu_deriv(q, 0.0, "right") == 2.0
        assert mu_deriv(q, 0.0, "left") == 3.0
        assert mu_deriv(Power(0.5, 0.5, 1.5), 0.0, "right") == math.inf
        assert mu_deriv(sqrt_spec(2.0), 0.0, "right") == math.inf

    def test_domain(self):
        spec = sqrt_spec(1.5)
        mu_eval(spec, 1.0 + 5e-13)
        with pytest.raises(DomainError):
            mu_eval(spec, 1.0 + 1e-9)
        with pytest.raises(DomainError):
            mu_eval(spec, np.array([0.0, -1.5]))
        with pytest.raises(DomainError):
            mu_deriv(spec, 2.0)

    def test_shape_lambda_quadratic(self):
        rep = check_shape(Quadratic(2, 1, 4, 2))
        assert all(rep.as_dict().values())

    def test_shape_linear(self):
        rep = check_shape(TwoPartLinear(1))
        assert not rep.diminishing_sensitivity
        assert rep.weak_loss_aversion

    def test_shape_quadratic_edge(self):
        assert check_shape(Quadratic(2, 1, 2.05, 1)).weak_loss_aversion

    def test_n_bad(self):
        assert n_bad(sqrt_spec(3), 0.0, 0.5) == pytest.approx(-3 * math.sqrt(0.5), abs=1e-12)
        q = Quadratic(2, 1, 2.1, 0.2)
        assert n_bad(q, 0.375, 1 / 3) == pytest.approx(n_bad(q, 0.0, 1 / 3), abs=1e-12)
        assert n_bad(q, 0.0, 1 / 3) == pytest.approx(-0.677778, abs=1e-6)
        spec = sqrt_spec(3)
        assert abs(n_bad(spec, 0.7813, 0.5) - n_bad(spec, 0.0, 0.5)) < 1e-3

    def test_n_good(self):
        spec = sqrt_spec(1.5)
        assert n_good(spec, 0.75, 0.5) == pytest.approx(1.0, abs=1e-12)
        for pi in (0.1, 0.4, 0.8):
            assert n_good(spec, pi, pi) == pytest.approx(mu_eval(spec, 1 - pi), abs=1e-14)

    def test_n_good_symmetry(self):
        spec = sqrt_spec(1.0)
        pi = 0.3
        p = np.linspace(pi, 1.0, 41)
        np.testing.assert_allclose(n_good(spec, p, pi), n_good(spec, 1 - p + pi, pi), atol=1e-12)

    def test_babbling(self):
        assert babbling_payoff(sqrt_spec(1.0), 0.5) == pytest.approx(0.0, abs=1e-15)
        assert babbling_payoff(sqrt_spec(1.5), 0.5) == pytest.approx(-0.176777, abs=1e-6)
        for spec in (sqrt_spec(2), Quadratic(2, 1, 3, 1), TwoPartLinear(0.5)):
            assert babbling_payoff(spec, 0.0) == 0.0
            assert babbling_payoff(spec, 1.0) == 0.0

    def test_constructor_checks(self):
        with pytest.raises(ValueError):
            Quadratic(1, 1, 3, 1)
        with pytest.raises(ValueError):
            Power(0.5, 0.5, 0.9)
        with pytest.raises(ValueError):
            PowerAlpha(1.2)
        with pytest.raises(ValueError):
            TwoPartLinear(-1)
        with pytest.raises(ValueError):
            LambdaScaled(Sqrt(), 0.5)


class TestJson:
    @pytest.mark.parametrize(
        "spec",
        [
            Quadratic(2, 1, 2.1, 0.2),
            Power(0.5, 0.4, 2.0),
            sqrt_spec(1.5),
            LambdaScaled(PowerAlpha(0.7), 2.0),
            LambdaScaled(QuadraticPos(3, 1), 1.2),
            TwoPartLinear(0.0),
        ],
    )
    def test_round_trip(self, spec):
        assert spec_from_json(spec.to_json()) == spec
        assert spec_from_json(spec.dumps()) == spec

    def test_named_families(self):
        assert spec_from_json({"family": "sqrt", "lambda": 1.5}) == sqrt_spec(1.5)
        assert spec_from_json('{"family": "two_part_linear", "lambda": 2}') == TwoPartLinear(2.0)

    @pytest.mark.parametrize(
        "bad",
        [
            {"family": "cubic"},
            {"family": "sqrt"},
            {"family": "sqrt", "lambda": 1.5, "extra": 1},
            {"family": "power", "alpha": "x", "beta": 0.5, "lambda": 1},
            {"family": "quadratic", "alpha_p": 1, "beta_p": 1, "alpha_n": 2, "beta_n": 1},
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            spec_from_json(json.dumps(bad))


class TestProperties:
    @given(ds_specs(), st.floats(1e-3, 0.998), st.floats(1e-3, 0.998))
    def test_sub_additive_gains(self, spec, d1, d2):
        assume(d1 + d2 <= 1.0)
        lhs = float(mu_eval(spec, d1 + d2))
        rhs = float(mu_eval(spec, d1) + mu_eval(spec, d2))
        assert lhs < rhs

    @given(ds_specs(), st.floats(1e-3, 0.998), st.floats(1e-3, 0.998))
    def test_super_additive_losses(self, spec, d1, d2):
        assume(d1 + d2 <= 1.0)
        assert float(mu_eval(spec, -d1 - d2)) > float(mu_eval(spec, -d1) + mu_eval(spec, -d2))

    @given(any_specs())
    def test_zero_and_monotone(self, spec):
        assert float(mu_eval(spec, 0.0)) == 0.0
        x = np.linspace(-1, 1, 801)
        y = mu_eval(spec, x)
        if check_shape(spec).monotone:
            assert np.all(np.diff(y) > 0)

    @given(st.sampled_from([Sqrt(), PowerAlpha(0.3), PowerAlpha(0.8), QuadraticPos(3, 1)]), st.floats(0.01, 0.98), st.floats(0.0, 1.0))
    def test_no_indifference_symmetric(self, base, pi, frac):
        spec = LambdaScaled(base, 1.0)
        x = pi + (1 - pi) * (0.001 + 0.998 * frac)
        assert float(n_bad(spec, x, pi)) > float(n_bad(spec, 0.0, pi))

    @given(scaled_specs(), st.floats(0.05, 0.95))
    def test_n_good_shape(self, spec, pi):
        # increasing below the prior, symmetric about (1+pi)/2 above it
        lo = np.linspace(0.0, pi, 50)
        assert np.all(np.diff(n_good(spec, lo, pi)) > 0)
        # interior points only: rounding in p - pi is amplified by the steep slope at 0
        s = np.linspace(0.01, 0.99, 50) * (1.0 - pi)
        np.testing.assert_allclose(n_good(spec, pi + s, pi), n_good(spec, 1.0 - s, pi), atol=1e-9)

    @given(any_specs(), st.floats(0.1, 0.99), st.booleans())
    def test_derivative_matches_finite_difference(self, spec, a, neg):
        x = -a if neg else a
        h = 1e-4
        lo, hi = max(x - h, -1.0), min(x + h, 1.0)
        assume(lo * hi > 0)  # stay on one side of the kink
        fd = (float(mu_eval(spec, hi)) - float(mu_eval(spec, lo))) / (hi - lo)
        # the central difference error is O(h^2 mu''') which is below 1e-6 away from 0
        assert mu_deriv(spec, x) == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)) + 1e-6)

    @given(st.one_of(quadratic_specs(loss_averse=False), power_specs(loss_averse=False), scaled_specs((1.0, 4.0))))
    def test_analytic_shape_matches_sampled(self, spec):
        a, s = check_shape(spec), sampled_shape(spec, n=2000)
        assert a.diminishing_sensitivity == s.diminishing_sensitivity
        assert a.monotone == s.monotone
        # sampling can only see violations, so it never contradicts a true analytic flag
        if a.weak_loss_aversion:
            assert s.weak_loss_aversion
        if a.greater_sensitivity_to_losses:
            assert s.greater_sensitivity_to_losses
