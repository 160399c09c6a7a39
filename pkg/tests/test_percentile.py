import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from newsdesign import Power, TwoPartLinear, mu_eval, sqrt_spec
from newsdesign.commitment import solve
from newsdesign.concavify import GridConfig
from newsdesign.percentile import (
    Degenerate,
    Gaussian,
    MixtureBelief,
    Uniform,
    exact_news,
    induced_two_part_linear,
    kr_improvement_value,
    percentile_news,
    quantile_levels,
    residual_power_gain,
    solve_percentile,
)

SPEC = sqrt_spec(1.5)
STEP = (Degenerate(1.0), Degenerate(0.0))


def mix(p, comps=STEP):
    return MixtureBelief(p, *comps)


def discrete_news_oracle(values, new, old, spec, n=1_000_000):
    """Midpoint quadrature of quantile differences for finite supports."""
    u = (np.arange(n) + 0.5) / n
    qn = np.asarray(values)[np.minimum(np.searchsorted(np.cumsum(new), u, side="right"), len(values) - 1)]
    qo = np.asarray(values)[np.minimum(np.searchsorted(np.cumsum(old), u, side="right"), len(values) - 1)]
    return float(np.mean(spec.value(qn - qo)))


class TestQuantile:
    def test_step(self):
        m = mix(0.5, (Degenerate(1.0), Degenerate(0.0)))
        assert m.quantile(0.25) == 0.0
        assert m.quantile(0.75) == 1.0

    @pytest.mark.parametrize("p", [0.0, 0.3, 0.8, 1.0])
    def test_uniform_shift(self, p):
        L, d = 10.0, 1.0
        m = MixtureBelief(p, Uniform(d, L + d), Uniform(0.0, L))
        assert m.quantile(d / L) == pytest.approx(d + p * d, abs=1e-12)

    def test_gaussian_median(self):
        m = MixtureBelief(0.9, Gaussian(1.0, 1.0), Gaussian(0.0, 1.0))
        med = m.quantile(0.5)
        assert float(m.cdf(med)) >= 0.5 - 1e-10
        assert float(m.cdf(med)) == pytest.approx(0.5, abs=1e-10)
        assert med == pytest.approx(0.9110726849552284, abs=1e-9)

    def test_rejects_levels(self):
        with pytest.raises(ValueError):
            mix(0.5).quantile(0.0)
        with pytest.raises(ValueError):
            mix(0.5).quantile(1.0)

    @given(
        st.floats(0.0, 1.0),
        st.sampled_from(
            [
                (Gaussian(1.0, 0.3), Gaussian(0.0, 0.3)),
                (Gaussian(1.0, 5.0), Gaussian(0.0, 5.0)),
                (Uniform(1.0, 3.0), Uniform(0.0, 2.0)),
                (Degenerate(1.0), Degenerate(0.0)),
                (Uniform(0.5, 0.7), Degenerate(0.2)),
            ]
        ),
        st.lists(st.floats(1e-6, 1 - 1e-6), min_size=2, max_size=20),
    )
    def test_monotone_and_inverse(self, p, comps, levels):
        m = MixtureBelief(p, *comps)
        u = np.sort(np.asarray(levels))
        q = m.quantile(u)
        assert np.all(np.diff(q) >= 0)
        # generalized inverse: F(Q(u)) >= u and F just below Q(u) is <= u
        assert np.all(m.cdf(q) >= u - 1e-9)
        assert np.all(m.cdf(q - 1e-7) <= u + 1e-9)

    @pytest.mark.parametrize(
        "comps",
        [(Gaussian(1.0, 1.0), Gaussian(0.0, 1.0)), (Gaussian(2.0, 0.5), Gaussian(-1.0, 3.0)), (Uniform(1, 4), Uniform(0, 2))],
    )
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_mean_consistency(self, comps, p):
        m = MixtureBelief(p, *comps)
        assert float(np.mean(m.quantile(quantile_levels()))) == pytest.approx(m.mean, abs=1e-6)


class TestNews:
    def test_identical_is_zero(self):
        for comps in (STEP, (Gaussian(1, 1), Gaussian(0, 1))):
            assert percentile_news(mix(0.4, comps), mix(0.4, comps), SPEC) == 0.0

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_degenerate_band(self, p1, p2):
        lo, hi = sorted((p1, p2))
        expected = (hi - lo) * float(mu_eval(SPEC, 1.0))
        assert exact_news(mix(hi), mix(lo), SPEC) == pytest.approx(expected, abs=1e-12)
        assert percentile_news(mix(hi), mix(lo), SPEC) == pytest.approx(expected, abs=2e-4 * float(mu_eval(SPEC, 1.0)))

    @settings(max_examples=40)
    @given(
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.sampled_from([(Uniform(1.0, 3.0), Uniform(0.0, 2.0)), (Uniform(0.5, 0.7), Degenerate(0.2)), STEP]),
        st.sampled_from([sqrt_spec(1.5), Power(0.6, 0.4, 2.0), TwoPartLinear(2.0)]),
    )
    def test_exact_matches_midpoint(self, p1, p2, comps, spec):
        new, old = mix(p2, comps), mix(p1, comps)
        # step discontinuities cost at most one panel each
        assert percentile_news(new, old, spec) == pytest.approx(exact_news(new, old, spec), abs=1e-3)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([STEP, (Gaussian(1, 1), Gaussian(0, 1))]))
    def test_symmetric_sign_flip(self, p1, p2, comps):
        spec = sqrt_spec(1.0)
        a = percentile_news(mix(p2, comps), mix(p1, comps), spec, n_quad=2000)
        b = percentile_news(mix(p1, comps), mix(p2, comps), spec, n_quad=2000)
        assert a == pytest.approx(-b, abs=1e-12)

    def test_uniform_limit(self):
        d = 1.0
        pairs = [(0.2, 0.7), (0.5, 0.9), (0.8, 0.1), (0.3, 0.35)]

        def gap(L):
            comps = (Uniform(d, L + d), Uniform(0.0, L))
            worst = 0.0
            for p1, p2 in pairs:
                n = exact_news(mix(p2, comps), mix(p1, comps), SPEC)
                worst = max(worst, abs(n - float(SPEC.value((p2 - p1) * d))))
            return worst

        big = float(np.max(np.abs(SPEC.value(np.linspace(-2 * d, 2 * d, 401)))))
        g3, g4 = gap(1e3), gap(1e4)
        assert g3 <= 4 * d / 1e3 * big
        assert g4 <= 4 * d / 1e4 * big
        assert g3 < 10 * (10 * g4)

    def test_mismatched_components(self):
        with pytest.raises(ValueError):
            percentile_news(mix(0.5), MixtureBelief(0.5, Degenerate(2.0), Degenerate(0.0)), SPEC)


class TestSolve:
    def test_degenerate_matches_induced_linear(self):
        cfg = GridConfig(n=201)
        pol = solve_percentile(Degenerate(1.0), Degenerate(0.0), SPEC, 0.5, 3, cfg)
        ind = induced_two_part_linear(SPEC)
        ref = solve(ind.spec, 0.5, 3, cfg)
        assert pol.value == pytest.approx(ind.scale * ref.value, abs=2e-3)
        assert pol.value == pytest.approx(-0.125, abs=1e-9)


class TestImprovement:
    def test_uniform_three(self):
        imp = kr_improvement_value([1 / 3, 1 / 3, 1 / 3], [0.0, 0.5, 1.0], SPEC)
        assert imp.delta_vs_one_shot > 0
        assert imp.delta_vs_one_shot == pytest.approx(0.02301186457628311, abs=1e-12)
        assert imp.pooling_share == pytest.approx(0.5)

    def test_linear_no_gain(self):
        for lam in (1.0, 2.0):
            imp = kr_improvement_value([1 / 3, 1 / 3, 1 / 3], [0.0, 0.5, 1.0], TwoPartLinear(lam))
            assert imp.delta_vs_one_shot == pytest.approx(0.0, abs=1e-12)

    def test_skewed_small(self):
        imp = kr_improvement_value([0.98, 0.01, 0.01], [0.0, 0.5, 1.0], SPEC)
        assert 0 < imp.delta_vs_one_shot < 1e-3
        assert imp.delta_vs_one_shot == pytest.approx(4.100295869956076e-05, abs=1e-12)

    def test_against_quadrature_oracle(self):
        prior, v = np.array([0.2, 0.3, 0.5]), [0.0, 0.4, 1.0]
        imp = kr_improvement_value(prior, v, SPEC)
        eye = np.eye(3)
        one_shot = sum(prior[k] * discrete_news_oracle(v, eye[k], prior, SPEC) for k in range(3))
        share = prior[1] / (1 - prior[2])
        post = np.array([0.0, 1 - prior[2], prior[2]])
        pool = prior[1] + prior[2] * share
        muddled = prior[0] * discrete_news_oracle(v, eye[0], prior, SPEC)
        muddled += prior[2] * (1 - share) * discrete_news_oracle(v, eye[2], prior, SPEC)
        muddled += pool * (
            discrete_news_oracle(v, post, prior, SPEC)
            + post[1] * discrete_news_oracle(v, eye[1], post, SPEC)
            + post[2] * discrete_news_oracle(v, eye[2], post, SPEC)
        )
        assert imp.one_shot == pytest.approx(one_shot, abs=1e-5)
        assert imp.delta_vs_one_shot == pytest.approx(muddled - one_shot, abs=1e-5)

    def test_needs_three_states(self):
        with pytest.raises(ValueError):
            kr_improvement_value([0.5, 0.5], [0.0, 1.0], SPEC)


class TestResidualGain:
    def test_positive(self):
        r = residual_power_gain(1.0, 1.0, 0.5, 1.5)
        assert r.max_gain > 0
        assert r.max_gain == pytest.approx(0.14496220768390933, abs=1e-9)

    def test_huge_loss_aversion_reported(self):
        r = residual_power_gain(1.0, 1.0, 0.5, 1e6)
        assert r.max_gain <= 0
        assert r.argmax_eps in r.eps

    def test_more_curvature_more_gain(self):
        gains = [residual_power_gain(1.0, 1.0, a, 1.5, [1e-3]).max_gain for a in (0.3, 0.5, 0.7)]
        assert gains[0] > gains[1] > gains[2]

    def test_eps_range(self):
        with pytest.raises(ValueError):
            residual_power_gain(1.0, 1.0, 0.5, 1.5, [0.6])
