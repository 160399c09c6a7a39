import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from newsdesign import sqrt_spec
from newsdesign.commitment import MeanNews, solve
from newsdesign.concavify import (
    GridConfig,
    SampledFunction,
    cav_rows,
    concave_envelope,
    default_grid_size,
    refined_envelope,
    support_at,
    uniform_grid,
)


def brute_envelope(x, y):
    """O(n^2) oracle: best chord through each abscissa."""
    n = x.size
    out = y.copy()
    for i in range(n):
        for j in range(i + 2, n):
            mid = slice(i + 1, j)
            chord = y[i] + (y[j] - y[i]) * (x[mid] - x[i]) / (x[j] - x[i])
            out[mid] = np.maximum(out[mid], chord)
    return out


values = arrays(np.float64, st.integers(3, 40), elements=st.floats(-5, 5, allow_nan=False))


def sample(ys):
    return SampledFunction(np.linspace(0.0, 1.0, ys.size), ys)


class TestExamples:
    def test_concave_function_is_its_own_envelope(self):
        x = np.linspace(0, 1, 101)
        env = concave_envelope(SampledFunction(x, -((x - 0.5) ** 2)))
        assert env.vertices.size == 101
        np.testing.assert_allclose(env.values, -((x - 0.5) ** 2), atol=1e-15)
        assert support_at(env, 0.37).points == (0.37,)

    def test_abs_value(self):
        x = np.linspace(0, 1, 101)
        env = concave_envelope(SampledFunction(x, np.abs(x - 0.5)))
        np.testing.assert_allclose(env.values, 0.5, atol=1e-15)
        sup = support_at(env, 0.3)
        assert sup.points == (0.0, 1.0)
        assert sup.weights == pytest.approx((0.7, 0.3), abs=1e-15)

    def test_fig2_layers(self):
        pol = solve(sqrt_spec(1.5), 0.5, 5)
        model = MeanNews(sqrt_spec(1.5))
        # last informative period, at the prior reached on the good path
        x = pol.layers[0].grid
        prior = pol.good_path[3]
        f = model.row(prior, x) + model.terminal(x)
        env = concave_envelope(SampledFunction(x, f))
        above = env.values > f + 1e-10
        inside = x[above]
        assert inside.min() < 0.01
        assert inside.max() == pytest.approx(0.834, abs=2e-3)
        # first period: split 0.5 into {0, 0.556}
        assert pol.layer(1).support_lo[np.searchsorted(x, 0.5)] == 0.0
        assert pol.layer(1).support_hi[np.searchsorted(x, 0.5)] == pytest.approx(0.556, abs=1e-3)

    def test_validation(self):
        with pytest.raises(ValueError):
            SampledFunction(np.array([0.0, 1.0]), np.array([0.0, np.nan]))
        with pytest.raises(ValueError):
            SampledFunction(np.array([0.0, 0.0, 1.0]), np.zeros(3))
        env = concave_envelope(SampledFunction(np.linspace(0, 1, 5), np.zeros(5)))
        with pytest.raises(ValueError):
            support_at(env, 1.5)
        with pytest.raises(ValueError):
            cav_rows(np.linspace(0, 1, 3), np.array([[0.0, np.inf, 0.0]]), np.array([0.5]))

    def test_collinear_keeps_extremes(self):
        x = np.linspace(0, 1, 11)
        env = concave_envelope(SampledFunction(x, np.zeros(11)))
        assert list(env.vertices) == [0, 10]

    def test_collinear_support_is_narrowest(self):
        x = np.linspace(0, 1, 11)
        y = np.where(np.isclose(x, 0.5), -1.0, 0.0)
        sup = support_at(concave_envelope(SampledFunction(x, y)), 0.5)
        assert sup.points == pytest.approx((0.4, 0.6))

    def test_grid_env(self, monkeypatch):
        monkeypatch.delenv("NEWSDESIGN_GRID", raising=False)
        assert default_grid_size() == 2001
        monkeypatch.setenv("NEWSDESIGN_GRID", "301")
        assert GridConfig().n == 301
        monkeypatch.setenv("NEWSDESIGN_GRID", "50")
        with pytest.raises(ValueError):
            default_grid_size()
        monkeypatch.setenv("NEWSDESIGN_GRID", "lots")
        with pytest.raises(ValueError):
            default_grid_size()


class TestProperties:
    @given(values)
    def test_matches_bruteforce(self, ys):
        f = sample(ys)
        env = concave_envelope(f)
        np.testing.assert_allclose(env.values, brute_envelope(f.grid, ys), atol=1e-9)

    @given(values)
    def test_idempotent(self, ys):
        env = concave_envelope(sample(ys))
        again = concave_envelope(SampledFunction(env.grid, env.values))
        np.testing.assert_allclose(again.values, env.values, atol=1e-12)

    @given(values)
    def test_dominance_and_concavity(self, ys):
        env = concave_envelope(sample(ys))
        assert np.all(env.values >= ys - 1e-12)
        np.testing.assert_array_equal(env.values[env.vertices], ys[env.vertices])
        slopes = np.diff(env.vertex_y) / np.diff(env.vertex_x)
        assert np.all(np.diff(slopes) <= 1e-9)

    @given(values, st.floats(0.0, 1.0))
    def test_mean_preserving_split(self, ys, x):
        env = concave_envelope(sample(ys))
        sup = support_at(env, x)
        w, q = np.array(sup.weights), np.array(sup.points)
        assert np.all(w >= 0) and w.sum() == pytest.approx(1.0, abs=1e-12)
        assert float(w @ q) == pytest.approx(x, abs=1e-12)
        assert float(w @ np.interp(q, env.grid, ys)) == pytest.approx(float(env(x)), abs=1e-9)

    @given(arrays(np.float64, (6, 25), elements=st.floats(-5, 5, allow_nan=False)), st.lists(st.integers(0, 24), min_size=6, max_size=6))
    def test_batched_kernel_matches_hull(self, F, idx):
        q = np.linspace(0, 1, 25)
        xs = q[idx]
        value, lo, hi = cav_rows(q, F, xs)
        for r in range(F.shape[0]):
            env = concave_envelope(SampledFunction(q, F[r]))
            assert value[r] == pytest.approx(float(env(xs[r])), abs=1e-9)
            assert lo[r] <= xs[r] <= hi[r]
            if lo[r] < hi[r]:
                w = (hi[r] - xs[r]) / (hi[r] - lo[r])
                chord = w * np.interp(lo[r], q, F[r]) + (1 - w) * np.interp(hi[r], q, F[r])
                assert chord == pytest.approx(value[r], abs=1e-9)


def test_refinement_stability():
    # smooth, non-concave: the hull error shrinks like h^2
    f = lambda x: np.cos(7.0 * x) + 0.3 * x
    curvature = 49.0
    probe = np.linspace(0.05, 0.95, 19)
    for n in (101, 201, 401, 801):
        h = 1.0 / (n - 1)
        coarse = concave_envelope(SampledFunction.from_callable(f, uniform_grid(n)))
        fine = concave_envelope(SampledFunction.from_callable(f, uniform_grid(2 * n - 1)))
        diff = np.max(np.abs(coarse(probe) - fine(probe)))
        assert diff <= curvature * h * h


def test_refined_envelope_inserts_prior():
    f = lambda q: np.sqrt(np.abs(q - 0.3))
    env = refined_envelope(f, uniform_grid(101), x=0.3137)
    assert np.any(env.grid == 0.3137)
    assert env.grid.size > 101
