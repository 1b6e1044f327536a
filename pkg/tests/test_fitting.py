from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypergrowth.dataset import TimeSeries, window
from hypergrowth.fitting import (
    EPS_SSE,
    EmptyRegime,
    TooFewPoints,
    aic,
    compare_models,
    fit_hyperbolic,
    fit_line,
    fit_model,
    r_squared,
)
from hypergrowth.models import CONSTANT, EXPONENTIAL, HYPERBOLIC, stagnation_then_exponential

# Frozen from numpy.polyfit on (t, 1/y) of the bundled World rows 1000..1950.
WORLD_1000_1950 = {
    "a": 0.01674612016875533,
    "k": 8.46938289085946e-06,
    "t_s": 1977.253878417576,
    "r2": 0.9960115145749316,
    "sse": 1.963418801407975e-07,
}

noisy_series = st.lists(
    st.tuples(st.integers(0, 3000), st.floats(0.05, 50.0)),
    min_size=3,
    max_size=25,
    unique_by=lambda p: p[0],
)


def _series(pairs) -> TimeSeries:
    years, gdp = zip(*pairs)
    return TimeSeries.from_pairs("R", years, gdp)


class TestFitHyperbolic:
    def test_exact_recovery(self, five_point_hyperbola):
        fit = fit_hyperbolic(five_point_hyperbola)
        assert fit.params.a == pytest.approx(5.0, rel=1e-6)
        assert fit.params.k == pytest.approx(0.002, rel=1e-6)
        assert fit.t_s == pytest.approx(2500.0, rel=1e-6)
        assert fit.r2_reciprocal == pytest.approx(1.0, abs=1e-6)
        assert fit.sse_reciprocal <= EPS_SSE
        assert fit.max_rel_err_gdp < 1e-12
        assert (fit.n, fit.window) == (5, (0.0, 2000.0))

    def test_six_digit_gdp_values(self):
        s = TimeSeries.from_pairs(
            "H", [0, 500, 1000, 1500, 2000], [0.2, 0.25, 0.333333, 0.5, 1.0]
        )
        fit = fit_hyperbolic(s)
        assert fit.params.a == pytest.approx(5.0, rel=1e-6)
        assert fit.params.k == pytest.approx(0.002, rel=1e-6)
        assert fit.r2_reciprocal == pytest.approx(1.0, abs=1e-6)
        assert fit.t_s == pytest.approx(2500.0, rel=1e-6)

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            fit_hyperbolic(TimeSeries.from_pairs("X", [1, 2], [1.0, 2.0]))

    def test_world_regression(self, benchmarks):
        fit = fit_hyperbolic(window(benchmarks["World"], 1000, 1950))
        assert fit.n == 8
        assert fit.params.a == pytest.approx(WORLD_1000_1950["a"], rel=1e-9)
        assert fit.params.k == pytest.approx(WORLD_1000_1950["k"], rel=1e-9)
        assert fit.t_s == pytest.approx(WORLD_1000_1950["t_s"], rel=1e-9)
        assert fit.r2_reciprocal == pytest.approx(WORLD_1000_1950["r2"], rel=1e-9)
        assert fit.sse_reciprocal == pytest.approx(WORLD_1000_1950["sse"], rel=1e-6)

    def test_gdp_weighting_favours_late_points(self, benchmarks):
        s = window(benchmarks["World"], 1000, 1950)
        plain = fit_hyperbolic(s)
        weighted = fit_hyperbolic(s, weighting="gdp")
        assert weighted.weighting == "gdp"
        last = s[-1]
        err = lambda f: abs(1 / f.reciprocal_at(last.year) - last.gdp) / last.gdp
        assert err(weighted) < err(plain)
        with pytest.raises(ValueError):
            fit_hyperbolic(s, weighting="huber")

    def test_shrinking_economy_reports_negative_k(self):
        fit = fit_hyperbolic(TimeSeries.from_pairs("X", [1, 2, 3, 4], [4.0, 3.0, 2.0, 1.5]))
        assert fit.params.k < 0 and fit.t_s is None

    @settings(max_examples=100, deadline=None)
    @given(noisy_series)
    def test_normal_equations(self, pairs):
        s = _series(pairs)
        fit = fit_hyperbolic(s)
        t, z = s.years, 1.0 / s.values
        resid = z - fit.reciprocal_at(t)
        scale = np.sqrt(np.sum(z * z)) * len(t)
        assert abs(resid.sum()) <= 1e-9 * scale
        assert abs(np.sum(resid * (t - t.mean()))) <= 1e-9 * scale * (np.ptp(t) + 1)
        assert 0.0 <= fit.r2_reciprocal <= 1.0

    @settings(max_examples=30, deadline=None)
    @given(noisy_series)
    def test_gradient_zero_by_finite_differences(self, pairs):
        s = _series(pairs)
        fit = fit_hyperbolic(s)
        t, z = s.years, 1.0 / s.values
        tc = t - t.mean()  # centred time keeps the two directions comparably scaled

        def sse(a, k):
            r = z - (a - k * tc)
            return float(r @ r)

        a0 = fit.params.a - fit.params.k * t.mean()
        k0 = fit.params.k
        h = 1e-6 * (abs(a0) + 1e-3)
        ga = (sse(a0 + h, k0) - sse(a0 - h, k0)) / (2 * h)
        hk = h / (np.ptp(t) + 1)
        gk = (sse(a0, k0 + hk) - sse(a0, k0 - hk)) / (2 * hk)
        size = float(z @ z) + 1e-12
        assert abs(ga) <= 1e-6 * size / (abs(a0) + 1e-3) * 10
        assert abs(gk) * hk <= 1e-9 * size + 1e-15

    @settings(max_examples=50, deadline=None)
    @given(noisy_series, st.sampled_from([1e-3, 7.0, 1e3]))
    def test_scale_covariance(self, pairs, s):
        base = _series(pairs)
        scaled = base.map(gdp=lambda g: g * s)
        f0, f1 = fit_hyperbolic(base), fit_hyperbolic(scaled)
        assert f1.params.a == pytest.approx(f0.params.a / s, rel=1e-9, abs=1e-12 * abs(f0.params.a / s))
        k_tol = 1e-9 * max(abs(f0.params.k), abs(f0.params.a) / 3000) / s
        assert abs(f1.params.k - f0.params.k / s) <= k_tol
        assert f1.r2_reciprocal == pytest.approx(f0.r2_reciprocal, abs=1e-9)

    def test_permutation_invariance(self, benchmarks):
        s = benchmarks["Asia"]
        pairs = list(zip(s.years, s.values))
        random.Random(3).shuffle(pairs)
        shuffled = TimeSeries.from_pairs("Asia", *zip(*pairs))
        assert fit_hyperbolic(shuffled) == fit_hyperbolic(s)

    def test_deterministic(self, benchmarks):
        s = benchmarks["Africa"]
        assert fit_hyperbolic(s) == fit_hyperbolic(s)


class TestHelpers:
    def test_r_squared_degenerate(self):
        assert r_squared(0.0, 0.0) == 1.0
        assert r_squared(1.0, 0.0) == 0.0
        assert r_squared(2.0, 1.0) == 0.0

    def test_aic_floor(self):
        assert aic(0.0, 3, 1) == pytest.approx(3 * math.log(EPS_SSE / 3) + 2)
        assert aic(math.inf, 3, 1) == math.inf

    def test_weighted_line_equals_repeated_points(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        z = np.array([1.0, 3.0, 2.0, 5.0])
        w = np.array([1.0, 2.0, 1.0, 3.0])
        weighted = fit_line(t, z, w)
        rep = fit_line(np.repeat(t, w.astype(int)), np.repeat(z, w.astype(int)))
        assert weighted.slope == pytest.approx(rep.slope)
        assert weighted.intercept == pytest.approx(rep.intercept)


class TestFitModel:
    @pytest.fixture
    def flat(self):
        return TimeSeries.from_pairs("F", [1500, 1600, 1700], [0.5, 0.5, 0.5])

    def test_nested_penalty(self, flat):
        c = fit_model(flat, CONSTANT)
        h = fit_model(flat, HYPERBOLIC)
        assert c.sse_log <= EPS_SSE and h.sse_log <= EPS_SSE
        assert h.aic - c.aic == pytest.approx(2.0)
        assert c.params["level"] == pytest.approx(0.5)

    def test_hyperbolic_beats_exponential(self, five_point_hyperbola):
        h = fit_model(five_point_hyperbola, HYPERBOLIC)
        e = fit_model(five_point_hyperbola, EXPONENTIAL)
        # oracle: log-linear OLS by polyfit leaves curvature in the residuals
        t, ly = five_point_hyperbola.years, np.log(five_point_hyperbola.values)
        resid = ly - np.polyval(np.polyfit(t, ly, 1), t)
        assert e.sse_log == pytest.approx(float(resid @ resid), rel=1e-9)
        assert e.sse_log > 1e-3
        assert h.aic < e.aic

    def test_ste_empty_regime(self):
        late = TimeSeries.from_pairs("L", [1800, 1850, 1900, 1950, 2000], [1, 2, 3, 4, 5])
        with pytest.raises(EmptyRegime):
            fit_model(late, stagnation_then_exponential(1750))

    def test_ste_recovers_generator(self, stagnation_then_takeoff):
        f = fit_model(stagnation_then_takeoff, stagnation_then_exponential(1750))
        assert f.params["level"] == pytest.approx(0.5)
        assert f.params["rate"] == pytest.approx(0.01)
        assert f.sse_log < 1e-20
        assert f.p == 4

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            fit_model(TimeSeries.from_pairs("X", [1, 2], [1, 2]), HYPERBOLIC)


class TestCompareModels:
    def test_hyperbolic_first(self, five_point_hyperbola):
        ranking = compare_models(five_point_hyperbola, [CONSTANT, HYPERBOLIC])
        assert ranking[0].kind == HYPERBOLIC

    def test_constant_first(self):
        flat = TimeSeries.from_pairs("F", [1500, 1600, 1700], [0.5, 0.5, 0.5])
        ranking = compare_models(flat, [HYPERBOLIC, CONSTANT])
        assert [r.kind for r in ranking] == [CONSTANT, HYPERBOLIC]

    def test_infeasible_kept(self):
        ranking = compare_models(TimeSeries.from_pairs("X", [1, 2], [1, 2]), [HYPERBOLIC])
        assert len(ranking) == 1 and not ranking[0].feasible
        assert "need at least" in ranking[0].error

    def test_tie_breaks_on_declaration_order(self):
        flat = TimeSeries.from_pairs("F", [1, 2, 3, 4], [2.0, 2.0, 2.0, 2.0])
        ranking = compare_models(flat, [EXPONENTIAL, HYPERBOLIC])
        assert [r.kind for r in ranking] == [HYPERBOLIC, EXPONENTIAL]

    def test_empty_kinds(self, five_point_hyperbola):
        with pytest.raises(ValueError):
            compare_models(five_point_hyperbola, [])
