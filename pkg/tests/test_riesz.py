import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.fem import Grid, QuadGrid
from heatctl.riesz import RieszEngine, RieszSlice, hminus_norm_sq_slice
from heatctl.weights import WeightParams


def rule(n, q=3):
    z, w = np.polynomial.legendre.leggauss(q)
    h = 1.0 / n
    xs = ((np.arange(n)[:, None] + 0.5 * (z + 1)[None, :]) * h).ravel()
    return xs, np.tile(0.5 * w * h, n)


def series_norm_sq(coeffs):
    # ||sum_k a_k sin(k pi x)||^2_{H^-1} = sum a_k^2 / (2 k^2 pi^2)
    k = np.arange(1, len(coeffs) + 1)
    return float(np.sum(np.asarray(coeffs) ** 2 / (2 * k**2 * np.pi**2)))


@pytest.mark.parametrize("load, exact", [
    (lambda x: np.sin(np.pi * x), 1 / (2 * np.pi**2)),
    (lambda x: np.ones_like(x), 1 / 12),
    (lambda x: x, 1 / 45),
])
def test_analytic_values(load, exact):
    xs, w = rule(512)
    assert hminus_norm_sq_slice(load(xs), xs, w, 512) == pytest.approx(exact, rel=1e-3)


def test_zero_load():
    xs, w = rule(32)
    assert hminus_norm_sq_slice(np.zeros_like(xs), xs, w, 32) == 0.0


def test_nonfinite_rejected():
    xs, w = rule(8)
    r = np.ones_like(xs)
    r[3] = np.nan
    with pytest.raises(ValueError):
        hminus_norm_sq_slice(r, xs, w, 8)
    with pytest.raises(ValueError):
        RieszSlice(xs, w, 1)


def test_refinement_order_two():
    # sampled on a fixed fine rule so only the Poisson mesh varies
    xs, w = rule(1024, 4)
    r = np.exp(xs) * np.cos(3 * xs)
    vals = [hminus_norm_sq_slice(r, xs, w, n) for n in (16, 32, 64, 128)]
    d = np.abs(np.diff(vals))
    orders = np.log2(d[:-1] / d[1:])
    assert np.all(np.abs(orders - 2) < 0.2)


def test_poincare_bound():
    # ||r||_{H^-1} <= ||r||_{L2} / pi
    rng = np.random.default_rng(0)
    xs, w = rule(64)
    for _ in range(5):
        r = rng.normal(size=xs.size)
        l2 = np.sum(w * r**2)
        assert hminus_norm_sq_slice(r, xs, w, 64) <= l2 / np.pi**2 * (1 + 1e-12)


def test_manufactured_sum_of_modes():
    xs, w = rule(256, 4)
    a = [1.0, -0.5, 0.25]
    r = sum(ak * np.sin((k + 1) * np.pi * xs) for k, ak in enumerate(a))
    assert hminus_norm_sq_slice(r, xs, w, 256) == pytest.approx(series_norm_sq(a), rel=1e-3)


@given(c=st.floats(-100, 100), seed=st.integers(0, 10_000))
def test_quadratic_scaling(c, seed):
    xs, w = rule(16)
    r = np.random.default_rng(seed).normal(size=xs.size)
    base = hminus_norm_sq_slice(r, xs, w, 32)
    assert hminus_norm_sq_slice(c * r, xs, w, 32) == pytest.approx(c * c * base, rel=1e-10, abs=1e-300)


def test_engine_space_time_value():
    # r(x,t) = sin(pi x) on every level: E = 1/2 * T * 1/(2 pi^2) = T/(4 pi^2)
    p = WeightParams()
    q = QuadGrid(Grid(32, 8, p.T), p)
    eng = RieszEngine(q, refine=8)
    E = eng.weighted_E(np.sin(np.pi * q.x) * np.ones_like(q.t))
    assert E == pytest.approx(p.T / (4 * np.pi**2), rel=2e-3)
    with pytest.raises(FloatingPointError):
        eng.weighted_E(np.full(q.shape, np.inf))


def test_engine_levels_match_slice():
    p = WeightParams()
    q = QuadGrid(Grid(8, 4, p.T), p)
    eng = RieszEngine(q, 4)
    r = np.random.default_rng(3).normal(size=q.shape)
    lv = eng.level_norms_sq(r)
    for L in (0, 5, lv.size - 1):
        assert lv[L] == pytest.approx(hminus_norm_sq_slice(r[L], q.xs, q.wxs, 32), rel=1e-12)
