import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.checks import coefficient_fd_error
from heatctl.weights import DomainError, WeightParams, beta, bundle, ell, eta0, rho0_initial


def test_eta0_boundary_and_peak():
    v, _ = eta0(np.array([0.0, 1.0]), (0.1, 0.3))
    assert np.all(v == 0.0)
    v, d = eta0(0.2, (0.1, 0.3))
    assert v == pytest.approx(1.0, abs=1e-15)
    assert d == pytest.approx(0.0, abs=1e-15)


def test_eta0_derivative_nonzero_outside_omega():
    x = np.linspace(0, 1, 1000)
    x = x[(x <= 0.1) | (x >= 0.3)]
    _, d = eta0(x, (0.1, 0.3))
    assert np.all(d != 0.0)


def test_eta0_is_c1_at_peak():
    h = 1e-9
    (vl, dl), (vr, dr) = eta0(0.2 - h, (0.1, 0.3)), eta0(0.2 + h, (0.1, 0.3))
    assert abs(vl - vr) < 1e-12 and abs(dl - dr) < 1e-7


def test_eta0_domain_error():
    with pytest.raises(DomainError):
        eta0(1.5, (0.1, 0.3))


def test_ell_values():
    T = 0.5
    assert ell(0.0, T)[0] == pytest.approx(3 * T**2 / 16)
    left = 3 * T**2 / 16
    right = (T / 4) * (T - T / 4)
    assert left == pytest.approx(right)
    assert ell(T / 4, T)[1] == pytest.approx(T / 2)  # right branch at the junction
    v, d = ell(T, T)
    assert v == 0.0 and d == pytest.approx(-T)
    assert ell(0.1, T)[1] == 0.0
    with pytest.raises(DomainError):
        ell(0.6, T)


def test_bundle_at_horizon_is_zero(params):
    b = bundle(np.linspace(0, 1, 5), params.T, params)
    for f in (b.rho_inv, b.rho0_inv, b.w12, b.w32, b.c_dt, b.c_dx, b.c_dxx):
        assert np.all(f == 0.0)


def test_w32_identity(params, rng):
    x = rng.uniform(0, 1, 100)
    t = rng.uniform(0, params.T, 100)
    b = bundle(x, t, params)
    assert np.max(np.abs(b.w32 - (params.T - t) * b.w12)) <= 1e-14


@pytest.mark.parametrize("s_w", [3e-4, 1e-2, 1.0])
def test_coefficients_against_finite_differences(s_w):
    assert coefficient_fd_error(WeightParams(s_w=s_w)) <= 1e-6


def test_rho0_inverse_relation_in_logs(params, rng):
    x = rng.uniform(0, 1, 50)
    t = rng.uniform(0, 0.99 * params.T, 50)
    b = bundle(x, t, params)
    lhs = np.log(b.rho0_inv)
    rhs = np.log(b.rho_inv) - 1.5 * np.log(params.T - t)
    assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-13)


def test_rho_inv_upper_bound(params):
    x = np.linspace(0, 1, 101)
    t = np.linspace(0, params.T, 101)
    X, Tt = np.meshgrid(x, t)
    b = bundle(X, Tt, params)
    bmin = beta(x, params)[0].min()
    lmax = params.T**2 / 4
    assert np.all(b.rho_inv > 0) or np.all(b.rho_inv[:-1] > 0)
    assert b.rho_inv.max() <= np.exp(-params.s_w * bmin / lmax) * (1 + 1e-12)


def test_rho_inv_decays_once_ell_decreases(params):
    # l(t) = t(T-t) grows on [T/4, T/2] and shrinks afterwards
    t = np.linspace(params.T / 2, params.T * 0.999, 500)
    for x in (0.0, 0.2, 0.7, 1.0):
        assert np.all(np.diff(bundle(x, t, params).rho_inv) < 0)


def test_large_exponent_stays_finite():
    p = WeightParams(s_w=1.0)
    t = np.linspace(0, p.T, 400)
    b = bundle(0.5, t, p)
    for f in (b.rho_inv, b.rho0_inv, b.c_dt, b.c_dx, b.c_dxx):
        assert np.all(np.isfinite(f))


def test_rho0_initial_matches_bundle(params):
    x = np.linspace(0, 1, 7)
    b = bundle(x, 0.0, params)
    assert np.allclose(rho0_initial(x, params) * b.rho0_inv, 1.0, rtol=1e-12)


@pytest.mark.parametrize("kw", [dict(m_w=1.0), dict(s_w=0.0), dict(omega=(0.3, 0.1)), dict(T=-1.0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        WeightParams(**kw)


@given(lam=st.floats(0.1, 5.0), m=st.floats(1.0001, 5.0))
def test_beta_positive_for_m_above_one(lam, m):
    p = WeightParams(lam_w=lam, m_w=m)
    b, _, _ = beta(np.linspace(0, 1, 501), p)
    assert np.all(b > 0)


@given(x=st.floats(0, 1), t=st.floats(0, 0.4999))
def test_bundle_finite_before_horizon(x, t):
    b = bundle(x, t, WeightParams(s_w=0.5))
    assert all(np.isfinite(getattr(b, f)) for f in ("rho_inv", "rho0_inv", "c_dt", "c_dx", "c_dxx"))
    assert 0 <= b.rho_inv <= 1
