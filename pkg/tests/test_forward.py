import numpy as np
import pytest

from heatctl.fem import C1Field, Grid
from heatctl.forward import (
    ForwardConfig, control_from_field, l2_norm_function, null_control_report, solve_forward,
)
from heatctl.nonlinearity import linear, paper_g, zero
from heatctl.weights import WeightParams

U0 = lambda x: 10 * np.sin(np.pi * x)
T, NU = 0.5, 0.1


def test_analytic_decay():
    tr = solve_forward(U0, None, zero(), T, NU, ForwardConfig(nx_f=513, nt_f=512))
    exact = 10 * np.exp(-NU * np.pi**2 * T) / np.sqrt(2)
    assert abs(tr.final_norm - exact) / exact <= 1e-4


def test_linear_reaction_decay():
    tr = solve_forward(U0, None, linear(2.0), T, NU, ForwardConfig(nx_f=513, nt_f=512))
    exact = 10 * np.exp(-(NU * np.pi**2 + 2.0) * T) / np.sqrt(2)
    assert abs(tr.final_norm - exact) / exact <= 1e-4


def time_errors(scheme):
    ref = solve_forward(U0, None, paper_g(), T, NU, ForwardConfig(nx_f=65, nt_f=4096, scheme=scheme))
    errs = []
    for nt in (16, 32, 64):
        tr = solve_forward(U0, None, paper_g(), T, NU, ForwardConfig(nx_f=65, nt_f=nt, scheme=scheme))
        errs.append(np.max(np.abs(tr.y_final - ref.y_final)))
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


def test_crank_nicolson_second_order():
    assert np.all(time_errors("crank_nicolson") > 1.8)


def test_implicit_euler_first_order():
    orders = time_errors("implicit_euler")
    assert np.all((orders > 0.85) & (orders < 1.3))


def test_free_heat_norm_is_monotone():
    tr = solve_forward(U0, None, zero(), T, NU, ForwardConfig(nx_f=65, nt_f=64))
    assert np.all(np.diff(tr.norms) < 0)
    assert tr.times[-1] == pytest.approx(T)
    assert tr.snapshots.shape[0] == tr.snapshot_times.size


def test_zero_control_is_free_evolution():
    p = WeightParams()
    cfg = ForwardConfig(nx_f=65, nt_f=64)
    rep = null_control_report(C1Field.zeros(Grid(4, 4, p.T)), p, U0, zero(), NU, cfg)
    free = solve_forward(U0, None, zero(), T, NU, cfg).final_norm / l2_norm_function(U0, 65)
    assert rep.ratio == pytest.approx(free, rel=1e-12)


def test_control_is_supported_in_omega():
    p = WeightParams()
    grid = Grid(8, 8, p.T)
    f = C1Field.from_free(grid, np.random.default_rng(0).normal(size=grid.free.size))
    ctrl = control_from_field(f, p)
    x = np.linspace(0, 1, 101)
    vals = ctrl(x, np.full_like(x, 0.2))
    outside = (x <= 0.1) | (x >= 0.3)
    assert np.all(vals[outside] == 0) and np.any(vals[~outside] != 0)


def test_blowup_is_reported_as_infinite_ratio():
    p = WeightParams()
    cfg = ForwardConfig(nx_f=33, nt_f=64, blowup_cap=1e3)
    rep = null_control_report(C1Field.zeros(Grid(4, 4, p.T)), p, U0, linear(-40.0), NU, cfg)
    assert rep.trajectory.status == "blowup" and rep.ratio == float("inf")


def test_l2_norm_function():
    assert l2_norm_function(U0) == pytest.approx(10 / np.sqrt(2), rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        ForwardConfig(scheme="rk4")
    with pytest.raises(ValueError):
        ForwardConfig(nx_f=2)
