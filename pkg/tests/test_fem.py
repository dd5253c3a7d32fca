import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.fem import (
    C1Field, Grid, QuadGrid, build_quadrature, evaluate_field, hermite_1d, interpolate, shape_eval,
)
from heatctl.weights import DomainError, WeightParams


def poly_field(grid, constrain=False):
    # q(x,t) = x^3 t^3 and its nodal derivatives
    return interpolate(
        grid,
        lambda x, t: x**3 * t**3,
        lambda x, t: 3 * x**2 * t**3,
        lambda x, t: 3 * x**3 * t**2,
        lambda x, t: 9 * x**2 * t**2,
        constrain=constrain,
    )


def test_partition_of_unity():
    grid = Grid(4, 4, 0.5)
    xi, tau = np.random.default_rng(0).uniform(0, 1, (2, 50))
    sh = shape_eval(grid, xi, tau)
    value_type = [4 * ix + it for ix in (0, 2) for it in (0, 2)]
    assert np.allclose(sh["val"][:, value_type].sum(axis=1), 1.0, atol=1e-14)


def test_hermite_1d_nodal_values():
    h = 0.25
    v, d, _ = hermite_1d(np.array([0.0, 1.0]), h)
    assert np.allclose(v, [[1, 0, 0, 0], [0, 0, 1, 0]])
    assert np.allclose(d, [[0, 1, 0, 0], [0, 0, 0, 1]])


def test_cubic_reproduction_at_cell_centre():
    grid = Grid(4, 4, 0.5)
    f = poly_field(grid)
    xc, tc = 0.375, 0.1875
    assert evaluate_field(f, xc, tc) == pytest.approx(xc**3 * tc**3, abs=1e-12)


def test_second_derivative_of_x_squared():
    grid = Grid(4, 4, 0.5)
    f = interpolate(grid, lambda x, t: x**2, lambda x, t: 2 * x, lambda x, t: 0 * x, lambda x, t: 0 * x,
                    constrain=False)
    x, t = np.random.default_rng(1).uniform([0, 0], [1, 0.5], (30, 2)).T
    _, _, _, dxx, _ = evaluate_field(f, x, t, "second")
    assert np.allclose(dxx, 2.0, atol=1e-10)


def test_global_bicubic_reproduced_everywhere():
    grid = Grid(5, 6, 0.5)
    f = poly_field(grid)
    x, t = np.random.default_rng(2).uniform([0, 0], [1, 0.5], (200, 2)).T
    v, dx, dt = evaluate_field(f, x, t, "grad")
    assert np.allclose(v, x**3 * t**3, atol=1e-13)
    assert np.allclose(dx, 3 * x**2 * t**3, atol=1e-12)
    assert np.allclose(dt, 3 * x**3 * t**2, atol=1e-12)


def test_zero_field():
    grid = Grid(4, 4, 0.5)
    f = C1Field.zeros(grid)
    assert np.all(evaluate_field(f, np.linspace(0, 1, 9), 0.2) == 0)


def random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return C1Field.from_free(grid, rng.normal(size=grid.free.size))


@pytest.mark.parametrize("split", [False, True])
def test_cross_edge_continuity(split):
    grid = Grid(8, 8, 0.5, split_kink=split)
    f = random_field(grid, 3)
    # second derivatives jump across edges, so first derivatives move by O(eps * 1/h^2)
    eps = 1e-10
    t = np.linspace(0.01, 0.49, 13)
    for xe in (0.25, 0.5, 0.875):
        a = evaluate_field(f, xe - eps, t, "grad")
        b = evaluate_field(f, xe + eps, t, "grad")
        for u, v in zip(a, b):
            assert np.max(np.abs(u - v)) <= 1e-6 * max(1.0, np.abs(u).max())
    x = np.linspace(0.01, 0.99, 13)
    for te in (0.0625, 0.1875, 0.3125):
        a = evaluate_field(f, x, te - eps)
        b = evaluate_field(f, x, te + eps)
        assert np.max(np.abs(a - b)) <= 1e-6


def test_split_row_allows_one_sided_time_derivative():
    grid = Grid(8, 8, 0.5, split_kink=True)
    assert grid.split_row == 2
    f = random_field(grid, 4)
    x = np.linspace(0.05, 0.95, 7)
    te, eps = grid.T / 4, 1e-9
    below = evaluate_field(f, x, te - eps, "grad")
    above = evaluate_field(f, x, te + eps, "grad")
    assert np.allclose(below[0], above[0], atol=1e-7)  # value continuous
    assert np.allclose(below[1], above[1], atol=1e-6)  # x-derivative continuous
    assert not np.allclose(below[2], above[2])  # t-derivative may jump


def test_lateral_boundary_vanishes():
    grid = Grid(6, 8, 0.5)
    f = random_field(grid, 5)
    t = np.linspace(0, 0.5, 17)
    assert np.all(evaluate_field(f, 0.0, t) == 0) and np.all(evaluate_field(f, 1.0, t) == 0)
    assert f.satisfies_constraints()


def test_dof_counts():
    grid = Grid(6, 7, 0.5)  # nt not divisible by 4: no split row
    assert grid.split_row is None
    assert grid.free.size == 4 * 7 * 8 - 2 * 2 * 8
    g2 = Grid(6, 8, 0.5, split_kink=False)
    assert g2.free.size == 4 * 7 * 9 - 2 * 2 * 9
    g3 = Grid(6, 8, 0.5)
    assert g3.free.size == g2.free.size + 2 * 7 - 2


def test_out_of_domain():
    grid = Grid(4, 4, 0.5)
    with pytest.raises(DomainError):
        evaluate_field(C1Field.zeros(grid), 1.2, 0.1)
    with pytest.raises(ValueError):
        Grid(3, 8, 0.5)


def test_quadrature_integrals():
    p = WeightParams()
    q = build_quadrature(Grid(7, 9, p.T), p)
    assert q.n_points == 25 * 7 * 9
    assert np.all(q.w > 0)
    assert q.integrate(np.ones(q.shape)) == pytest.approx(p.T, rel=1e-14)
    assert q.integrate(q.x**2 * q.t**2) == pytest.approx(p.T**3 / 9, rel=1e-14)
    for f in ("rho_inv", "rho0_inv", "c_dt", "c_dx", "c_dxx", "w12", "w32"):
        assert np.all(np.isfinite(getattr(q.bundle, f)))


def test_omega_area():
    p = WeightParams()
    aligned = QuadGrid(Grid(10, 8, p.T), p)
    assert aligned.integrate(aligned.ind_omega) == pytest.approx(0.2 * p.T, rel=1e-13)
    off = QuadGrid(Grid(7, 8, p.T), p)
    assert abs(off.integrate(off.ind_omega) - 0.2 * p.T) <= p.T / 7
    cellwise = QuadGrid(Grid(10, 8, p.T), p, aligned=True)
    assert np.array_equal(cellwise.ind_omega, aligned.ind_omega)


def test_rule_order_validation():
    p = WeightParams()
    with pytest.raises(ValueError):
        QuadGrid(Grid(4, 4, p.T), p, order=2)


def test_sample_matches_pointwise_evaluation():
    p = WeightParams()
    q = QuadGrid(Grid(5, 8, p.T), p, order=4)
    f = random_field(q.grid, 6)
    v, dx, dt, dxx, _ = evaluate_field(f, q.x, q.t, "second")
    assert np.allclose(q.sample(f, "val"), v, atol=1e-12)
    assert np.allclose(q.sample(f, "dx"), dx, atol=1e-10)
    assert np.allclose(q.sample(f, "dt"), dt, atol=1e-10)
    assert np.allclose(q.sample(f, "dxx"), dxx, atol=1e-8)


def test_scatter_is_adjoint_of_sample():
    p = WeightParams()
    q = QuadGrid(Grid(4, 8, p.T), p)
    rng = np.random.default_rng(7)
    vals = rng.normal(size=q.shape)
    f = C1Field(q.grid, rng.normal(size=q.grid.n_dofs))
    assert q.scatter(vals) @ f.coef == pytest.approx(q.integrate(vals * q.sample(f)), rel=1e-12)


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_field_evaluation_is_linear(a, b, seed):
    grid = Grid(4, 4, 0.5)
    f, g = random_field(grid, seed), random_field(grid, seed + 1)
    x, t = np.array([0.1, 0.6, 0.93]), np.array([0.05, 0.3, 0.45])
    lhs = evaluate_field(a * f + b * g, x, t)
    rhs = a * evaluate_field(f, x, t) + b * evaluate_field(g, x, t)
    assert np.allclose(lhs, rhs, atol=1e-10)
