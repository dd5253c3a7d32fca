"""Self-contained property checks runnable from the command line."""
from __future__ import annotations

import time
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable

import numpy as np

from .config import ExperimentConfig
from .control import apply_D
from .driver import LeastSquaresDriver, RunConfig
from .fem import Grid, QuadGrid, evaluate_field, interpolate
from .forward import ForwardConfig, null_control_report, solve_forward
from .nonlinearity import ConfigError, zero
from .riesz import hminus_norm_sq_slice
from .weights import WeightParams, beta, bundle


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _run(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def _beta_positive(cfg: ExperimentConfig):
    raw = SimpleNamespace(omega=cfg["geometry.omega"], lam_w=cfg["weights.lam_w"],
                          m_w=cfg["weights.m_w"], eta0_norm=1.0)
    b, _, _ = beta(np.linspace(0.0, 1.0, 2001), raw)
    bmin = float(b.min())
    return bmin > 0, f"min beta = {bmin:.4g} (m_w = {raw.m_w})"


def _weight_identities(p: WeightParams):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 200)
    t = rng.uniform(0, p.T, 200)
    b = bundle(x, t, p)
    dev = float(np.max(np.abs(b.w32 - (p.T - t) * b.w12)))
    # l(t) = t(T-t) only decreases after T/2, so that is where rho^-1 must decay
    tt = np.linspace(p.T / 2, p.T * (1 - 1e-3), 400)
    mono = all(np.all(np.diff(bundle(xx, tt, p).rho_inv) < 0) for xx in (0.05, 0.5, 0.95))
    end = bundle(0.5, p.T, p)
    ok = dev <= 1e-14 and mono and end.rho_inv == 0 and end.w32 == 0
    return ok, f"|w32-(T-t)w12| = {dev:.1e}, rho^-1 decreasing on [T/2,T): {mono}"


def coefficient_fd_error(p: WeightParams, n: int = 20, seed: int = 1) -> float:
    """Largest relative gap between the ratio coefficients and finite differences.

    ``rho^-1 d rho_0 = w32 * d log rho_0``; the x-derivatives only involve the
    exponent ``s beta / l`` so they are differenced on it alone.
    """
    rng = np.random.default_rng(seed)
    xs_star = 0.5 * (p.omega[0] + p.omega[1])
    x = rng.uniform(0.05, 0.95, 4 * n)
    x = x[np.abs(x - xs_star) > 1e-2][:n]
    t = rng.uniform(0.3 * p.T, 0.9 * p.T, x.size)

    def expo(xx, tt):
        return bundle(xx, tt, p).log_rho

    b = bundle(x, t, p)
    h1, h2 = 1e-6, 1e-4
    dt = (expo(x, t + h1) - expo(x, t - h1)) / (2 * h1) - 1.5 / (p.T - t)
    dx = (expo(x + h1, t) - expo(x - h1, t)) / (2 * h1)
    dxx = (expo(x + h2, t) - 2 * expo(x, t) + expo(x - h2, t)) / h2**2
    pairs = ((b.w32 * dt, b.c_dt), (b.w32 * dx, b.c_dx), (b.w32 * (dxx + dx**2), b.c_dxx))
    return max(float(np.max(np.abs(fd - an) / np.max(np.abs(an)))) for fd, an in pairs)


def _coefficients_fd(p: WeightParams):
    err = coefficient_fd_error(p)
    return err <= 1e-6, f"max relative error {err:.2e}"


def _operator_fd(p: WeightParams, nu: float):
    """``apply_D`` on a smooth interpolated field versus finite differences of rho_0 m."""
    grid = Grid(8, 8, p.T)
    quad = QuadGrid(grid, p)
    k = 2 * np.pi / p.T
    u = lambda x, t: np.sin(np.pi * x) * np.cos(k * t)
    ux = lambda x, t: np.pi * np.cos(np.pi * x) * np.cos(k * t)
    ut = lambda x, t: -k * np.sin(np.pi * x) * np.sin(k * t)
    uxt = lambda x, t: -k * np.pi * np.cos(np.pi * x) * np.sin(k * t)
    mu = interpolate(grid, u, ux, ut, uxt)
    zeta = apply_D(mu, 0.0, quad, nu)
    rng = np.random.default_rng(2)
    idx = rng.choice(np.flatnonzero((quad.t < 0.8 * p.T).ravel() & (quad.t > 0.05).ravel()), 20, replace=False)
    xs, ts = quad.x.ravel()[idx], quad.t.ravel()[idx]
    h = 1e-4

    def rho0m(xx, tt):
        b = bundle(xx, tt, p)
        return np.exp(b.log_rho) * (p.T - tt) ** 1.5 * evaluate_field(mu, xx, tt)

    fd = -(rho0m(xs, ts + h) - rho0m(xs, ts - h)) / (2 * h) - nu * (
        rho0m(xs + h, ts) - 2 * rho0m(xs, ts) + rho0m(xs - h, ts)
    ) / h**2
    fd *= bundle(xs, ts, p).rho_inv
    got = zeta.ravel()[idx]
    err = float(np.max(np.abs(fd - got)) / np.max(np.abs(got)))
    return err <= 1e-5, f"max relative error {err:.2e}"


def _riesz():
    n = 512
    xs, wxs = _fine_rule(n)
    a = hminus_norm_sq_slice(np.sin(np.pi * xs), xs, wxs, n)
    b = hminus_norm_sq_slice(np.ones_like(xs), xs, wxs, n)
    ea = abs(a - 1 / (2 * np.pi**2)) * 2 * np.pi**2
    eb = abs(b - 1 / 12) * 12
    return max(ea, eb) <= 1e-3, f"relative errors {ea:.1e} (sin), {eb:.1e} (const)"


def _fine_rule(n: int, q: int = 3):
    z, w = np.polynomial.legendre.leggauss(q)
    h = 1.0 / n
    xs = ((np.arange(n)[:, None] + 0.5 * (z + 1)[None, :]) * h).ravel()
    return xs, np.tile(0.5 * w * h, n)


def _small_driver(cfg: ExperimentConfig, n: int, g=None, max_iters: int = 6):
    p = cfg.weight_params()
    quad = QuadGrid(Grid(n, n, p.T, split_kink=cfg["mesh.split_kink"]), p, cfg["mesh.quad_order"])
    rc = RunConfig(max_iters=max_iters, epsilon=cfg["run.epsilon"])
    return LeastSquaresDriver(quad, g or cfg.nonlinearity(), cfg["geometry.nu"], cfg["riesz.refine"], rc)


def _beta_or_default(cfg: ExperimentConfig) -> float:
    return 10.0 if cfg["u0.beta"] is None else float(cfg["u0.beta"])


def _derivative_identity(cfg: ExperimentConfig):
    d = _small_driver(cfg, 16)
    b = _beta_or_default(cfg)
    st = d.init_state(lambda x: b * np.sin(np.pi * x))
    if st.E == 0:
        return True, "E0 = 0 (zero residual)"
    up = d.direction(st)
    lam = 1e-4
    q = (st.E - d.E_of_lambda(st, up, lam)) / lam
    err = abs(q - 2 * st.E) / (2 * st.E)
    return err <= 5e-3, f"relative gap {err:.2e} at lambda = 1e-4"


def _descent(cfg: ExperimentConfig):
    d = _small_driver(cfg, 16, max_iters=5)
    b = _beta_or_default(cfg)
    res = d.run(lambda x: b * np.sin(np.pi * x))
    E = res.E_history
    bad = sum(1 for a, c in zip(E, E[1:]) if c > a)
    return bad == 0, f"{len(E) - 1} steps, {bad} increases of E, status {res.status}"


def _zero_fast_path(cfg: ExperimentConfig):
    d = _small_driver(cfg, 8, g=zero())
    res = d.run(lambda x: 10 * np.sin(np.pi * x))
    ok = res.status == "converged" and res.records[0].sqrt2E == 0 and len(res.records) == 1
    return ok, f"E0 = {res.records[0].sqrt2E ** 2 / 2:.1e}, {len(res.lambdas)} steps"


def _forward_analytic(cfg: ExperimentConfig):
    nu, T = cfg["geometry.nu"], cfg["geometry.T"]
    tr = solve_forward(lambda x: 10 * np.sin(np.pi * x), None, zero(), T, nu,
                       ForwardConfig(nx_f=513, nt_f=512))
    exact = 10 * np.exp(-nu * np.pi**2 * T) / np.sqrt(2)
    err = abs(tr.final_norm - exact) / exact
    return err <= 1e-4, f"relative error {err:.1e}"


def _oracle(cfg: ExperimentConfig):
    """The linear control must beat the free evolution in the forward solver."""
    d = _small_driver(cfg, 16, g=zero())
    u0 = lambda x: 10 * np.sin(np.pi * x)
    st = d.init_state(u0)
    fc = ForwardConfig(nx_f=129, nt_f=256)
    rep = null_control_report(st.mf, d.quad.params, u0, zero(), d.nu, fc)
    free = solve_forward(u0, None, zero(), d.quad.params.T, d.nu, fc).final_norm / (10 / np.sqrt(2))
    return rep.ratio < free, f"controlled ratio {rep.ratio:.3g} vs free {free:.3g}"


def check_suite(cfg: ExperimentConfig) -> list[CheckResult]:
    results = [_run("weights.beta_positive", lambda: _beta_positive(cfg))]
    try:
        p = cfg.weight_params()
    except ConfigError as exc:
        results.append(CheckResult("weights.params", False, str(exc)))
        return results
    nu = cfg["geometry.nu"]
    results += [
        _run("weights.identities", lambda: _weight_identities(p)),
        _run("weights.coefficients_fd", lambda: _coefficients_fd(p)),
        _run("operator.finite_difference", lambda: _operator_fd(p, nu)),
        _run("riesz.analytic", _riesz),
        _run("driver.zero_fast_path", lambda: _zero_fast_path(cfg)),
        _run("driver.derivative_identity", lambda: _derivative_identity(cfg)),
        _run("driver.monotone_descent", lambda: _descent(cfg)),
        _run("forward.analytic_decay", lambda: _forward_analytic(cfg)),
        _run("oracle.linear_control", lambda: _oracle(cfg)),
    ]
    return results
