"""Damped Newton (least-squares) iteration for semilinear null control.

Everything is kept in weighted coordinates so that no Carleman weight is ever
materialized:

* ``z = rho * y`` at the quadrature points,
* ``mf`` a C1 field with ``f = -rho_0^-1 mf`` on omega,
* ``r = rho_2 * B`` with ``B = y_t - nu y_xx + g(y) - f 1_omega``.

The residual is never recomputed from ``y``; it is propagated by the exact
algebraic recursion ``r <- (1 - lam) r + rho_2 l(y, -lam Y1)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .control import ControlUpdate, InitialData, LinearizedProblem, Residual, solve_control
from .fem import C1Field, QuadGrid
from .nonlinearity import Nonlinearity
from .riesz import RieszEngine

log = logging.getLogger(__name__)

VARIANTS = ("ls", "newton", "picard")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RunConfig:
    epsilon: float = 1e-6
    step_max: float = 1.0
    max_iters: int = 50
    variant: str = "ls"
    divergence_cap: float = 20.0
    n_scan: int = 64
    golden_tol: float = 1e-6
    picard_tol: float = 1e-3
    solver_kind: str = "direct"
    cg_tol: float = 1e-10
    cg_maxit: int = 20000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.step_max >= 1.0:
            raise ValueError("step_max must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.divergence_cap > 1.0:
            raise ValueError("divergence_cap must exceed 1")


@dataclass
class IterateState:
    z: np.ndarray
    mf: C1Field
    r: np.ndarray
    E: float
    k: int = 0


@dataclass(frozen=True)
class IterationRecord:
    k: int
    rel_dy: float
    rel_df: float
    norm_y: float
    norm_f: float
    sqrt2E: float
    lambda_k: float

    def as_dict(self) -> dict:
        return {
            "k": self.k, "rel_dy": self.rel_dy, "rel_df": self.rel_df,
            "norm_y": self.norm_y, "norm_f": self.norm_f,
            "sqrt2E": self.sqrt2E, "lambda": self.lambda_k,
        }


@dataclass
class RunResult:
    records: list[IterationRecord]
    state: IterateState
    status: str
    E_history: list[float] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    C_hat: float | None = None
    flags: list[str] = field(default_factory=list)


class LeastSquaresDriver:
    """Bundles the discretization, nonlinearity and solver settings of a run."""

    def __init__(self, quad: QuadGrid, g: Nonlinearity, nu: float, riesz_refine: int = 4,
                 cfg: RunConfig | None = None):
        self.quad = quad
        self.g = g
        self.nu = float(nu)
        self.cfg = cfg or RunConfig()
        self.engine = RieszEngine(quad, riesz_refine)
        b = quad.bundle
        self._rho_inv = b.rho_inv
        self._w12 = b.w12

    # ------------------------------------------------------------------ pieces
    def _solve(self, A, source) -> ControlUpdate:
        c = self.cfg
        kw = {"cg_tol": c.cg_tol, "cg_maxit": c.cg_maxit} if c.solver_kind == "cg" else {}
        return solve_control(LinearizedProblem(self.quad, A, source, self.nu), c.solver_kind, **kw)

    def weighted_E(self, r: np.ndarray) -> float:
        return self.engine.weighted_E(r)

    def y_samples(self, z: np.ndarray) -> np.ndarray:
        return self._rho_inv * z

    def f_samples(self, mf: C1Field) -> np.ndarray:
        q = self.quad
        return -q.bundle.rho0_inv * q.sample(mf) * q.ind_omega

    def init_state(self, u0: Callable) -> IterateState:
        """Linear minimal-J control (A = 0) from the initial data."""
        upd = self._solve(0.0, InitialData(u0))
        z = upd.zeta
        r = self._w12 * z * self.g.gtilde(self._rho_inv * z)
        return IterateState(z=z, mf=upd.mu, r=r, E=self.weighted_E(r), k=0)

    def direction(self, state: IterateState) -> ControlUpdate:
        A = self.g.gprime(self._rho_inv * state.z)
        return self._solve(A, Residual(state.r))

    def rho2_l(self, state: IterateState, update: ControlUpdate, lam: float) -> np.ndarray:
        if lam == 0.0:
            return np.zeros_like(state.z)
        gt, gp = self.g.gtilde, self.g.gprime
        z, zeta, ri = state.z, update.zeta, self._rho_inv
        zn = z - lam * zeta
        return self._w12 * (zn * gt(ri * zn) - z * gt(ri * z) + lam * gp(ri * z) * zeta)

    def residual_at(self, state: IterateState, update: ControlUpdate, lam: float) -> np.ndarray:
        return (1.0 - lam) * state.r + self.rho2_l(state, update, lam)

    def E_of_lambda(self, state: IterateState, update: ControlUpdate, lam: float) -> float:
        if lam == 0.0:
            return state.E
        return self.weighted_E(self.residual_at(state, update, lam))

    def line_search(self, state: IterateState, update: ControlUpdate) -> float:
        """Global scan of ``E(lam)`` on ``[0, step_max]`` then golden-section polish."""
        c = self.cfg
        lams = np.linspace(0.0, c.step_max, c.n_scan)
        vals = np.array([self.E_of_lambda(state, update, float(l)) for l in lams])
        i = int(np.argmin(vals))  # first occurrence: ties go to the smaller lambda
        a = lams[max(i - 1, 0)]
        b = lams[min(i + 1, lams.size - 1)]
        best_l, best_v = float(lams[i]), float(vals[i])
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        f1 = self.E_of_lambda(state, update, x1)
        f2 = self.E_of_lambda(state, update, x2)
        while b - a > c.golden_tol:
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - GOLDEN * (b - a)
                f1 = self.E_of_lambda(state, update, x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN * (b - a)
                f2 = self.E_of_lambda(state, update, x2)
        for l, v in sorted(((x1, f1), (x2, f2))):
            if v < best_v:
                best_l, best_v = float(l), float(v)
        return best_l

    def step(self, state: IterateState, update: ControlUpdate, lam: float) -> IterateState:
        if lam == 0.0:
            return replace(state, k=state.k + 1)
        z = state.z - lam * update.zeta
        mf = state.mf - lam * update.mu
        r = self.residual_at(state, update, lam)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(r))):
            raise FloatingPointError("non-finite update")
        return IterateState(z=z, mf=mf, r=r, E=self.weighted_E(r), k=state.k + 1)

    # ---------------------------------------------------------------- records
    def _record(self, k, y, f, y_prev, f_prev, E, lam) -> IterationRecord:
        q = self.quad
        ny = q.norm(y)
        nf = q.norm(f, region="q")
        if y_prev is None:
            rdy = rdf = 0.0
        else:
            npy = q.norm(y_prev)
            npf = q.norm(f_prev, region="q")
            rdy = q.norm(y - y_prev) / npy if npy > 0 else 0.0
            rdf = q.norm(f - f_prev, region="q") / npf if npf > 0 else 0.0
        return IterationRecord(k, rdy, rdf, ny, nf, math.sqrt(2.0 * max(E, 0.0)), lam)

    # ------------------------------------------------------------------- runs
    def run(self, u0: Callable) -> RunResult:
        c = self.cfg
        if c.variant == "picard":
            return self.picard_run(u0)
        state = self.init_state(u0)
        records: list[IterationRecord] = []
        E_hist = [state.E]
        lambdas: list[float] = []
        y_prev = f_prev = None
        e0 = math.sqrt(2.0 * state.E)
        C_hat = None
        status = "maxiter"
        for _ in range(c.max_iters + 1):
            y = self.y_samples(state.z)
            f = self.f_samples(state.mf)
            done = state.E < c.epsilon
            diverged = math.sqrt(2.0 * state.E) > c.divergence_cap * e0 and e0 > 0
            if done or diverged or state.k >= c.max_iters:
                records.append(self._record(state.k, y, f, y_prev, f_prev, state.E, 0.0))
                status = "converged" if done else ("diverged" if diverged else "maxiter")
                break
            upd = self.direction(state)
            if c.variant == "newton":
                lam = 1.0
            else:
                lam = self.line_search(state, upd)
            if C_hat is None and lam > 0:
                C_hat = _one_step_constant(state.E, self.E_of_lambda(state, upd, lam), lam)
            records.append(self._record(state.k, y, f, y_prev, f_prev, state.E, lam))
            log.info("k=%d sqrt2E=%.4e lambda=%.4f", state.k, math.sqrt(2 * state.E), lam)
            lambdas.append(lam)
            y_prev, f_prev = y, f
            state = self.step(state, upd, lam)
            E_hist.append(state.E)
        return RunResult(records, state, status, E_hist, lambdas, C_hat)

    def picard_run(self, u0: Callable) -> RunResult:
        """Fixed point ``y_k`` = linear null control with potential ``g~(y_{k-1})``."""
        c = self.cfg
        upd = self._solve(0.0, InitialData(u0))
        records: list[IterationRecord] = []
        y_prev = f_prev = None
        status = "maxiter"
        for k in range(c.max_iters):
            y = self.y_samples(upd.zeta)
            f = self.f_samples(upd.mu)
            rec = self._record(k, y, f, y_prev, f_prev, 0.0, 0.0)
            records.append(rec)
            if k > 0 and rec.rel_dy < c.picard_tol:
                status = "converged"
                break
            y_prev, f_prev = y, f
            upd = self._solve(self.g.gtilde(y), InitialData(u0))
        r = self._w12 * upd.zeta * self.g.gtilde(self._rho_inv * upd.zeta)
        state = IterateState(upd.zeta, upd.mu, r, self.weighted_E(r), len(records))
        flags = []
        if status == "converged" and not self.g.is_zero and self.g.name.startswith("paper"):
            flags.append("picard iteration converged; the reference behaviour is bounded non-convergence")
        return RunResult(records, state, status, flags=flags)


def _one_step_constant(E0: float, E1: float, lam: float) -> float:
    """Smallest ``C`` with ``sqrt(E1) <= sqrt(E0) (|1-lam| + lam^2 C sqrt(E0))``."""
    if E0 <= 0:
        return 0.0
    s0, s1 = math.sqrt(E0), math.sqrt(E1)
    return max((s1 / s0 - abs(1.0 - lam)) / (lam * lam * s0), 0.0)


def one_step_bound_holds(result: RunResult, slack: float = 1.5) -> bool:
    """Check ``sqrt E_{k+1} <= sqrt E_k (|1-lam| + lam^2 C sqrt E_k)`` along a run."""
    C = (result.C_hat or 0.0) * slack
    for E0, E1, lam in zip(result.E_history, result.E_history[1:], result.lambdas):
        if lam == 0.0:
            if E1 > E0:
                return False
            continue
        bound = math.sqrt(E0) * (abs(1.0 - lam) + lam * lam * C * math.sqrt(E0))
        if math.sqrt(E1) > bound * (1 + 1e-12) + 1e-300:
            return False
    return True


def convergence_order(records: list[IterationRecord] | list[float], n_last: int | None = None) -> float:
    """Slope of ``log e_{k+1}`` against ``log e_k`` with ``e_k = sqrt(2 E_k)``.

    By default the fit uses the last quartile of the sequence (at least three
    points); ``n_last`` selects the last ``n_last`` values instead.
    """
    e = np.array([r.sqrt2E if isinstance(r, IterationRecord) else float(r) for r in records])
    if e.size < 4:
        raise ValueError("convergence_order needs at least 4 records")
    if np.any(e <= 0) or np.any(np.diff(e) >= 0):
        raise ValueError("convergence_order needs a decreasing positive sequence")
    n = n_last if n_last is not None else max(3, int(math.ceil(e.size / 4)))
    if n < 3 or n > e.size:
        raise ValueError("n_last must lie between 3 and the number of records")
    tail = np.log(e[-n:])
    x, yv = tail[:-1], tail[1:]
    p, _ = np.polyfit(x, yv, 1)
    return float(p)
