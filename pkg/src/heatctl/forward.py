"""Independent method-of-lines solver for ``y_t - nu y_xx + g(y) = f 1_omega``.

P1 finite elements in space, implicit Euler or Crank-Nicolson in time, a
Newton iteration per step. Nothing here touches the space-time machinery, so
agreement between the two is evidence rather than tautology.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .nonlinearity import Nonlinearity


class ForwardError(RuntimeError):
    pass


@dataclass(frozen=True)
class ForwardConfig:
    nx_f: int = 513
    nt_f: int = 2048
    scheme: str = "crank_nicolson"
    newton_tol: float = 1e-10
    newton_maxit: int = 30
    blowup_cap: float = 1e12
    snapshots: int = 9

    def __post_init__(self):
        if self.scheme not in ("implicit_euler", "crank_nicolson"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.nx_f < 3 or self.nt_f < 1:
            raise ValueError("forward mesh too small")


@dataclass
class Trajectory:
    x: np.ndarray
    times: np.ndarray
    norms: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    y_final: np.ndarray
    status: str = "ok"
    newton_iters: list[int] = field(default_factory=list)

    @property
    def final_norm(self) -> float:
        return float(self.norms[-1])


class _P1:
    def __init__(self, n_nodes: int):
        self.n_cells = n_nodes - 1
        self.h = 1.0 / self.n_cells
        self.x = np.linspace(0.0, 1.0, n_nodes)
        z, w = np.polynomial.legendre.leggauss(3)
        self.qref = 0.5 * (z + 1)
        self.wref = 0.5 * w * self.h
        self.xq = (np.arange(self.n_cells)[:, None] + self.qref[None, :]) * self.h
        # hat values at Gauss points: left and right node of each cell
        self.phi = np.stack([1 - self.qref, self.qref], axis=1)  # (q, 2)
        n = self.n_cells - 1
        h = self.h
        self.n = n
        self.M = np.zeros((3, n))  # banded (1 super, diag, 1 sub)
        self.M[0, 1:] = h / 6
        self.M[1, :] = 4 * h / 6
        self.M[2, :-1] = h / 6
        self.S = np.zeros((3, n))
        self.S[0, 1:] = -1 / h
        self.S[1, :] = 2 / h
        self.S[2, :-1] = -1 / h

    @staticmethod
    def banded_mv(B, v):
        out = B[1] * v
        out[:-1] += B[0, 1:] * v[1:]
        out[1:] += B[2, :-1] * v[:-1]
        return out

    def full(self, y_int):
        return np.concatenate([[0.0], y_int, [0.0]])

    def at_gauss(self, y_int):
        y = self.full(y_int)
        return y[:-1, None] * self.phi[None, :, 0] + y[1:, None] * self.phi[None, :, 1]

    def load(self, vals):
        """``int vals * phi_i`` for interior nodes, ``vals`` sampled at (cell, q)."""
        cw = vals * self.wref[None, :]
        left = cw @ self.phi[:, 0]
        right = cw @ self.phi[:, 1]
        out = np.zeros(self.n_cells + 1)
        out[:-1] += left
        out[1:] += right
        return out[1:-1]

    def weighted_mass(self, c):
        """Banded matrix ``int c phi_i phi_j`` with ``c`` sampled at Gauss points."""
        cw = c * self.wref[None, :]
        p0, p1 = self.phi[:, 0], self.phi[:, 1]
        m00 = cw @ (p0 * p0)
        m01 = cw @ (p0 * p1)
        m11 = cw @ (p1 * p1)
        diag = np.zeros(self.n_cells + 1)
        diag[:-1] += m00
        diag[1:] += m11
        B = np.zeros((3, self.n))
        B[1] = diag[1:-1]
        B[0, 1:] = m01[1:-1]
        B[2, :-1] = m01[1:-1]
        return B

    def l2(self, y_int) -> float:
        return float(np.sqrt(max(y_int @ self.banded_mv(self.M, y_int), 0.0)))


def solve_forward(u0: Callable, control: Callable | None, g: Nonlinearity, T: float,
                  nu: float = 1.0, cfg: ForwardConfig = ForwardConfig()) -> Trajectory:
    """Integrate the controlled semilinear heat equation up to ``T``.

    ``control(x, t)`` must accept arrays and return the full source
    ``f(x,t) 1_omega(x)``; pass ``None`` for the uncontrolled equation.
    """
    sp = _P1(cfg.nx_f)
    dt = T / cfg.nt_f
    theta = 1.0 if cfg.scheme == "implicit_euler" else 0.5
    y = np.asarray(u0(sp.x[1:-1]), dtype=float).copy()

    def source(t):
        if control is None:
            return np.zeros(sp.n)
        return sp.load(np.asarray(control(sp.xq, np.full_like(sp.xq, t)), dtype=float))

    def reaction(yv):
        return sp.load(g.g(sp.at_gauss(yv)))

    times = np.linspace(0.0, T, cfg.nt_f + 1)
    norms = np.empty(cfg.nt_f + 1)
    norms[0] = sp.l2(y)
    snap_idx = set(np.linspace(0, cfg.nt_f, cfg.snapshots).round().astype(int).tolist())
    snaps, snap_t = [], []
    if 0 in snap_idx:
        snaps.append(sp.full(y))
        snap_t.append(0.0)
    iters = []
    f_old = source(0.0)
    status = "ok"
    for n in range(cfg.nt_f):
        f_new = source(times[n + 1])
        # explicit part of the theta scheme
        rhs_fixed = sp.banded_mv(sp.M, y) / dt - (1 - theta) * (
            nu * sp.banded_mv(sp.S, y) + reaction(y)
        ) + theta * f_new + (1 - theta) * f_old
        w = y.copy()
        for it in range(cfg.newton_maxit):
            res = sp.banded_mv(sp.M, w) / dt + theta * (nu * sp.banded_mv(sp.S, w) + reaction(w)) - rhs_fixed
            J = sp.M / dt + theta * (nu * sp.S + sp.weighted_mass(g.gprime(sp.at_gauss(w))))
            delta = sla.solve_banded((1, 1), J, res, check_finite=False)
            w -= delta
            if np.linalg.norm(delta) <= cfg.newton_tol * max(1.0, np.linalg.norm(w)):
                break
        else:
            raise ForwardError(f"Newton stagnated at step {n + 1} (t={times[n + 1]:.4g})")
        iters.append(it + 1)
        y = w
        f_old = f_new
        norms[n + 1] = sp.l2(y)
        if n + 1 in snap_idx:
            snaps.append(sp.full(y))
            snap_t.append(times[n + 1])
        if not np.isfinite(norms[n + 1]) or norms[n + 1] > cfg.blowup_cap:
            status = "blowup"
            norms = norms[: n + 2]
            times = times[: n + 2]
            break
    return Trajectory(sp.x, times, norms, np.array(snap_t), np.array(snaps), sp.full(y), status, iters)


def l2_norm_function(u0: Callable, n_nodes: int = 513) -> float:
    """``||u0||_{L2(0,1)}`` by composite Gauss quadrature."""
    z, w = np.polynomial.legendre.leggauss(5)
    h = 1.0 / (n_nodes - 1)
    xq = ((np.arange(n_nodes - 1)[:, None] + 0.5 * (z + 1)[None, :]) * h).ravel()
    wq = np.tile(0.5 * w * h, n_nodes - 1)
    return float(np.sqrt(np.sum(wq * np.asarray(u0(xq)) ** 2)))


def control_from_field(mf, params) -> Callable:
    """Evaluator of ``f(x,t) 1_omega(x) = -rho_0^-1 mf 1_omega`` for a C1 control field."""
    from .fem import evaluate_field
    from .weights import bundle

    a1, a2 = params.omega

    def f(x, t):
        x = np.asarray(x, dtype=float)
        inside = (x > a1) & (x < a2)
        out = np.zeros(np.broadcast(x, t).shape)
        if np.any(inside):
            xi, ti = np.broadcast_arrays(x, t)
            xi, ti = xi[inside], ti[inside]
            out[inside] = -bundle(xi, ti, params).rho0_inv * evaluate_field(mf, xi, ti)
        return out

    return f


@dataclass
class NullControlReport:
    ratio: float
    trajectory: Trajectory


def null_control_report(mf, params, u0: Callable, g: Nonlinearity, nu: float,
                        cfg: ForwardConfig = ForwardConfig()) -> NullControlReport:
    """Run the forward solver under the control encoded by ``mf`` and return ``||y(T)|| / ||u0||``."""
    traj = solve_forward(u0, control_from_field(mf, params), g, params.T, nu, cfg)
    n0 = l2_norm_function(u0, cfg.nx_f)
    ratio = traj.final_norm / n0 if n0 > 0 else traj.final_norm
    if traj.status != "ok":
        ratio = float("inf")
    return NullControlReport(float(ratio), traj)
