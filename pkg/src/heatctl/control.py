"""Minimal-weighted-norm null controls for the linearized heat equation.

The dual unknown ``m`` (a C1 field) solves the SPD system

    sum_q w D(m) D(mbar) + sum_{q in omega} w m mbar = load(mbar)

where ``D(m) = rho^-1 L*_A (rho_0 m)`` and ``L*_A q = -q_t - nu q_xx + A q``.
The controlled state in weighted form is ``zeta = D(m)`` and the control is
``-rho_0^-1 m`` on omega.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import C1Field, QuadGrid, gauss_legendre, hermite_1d
from .weights import rho0_initial


class AssemblyError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class InitialData:
    u0: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Residual:
    r: np.ndarray  # rho_2 * B at every quadrature point (level layout)


Source = Union[InitialData, Residual, None]


@dataclass
class LinearizedProblem:
    quad: QuadGrid
    A: np.ndarray | float
    source: Source
    nu: float = 1.0

    def potential(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.A, dtype=float), self.quad.shape)


@dataclass
class ControlUpdate:
    mu: C1Field
    zeta: np.ndarray
    quad: QuadGrid

    @property
    def norm_zeta(self) -> float:
        """``||rho Y||_{L2(Q_T)}``."""
        return self.quad.norm(self.zeta)

    @property
    def mu_samples(self) -> np.ndarray:
        return self.quad.sample(self.mu)

    @property
    def norm_mu(self) -> float:
        """``||rho_0 F||_{L2(q_T)}``."""
        return self.quad.norm(self.mu_samples, region="q")

    def state_samples(self) -> np.ndarray:
        return self.quad.bundle.rho_inv * self.zeta

    def control_samples(self) -> np.ndarray:
        return -self.quad.bundle.rho0_inv * self.mu_samples * self.quad.ind_omega


def operator_coefficients(quad: QuadGrid, A, nu: float):
    """Per-point multipliers of (m, m_t, m_x, m_xx) in ``rho^-1 L*_A(rho_0 m)``."""
    b = quad.bundle
    A = np.broadcast_to(np.asarray(A, dtype=float), quad.shape)
    a_val = -b.c_dt - nu * b.c_dxx + A * b.w32
    a_dt = -b.w32
    a_dx = -2.0 * nu * b.c_dx
    a_dxx = -nu * b.w32
    return a_val, a_dt, a_dx, a_dxx


def apply_D(mu: C1Field, A, quad: QuadGrid, nu: float = 1.0) -> np.ndarray:
    """``zeta = rho^-1 L*_A(rho_0 mu)`` sampled at every quadrature point."""
    a_val, a_dt, a_dx, a_dxx = operator_coefficients(quad, A, nu)
    return (
        a_val * quad.sample(mu, "val")
        + a_dt * quad.sample(mu, "dt")
        + a_dx * quad.sample(mu, "dx")
        + a_dxx * quad.sample(mu, "dxx")
    )


def _local_D(quad: QuadGrid, A, nu: float) -> np.ndarray:
    """D applied to each local basis function, shape (n_cells, n_q, 16)."""
    coefs = [quad.to_cells(c) for c in operator_coefficients(quad, A, nu)]
    ref = quad._ref
    out = coefs[0][:, :, None] * ref["val"][None]
    out += coefs[1][:, :, None] * ref["dt"][None]
    out += coefs[2][:, :, None] * ref["dx"][None]
    out += coefs[3][:, :, None] * ref["dxx"][None]
    return out


@dataclass
class PrimalSystem:
    K: sp.csr_matrix
    load: np.ndarray
    quad: QuadGrid
    A: np.ndarray
    nu: float
    _lu: object = None

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.K.tocsc(), permc_spec="MMD_AT_PLUS_A",
                                     diag_pivot_thresh=0.0, options={"SymmetricMode": True})
            except RuntimeError as exc:
                raise SolverError(
                    f"factorization failed ({exc}); check weight parameters and mesh"
                ) from exc
            diag = self._lu.U.diagonal()
            if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
                raise SolverError("system is not positive definite; check weight parameters and mesh")
        return self._lu


def initial_load(quad: QuadGrid, u0: Callable) -> np.ndarray:
    """``int_0^1 rho_0(x,0) u0(x) mbar(x,0) dx`` for every global dof."""
    grid = quad.grid
    q, wq = gauss_legendre(quad.order)
    xs = ((np.arange(grid.nx)[:, None] + q[None, :]) * grid.hx)
    ws = np.broadcast_to(wq * grid.hx, xs.shape)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = rho0_initial(xs, quad.params) * np.asarray(u0(xs), dtype=float) * ws
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(vals), axis=1))[0])
        raise AssemblyError(f"non-finite initial load in cell (ix={bad}, it=0); the weight exponent is too large")
    xv, _, _ = hermite_1d(q, grid.hx)  # (q, 4)
    # at t = 0 only the bottom-node value factor (it = 0) is nonzero and equals 1
    loc = vals @ xv  # (nx, 4) -> x-factor ix
    dofs = grid.cell_dofs[: grid.nx][:, [0, 4, 8, 12]]  # cells of the first time row, it = 0
    return np.bincount(dofs.ravel(), weights=loc.ravel(), minlength=grid.n_dofs)


def assemble(problem: LinearizedProblem) -> PrimalSystem:
    quad, grid = problem.quad, problem.quad.grid
    A = np.array(problem.potential(), dtype=float)
    Dloc = _local_D(quad, A, problem.nu)
    wc = quad.to_cells(quad.w)
    wo = quad.to_cells(quad.w * quad.ind_omega)
    V = quad._ref["val"]
    Kloc = np.einsum("cqa,cq,cqb->cab", Dloc, wc, Dloc, optimize=False)
    Kloc += np.einsum("qa,cq,qb->cab", V, wo, V, optimize=False)
    bad = ~np.all(np.isfinite(Kloc), axis=(1, 2))
    if np.any(bad):
        c = int(np.flatnonzero(bad)[0])
        raise AssemblyError(f"non-finite element matrix in cell (ix={c % grid.nx}, it={c // grid.nx})")

    full_to_free = -np.ones(grid.n_dofs, dtype=np.int64)
    full_to_free[grid.free] = np.arange(grid.free.size)
    cd = full_to_free[grid.cell_dofs]
    rows = np.broadcast_to(cd[:, :, None], Kloc.shape).ravel()
    cols = np.broadcast_to(cd[:, None, :], Kloc.shape).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = grid.free.size
    K = sp.coo_matrix((Kloc.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    K.sum_duplicates()

    src = problem.source
    if src is None:
        load = np.zeros(grid.n_dofs)
    elif isinstance(src, InitialData):
        load = initial_load(quad, src.u0)
    elif isinstance(src, Residual):
        r = np.asarray(src.r, dtype=float)
        if not np.all(np.isfinite(r)):
            raise AssemblyError("non-finite residual samples")
        load = quad.scatter((quad.params.T - quad.t) * r)
    else:
        raise TypeError(f"unsupported source {src!r}")
    return PrimalSystem(K, load[grid.free], quad, A, problem.nu)


def solve_system(system: PrimalSystem, kind: str = "direct", cg_tol: float = 1e-10,
                 cg_maxit: int = 20000) -> ControlUpdate:
    quad, grid = system.quad, system.quad.grid
    if not np.any(system.load):
        m = np.zeros(grid.free.size)
    elif kind == "direct":
        m = system.factorize().solve(system.load)
    elif kind == "cg":
        d = system.K.diagonal()
        M = sp.diags(1.0 / d)
        m, info = spla.cg(system.K, system.load, rtol=cg_tol, maxiter=cg_maxit, M=M)
        if info != 0:
            raise SolverError(f"conjugate gradients did not converge in {cg_maxit} iterations")
    else:
        raise ValueError(f"unknown solver kind {kind!r}")
    mu = C1Field.from_free(grid, m)
    zeta = apply_D(mu, system.A, quad, system.nu)
    return ControlUpdate(mu, zeta, quad)


def solve_control(problem: LinearizedProblem, kind: str = "direct", **kw) -> ControlUpdate:
    return solve_system(assemble(problem), kind, **kw)


def discrete_objective(system: PrimalSystem, m: np.ndarray) -> float:
    """``1/2 m^T K m - load^T m``; minimized by the solution of the primal system."""
    return 0.5 * float(m @ (system.K @ m)) - float(system.load @ m)
