"""Weighted L2(0,T; H^-1) norms through per-time-level Dirichlet Poisson solves."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class RieszSlice:
    """P1 Poisson solver on (0,1) fed by samples on a fixed spatial Gauss rule.

    The stiffness matrix is Cholesky-factored once (banded) and reused for
    every time level and every call.
    """

    def __init__(self, xs, wxs, n_cells: int):
        self.xs = np.asarray(xs, dtype=float)
        self.wxs = np.asarray(wxs, dtype=float)
        self.n_cells = int(n_cells)
        if self.n_cells < 2:
            raise ValueError("Riesz mesh needs at least 2 cells")
        h = 1.0 / self.n_cells
        n_int = self.n_cells - 1
        # upper banded storage of the SPD tridiagonal stiffness
        ab = np.empty((2, n_int))
        ab[0, :] = -1.0 / h
        ab[1, :] = 2.0 / h
        self._chol = sla.cholesky_banded(ab, lower=False)
        # hat functions at the sample points: each sample touches <= 2 interior nodes
        cell = np.minimum((self.xs / h).astype(np.int64), self.n_cells - 1)
        frac = self.xs / h - cell
        rows, cols, vals = [], [], []
        for node, v in ((cell, 1.0 - frac), (cell + 1, frac)):
            keep = (node >= 1) & (node <= n_int)
            rows.append(node[keep] - 1)
            cols.append(np.flatnonzero(keep))
            vals.append(v[keep])
        self._load = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_int, self.xs.size),
        )

    def solve(self, r):
        """Riesz representatives (interior nodal values) for samples ``r`` of shape (n_space,) or (n_levels, n_space)."""
        r = np.atleast_2d(np.asarray(r, dtype=float))
        b = self._load @ (r * self.wxs).T
        c = sla.cho_solve_banded((self._chol, False), b, check_finite=False)
        return b, c

    def norms_sq(self, r) -> np.ndarray:
        """``||r(., t_L)||^2_{H^-1}`` for every row of ``r``."""
        b, c = self.solve(r)
        return np.einsum("ij,ij->j", b, c)


def hminus_norm_sq_slice(r_values, xs, wxs, n_cells: int) -> float:
    """H^-1(0,1) norm squared of one slice given on the spatial rule ``(xs, wxs)``."""
    r_values = np.asarray(r_values, dtype=float)
    if not np.all(np.isfinite(r_values)):
        raise ValueError("non-finite residual samples")
    return float(RieszSlice(xs, wxs, n_cells).norms_sq(r_values)[0])


class RieszEngine:
    """Evaluates ``E = 1/2 ||r||^2_{L2(0,T;H^-1)}`` on a :class:`QuadGrid`."""

    def __init__(self, quad, refine: int = 4):
        self.quad = quad
        self.refine = int(refine)
        self.slice = RieszSlice(quad.xs, quad.wxs, self.refine * quad.grid.nx)

    def level_norms_sq(self, r: np.ndarray) -> np.ndarray:
        return self.slice.norms_sq(r)

    def weighted_E(self, r: np.ndarray) -> float:
        if not np.all(np.isfinite(r)):
            raise FloatingPointError("non-finite residual samples")
        return 0.5 * float(np.sum(self.quad.wts * self.level_norms_sq(r)))


def weighted_E(r: np.ndarray, engine: RieszEngine) -> float:
    return engine.weighted_E(r)
