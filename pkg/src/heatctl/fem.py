"""Structured space-time mesh of (0,1) x (0,T) with bicubic Hermite (C1) elements.

Every grid node carries four coefficients: value, d/dx, d/dt and d2/dxdt.
Sample fields live on a tensor Gauss rule and are stored in *level layout*:
an array of shape ``(n_levels, n_space)`` where row ``L`` is one Gauss time
level and column ``S`` one spatial Gauss abscissa.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .weights import DomainError, WeightBundle, WeightParams, bundle

VALUE, DX, DT, DXT = range(4)


@dataclass(frozen=True)
class Grid:
    """Uniform ``nx`` x ``nt`` rectangle grid of (0,1) x (0,T).

    The weight profile has a kink in time at ``T/4``; when that instant is
    a grid row (``nt`` divisible by 4) and ``split_kink`` is set, the time
    derivative coefficients of that row are doubled so fields may have a
    one-sided ``d/dt`` there (the field stays continuous and C1 in x).
    """

    nx: int
    nt: int
    T: float
    split_kink: bool = True

    def __post_init__(self):
        if self.nx < 4 or self.nt < 4:
            raise ValueError(f"grid needs nx, nt >= 4 (got {self.nx}, {self.nt})")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def ht(self) -> float:
        return self.T / self.nt

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.nt + 1)

    @property
    def split_row(self) -> int | None:
        if self.split_kink and self.nt % 4 == 0:
            return self.nt // 4
        return None

    @property
    def n_dofs(self) -> int:
        extra = 0 if self.split_row is None else 2 * (self.nx + 1)
        return 4 * self.n_nodes + extra

    def node(self, i, j):
        return j * (self.nx + 1) + i

    def upper_dofs(self, i):
        """Dofs ``(d/dt, d2/dxdt)`` seen from above the split row at column ``i``."""
        base = 4 * self.n_nodes + 2 * np.asarray(i)
        return base, base + 1

    @cached_property
    def constrained(self) -> np.ndarray:
        """Mask of dofs pinned to zero: value and d/dt on x = 0 and x = 1."""
        mask = np.zeros(self.n_dofs, dtype=bool)
        j = np.arange(self.nt + 1)
        for i in (0, self.nx):
            n = self.node(i, j)
            mask[4 * n + VALUE] = True
            mask[4 * n + DT] = True
            if self.split_row is not None:
                mask[self.upper_dofs(i)[0]] = True
        return mask

    @cached_property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.constrained)

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        """Global dof indices of the 16 local functions, shape ``(nt*nx, 16)``.

        Cells are ordered time-major (``c = cj*nx + ci``); local function
        ``4*ix + it`` is the product of x-factor ``ix`` and t-factor ``it``
        where factor ``2*side + deriv`` selects the node side and whether the
        derivative coefficient is meant.
        """
        ci, cj = np.meshgrid(np.arange(self.nx), np.arange(self.nt))
        ci, cj = ci.ravel(), cj.ravel()
        out = np.empty((ci.size, 16), dtype=np.int64)
        js = self.split_row
        for ix in range(4):
            a, dx = divmod(ix, 2)
            for it in range(4):
                b, dt = divmod(it, 2)
                out[:, 4 * ix + it] = 4 * self.node(ci + a, cj + b) + dx + 2 * dt
                if js is not None and b == 0 and dt == 1:
                    above = cj == js
                    out[above, 4 * ix + it] = self.upper_dofs(ci[above] + a)[dx]
        return out


def hermite_1d(xi, h: float):
    """Cubic Hermite factors on a cell of length ``h`` at local coordinate ``xi`` in [0,1].

    Returns value, first and second physical derivatives, each shaped
    ``xi.shape + (4,)`` in the order (left value, left slope, right value,
    right slope).
    """
    xi = np.asarray(xi, dtype=float)[..., None]
    v = np.concatenate(
        [
            1 - 3 * xi**2 + 2 * xi**3,
            h * (xi - 2 * xi**2 + xi**3),
            3 * xi**2 - 2 * xi**3,
            h * (xi**3 - xi**2),
        ],
        axis=-1,
    )
    d = np.concatenate(
        [
            (-6 * xi + 6 * xi**2) / h,
            1 - 4 * xi + 3 * xi**2,
            (6 * xi - 6 * xi**2) / h,
            3 * xi**2 - 2 * xi,
        ],
        axis=-1,
    )
    dd = np.concatenate(
        [
            (-6 + 12 * xi) / h**2,
            (-4 + 6 * xi) / h,
            (6 - 12 * xi) / h**2,
            (6 * xi - 2) / h,
        ],
        axis=-1,
    )
    return v, d, dd


def _tensor(xv, tv):
    # (..., 4) x (..., 4) -> (..., 16) with index 4*ix + it
    return (xv[..., :, None] * tv[..., None, :]).reshape(xv.shape[:-1] + (16,))


def shape_eval(grid: Grid, xi, tau) -> dict[str, np.ndarray]:
    """Values and derivatives of the 16 local basis functions at local coords (xi, tau)."""
    xv, xd, xdd = hermite_1d(xi, grid.hx)
    tv, td, _ = hermite_1d(tau, grid.ht)
    return {
        "val": _tensor(xv, tv),
        "dx": _tensor(xd, tv),
        "dt": _tensor(xv, td),
        "dxx": _tensor(xdd, tv),
        "dxt": _tensor(xd, td),
    }


@dataclass
class C1Field:
    grid: Grid
    coef: np.ndarray

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        if self.coef.shape != (self.grid.n_dofs,):
            raise ValueError("coefficient vector has wrong length")

    @classmethod
    def zeros(cls, grid: Grid) -> "C1Field":
        return cls(grid, np.zeros(grid.n_dofs))

    @classmethod
    def from_free(cls, grid: Grid, values) -> "C1Field":
        c = np.zeros(grid.n_dofs)
        c[grid.free] = values
        return cls(grid, c)

    @property
    def free_values(self) -> np.ndarray:
        return self.coef[self.grid.free]

    def satisfies_constraints(self) -> bool:
        return bool(np.all(self.coef[self.grid.constrained] == 0.0))

    def __add__(self, other: "C1Field") -> "C1Field":
        return C1Field(self.grid, self.coef + other.coef)

    def __sub__(self, other: "C1Field") -> "C1Field":
        return C1Field(self.grid, self.coef - other.coef)

    def __mul__(self, c: float) -> "C1Field":
        return C1Field(self.grid, c * self.coef)

    __rmul__ = __mul__


def interpolate(grid: Grid, u, ux, ut, uxt, constrain: bool = True) -> C1Field:
    """Hermite interpolant from callables for the value and the three nodal derivatives."""
    xs = np.linspace(0.0, 1.0, grid.nx + 1)
    ts = np.linspace(0.0, grid.T, grid.nt + 1)
    X, Tt = np.meshgrid(xs, ts)
    c = np.empty((grid.n_nodes, 4))
    for k, fn in enumerate((u, ux, ut, uxt)):
        c[:, k] = np.broadcast_to(fn(X, Tt), X.shape).ravel()
    coef = np.zeros(grid.n_dofs)
    coef[: 4 * grid.n_nodes] = c.ravel()
    js = grid.split_row
    if js is not None:
        i = np.arange(grid.nx + 1)
        n = grid.node(i, js)
        up_t, up_xt = grid.upper_dofs(i)
        coef[up_t] = c[n, DT]
        coef[up_xt] = c[n, DXT]
    if constrain:
        coef[grid.constrained] = 0.0
    return C1Field(grid, coef)


def _locate(grid: Grid, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < 0) or np.any(x > 1) or np.any(t < 0) or np.any(t > grid.T):
        raise DomainError("point outside the space-time cylinder")
    ci = np.minimum((x / grid.hx).astype(np.int64), grid.nx - 1)
    cj = np.minimum((t / grid.ht).astype(np.int64), grid.nt - 1)
    xi = x / grid.hx - ci
    tau = t / grid.ht - cj
    return cj * grid.nx + ci, xi, tau


def evaluate_field(f: C1Field, x, t, order: str = "value"):
    """Evaluate a C1 field at arbitrary points.

    ``order`` is ``"value"`` (returns an array), ``"grad"`` (returns
    ``(v, dx, dt)``) or ``"second"`` (returns ``(v, dx, dt, dxx, dxt)``).
    """
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    cell, xi, tau = _locate(f.grid, x, t)
    loc = f.coef[f.grid.cell_dofs[cell]]
    sh = shape_eval(f.grid, xi, tau)
    ev = lambda key: np.einsum("...a,...a->...", sh[key], loc)
    if order == "value":
        return ev("val")
    if order == "grad":
        return ev("val"), ev("dx"), ev("dt")
    if order == "second":
        return ev("val"), ev("dx"), ev("dt"), ev("dxx"), ev("dxt")
    raise ValueError(f"unknown order {order!r}")


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    z, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (z + 1.0), 0.5 * w


class QuadGrid:
    """Tensor Gauss rule on every cell with cached weight data.

    Attributes in level layout: ``x``, ``t``, ``w`` (area weights),
    ``ind_omega`` and ``bundle`` (a :class:`WeightBundle`).
    """

    def __init__(self, grid: Grid, params: WeightParams, order: int = 5, aligned: bool = False):
        if order < 3:
            raise ValueError("quadrature order must be >= 3")
        if abs(params.T - grid.T) > 1e-14 * grid.T:
            raise ValueError("grid and weight horizons differ")
        self.grid, self.params, self.order = grid, params, order
        q, wq = gauss_legendre(order)
        self.xi_ref, self.w_ref = q, wq
        nx, nt = grid.nx, grid.nt
        # 1D abscissae in increasing order
        self.xs = ((np.arange(nx)[:, None] + q[None, :]) * grid.hx).ravel()
        self.wxs = np.tile(wq * grid.hx, nx)
        self.ts = ((np.arange(nt)[:, None] + q[None, :]) * grid.ht).ravel()
        self.wts = np.tile(wq * grid.ht, nt)
        self.x, self.t = np.meshgrid(self.xs, self.ts)
        self.w = self.wts[:, None] * self.wxs[None, :]
        a1, a2 = params.omega
        if aligned:
            # cell-wise indicator: a cell belongs to omega when its centre does
            xc = (np.floor(self.x / grid.hx) + 0.5) * grid.hx
            self.ind_omega = ((xc > a1) & (xc < a2)).astype(float)
        else:
            self.ind_omega = ((self.x > a1) & (self.x < a2)).astype(float)
        self.bundle: WeightBundle = bundle(self.x, self.t, params)
        # reference basis values at the order x order local points (qt-major, qx-minor)
        XI, TAU = np.meshgrid(q, q)
        self._ref = shape_eval(grid, XI.ravel(), TAU.ravel())

    @property
    def shape(self):
        return self.x.shape

    @property
    def n_points(self) -> int:
        return self.x.size

    # level layout (nt*q, nx*q) <-> cell layout (nt*nx, q*q)
    def to_cells(self, arr: np.ndarray) -> np.ndarray:
        nx, nt, q = self.grid.nx, self.grid.nt, self.order
        return arr.reshape(nt, q, nx, q).transpose(0, 2, 1, 3).reshape(nt * nx, q * q)

    def to_levels(self, arr: np.ndarray) -> np.ndarray:
        nx, nt, q = self.grid.nx, self.grid.nt, self.order
        return arr.reshape(nt, nx, q, q).transpose(0, 2, 1, 3).reshape(nt * q, nx * q)

    def local_coefs(self, f: C1Field) -> np.ndarray:
        return f.coef[self.grid.cell_dofs]

    def sample(self, f: C1Field, key: str = "val") -> np.ndarray:
        """Field (or one derivative) at all quadrature points, level layout."""
        loc = self.local_coefs(f)
        return self.to_levels(loc @ self._ref[key].T)

    def integrate(self, values: np.ndarray) -> float:
        # fixed summation order: per level, then over levels
        return float(np.sum(np.sum(values * self.w, axis=1)))

    def norm(self, values: np.ndarray, region: str = "Q") -> float:
        v = values**2
        if region == "q":
            v = v * self.ind_omega
        return float(np.sqrt(self.integrate(v)))

    def scatter(self, values: np.ndarray, key: str = "val") -> np.ndarray:
        """Global vector ``sum_q w_q values_q phi_i(q)`` (``values`` in level layout)."""
        cw = self.to_cells(values * self.w)
        loc = cw @ self._ref[key]
        return np.bincount(self.grid.cell_dofs.ravel(), weights=loc.ravel(),
                           minlength=self.grid.n_dofs)


def build_quadrature(grid: Grid, params: WeightParams, order: int = 5,
                     aligned: bool = False) -> QuadGrid:
    return QuadGrid(grid, params, order, aligned)
