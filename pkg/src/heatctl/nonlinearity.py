"""Reaction terms ``g`` together with ``g'``, the quotient ``g(s)/s`` and W_s metadata."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Array = np.ndarray

# grid used to bound |g(s)/s| numerically
_K_GRID = np.logspace(-12, 12, 2401)


class ConfigError(ValueError):
    """Invalid nonlinearity or experiment configuration."""


@dataclass(frozen=True)
class Nonlinearity:
    g: Callable[[Array], Array]
    gprime: Callable[[Array], Array]
    gtilde: Callable[[Array], Array]
    name: str = "custom"
    holder_s: float = 1.0
    gsecond: Callable[[Array], Array] | None = None
    lipschitz_K: float = field(default=float("nan"))

    def __post_init__(self):
        if np.isnan(self.lipschitz_K):
            s = np.concatenate([-_K_GRID, _K_GRID])
            with np.errstate(all="ignore"):
                K = float(np.nanmax(np.abs(self.gtilde(s))))
            object.__setattr__(self, "lipschitz_K", K)

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"


def zero() -> Nonlinearity:
    z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return Nonlinearity(z, z, z, name="zero", gsecond=z, lipschitz_K=0.0)


def linear(c: float) -> Nonlinearity:
    c = float(c)
    const = lambda s: np.full_like(np.asarray(s, dtype=float), c)
    return Nonlinearity(
        lambda s: c * np.asarray(s, dtype=float),
        const,
        const,
        name="linear",
        gsecond=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        lipschitz_K=abs(c),
    )


def _outer(s, alpha):
    """-s^alpha log^{3/2}(1+s) and its first two derivatives, for s > 0."""
    L = np.log1p(s)
    sa = s**alpha
    h = -sa * L**1.5
    dh = -alpha * s ** (alpha - 1) * L**1.5 - 1.5 * sa * np.sqrt(L) / (1 + s)
    ddh = (
        -alpha * (alpha - 1) * s ** (alpha - 2) * L**1.5
        - 3 * alpha * s ** (alpha - 1) * np.sqrt(L) / (1 + s)
        - 0.75 * sa / (np.sqrt(L) * (1 + s) ** 2)
        + 1.5 * sa * np.sqrt(L) / (1 + s) ** 2
    )
    return h, dh, ddh


@dataclass(frozen=True)
class PaperG:
    """Coefficients of the benchmark nonlinearity.

    Inside ``[-a, a]`` the function is ``c1*|s| + c2*s**2`` (or, smoothed,
    ``c1*s**2 + c2*s**4``), outside it is ``-|s|^alpha log^{3/2}(1+|s|)``.
    """

    a: float
    alpha: float
    c1_coef: float
    c2_coef: float
    smooth: bool = False


def paper_coefficients(a: float, alpha: float, smooth: bool = False) -> PaperG:
    if not a > 0:
        raise ConfigError(f"g.a must be > 0, got {a}")
    if not 0 < alpha < 1:
        raise ConfigError(f"g.alpha must lie in (0, 1), got {alpha}")
    h, dh, _ = _outer(np.float64(a), alpha)
    if smooth:
        # c1 s^2 + c2 s^4: value and slope match at a
        mat = np.array([[a**2, a**4], [2 * a, 4 * a**3]])
    else:
        # c1 |s| + c2 s^2
        mat = np.array([[a, a**2], [1.0, 2 * a]])
    c1, c2 = np.linalg.solve(mat, np.array([h, dh]))
    return PaperG(a, alpha, float(c1), float(c2), smooth)


def paper_g(a: float = 0.1, alpha: float = 0.95, smooth: bool = False) -> Nonlinearity:
    """Even benchmark nonlinearity with sublinear-log growth.

    Derivatives at ``|s| = a`` use the outer branch. At ``s = 0`` the
    non-smooth variant has a kink; ``g'(0)`` is taken as the symmetric
    derivative 0 and ``g(s)/s`` is odd with a jump there.
    """
    pc = paper_coefficients(a, alpha, smooth)
    c1, c2 = pc.c1_coef, pc.c2_coef

    def split(s):
        s = np.asarray(s, dtype=float)
        u = np.abs(s)
        inner = u < a
        uo = np.where(inner, a, u)
        return s, u, inner, uo

    def g(s):
        s, u, inner, uo = split(s)
        h, _, _ = _outer(uo, alpha)
        li = c1 * u**2 + c2 * u**4 if smooth else c1 * u + c2 * u**2
        return np.where(inner, li, h)

    def gprime(s):
        s, u, inner, uo = split(s)
        _, dh, _ = _outer(uo, alpha)
        sg = np.sign(s)
        li = 2 * c1 * s + 4 * c2 * s**3 if smooth else sg * (c1 + 2 * c2 * u)
        return np.where(inner, li, sg * dh)

    def gsecond(s):
        s, u, inner, uo = split(s)
        _, _, ddh = _outer(uo, alpha)
        li = 2 * c1 + 12 * c2 * s**2 if smooth else np.full_like(s, 2 * c2)
        return np.where(inner, li, ddh)

    def gtilde(s):
        s, u, inner, uo = split(s)
        h, _, _ = _outer(uo, alpha)
        sg = np.sign(s)
        li = c1 * s + c2 * s**3 if smooth else sg * (c1 + c2 * u)
        return np.where(inner, li, sg * h / uo)

    return Nonlinearity(
        g, gprime, gtilde, name="paper-smooth" if smooth else "paper", holder_s=1.0, gsecond=gsecond
    )


def estimate_holder(n: Nonlinearity, s: float, grid) -> float:
    """Largest sampled ``|g'(a) - g'(b)| / |a - b|^s`` over all pairs of ``grid``."""
    grid = np.unique(np.asarray(grid, dtype=float))
    d = n.gprime(grid)
    best = 0.0
    # blockwise to keep memory bounded on large grids
    step = 512
    for i in range(0, grid.size, step):
        gi = grid[i : i + step, None]
        di = d[i : i + step, None]
        dist = np.abs(gi - grid[None, :])
        num = np.abs(di - d[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dist > 0, num / dist**s, 0.0)
        best = max(best, float(q.max()))
    return best


def from_table(points, values) -> Nonlinearity:
    """Piecewise-linear ``g`` through tabulated ``(s, g(s))`` pairs (must contain 0 -> 0)."""
    xs = np.asarray(points, dtype=float)
    ys = np.asarray(values, dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    if xs.size < 2 or not np.any(xs == 0) or ys[xs == 0][0] != 0:
        raise ConfigError("custom-table must contain the pair (0, 0)")
    slopes = np.diff(ys) / np.diff(xs)

    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, xs, ys)
        out = np.where(s < xs[0], ys[0] + slopes[0] * (s - xs[0]), out)
        return np.where(s > xs[-1], ys[-1] + slopes[-1] * (s - xs[-1]), out)

    def gprime(s):
        idx = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def gtilde(s):
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0, 1.0, s)
        return np.where(s == 0, gprime(0.0), g(s) / safe)

    return Nonlinearity(g, gprime, gtilde, name="custom-table", holder_s=0.0)
