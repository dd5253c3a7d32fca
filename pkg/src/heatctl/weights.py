"""Carleman weight family and the operator coefficients derived from it.

Only decaying quantities (inverse weights) and ratios are ever formed, so
nothing overflows as ``t -> T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a point lies outside the space-time cylinder."""


@dataclass(frozen=True)
class WeightParams:
    s_w: float = 3e-4
    lam_w: float = 1.0
    m_w: float = 1.1
    T: float = 0.5
    omega: tuple[float, float] = (0.1, 0.3)
    eta0_norm: float = 1.0

    def __post_init__(self):
        a1, a2 = self.omega
        if not self.m_w > 1:
            raise ValueError(f"m_w must be > 1, got {self.m_w}")
        if not self.s_w > 0:
            raise ValueError(f"s_w must be > 0, got {self.s_w}")
        if not self.lam_w > 0:
            raise ValueError(f"lam_w must be > 0, got {self.lam_w}")
        if not 0 < a1 < a2 < 1:
            raise ValueError(f"omega must satisfy 0 < a1 < a2 < 1, got {self.omega}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(~np.isfinite(x)):
        raise DomainError("x must lie in [0, 1]")
    return x


def _check_time(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > T) or np.any(~np.isfinite(t)):
        raise DomainError(f"t must lie in [0, {T}]")
    return t


def eta0(x, omega):
    """Two C1-matched parabolas vanishing at 0 and 1 with peak 1 at the centre of omega.

    Returns ``(value, first derivative)``.
    """
    x = _check_unit(x)
    xs = 0.5 * (omega[0] + omega[1])
    left = x <= xs
    val = np.where(left, x * (2 * xs - x) / xs**2, (1 - x) * (x - 2 * xs + 1) / (1 - xs) ** 2)
    der = np.where(left, 2 * (xs - x) / xs**2, 2 * (xs - x) / (1 - xs) ** 2)
    return val, der


def _eta0_second(x, omega):
    xs = 0.5 * (omega[0] + omega[1])
    return np.where(x <= xs, -2.0 / xs**2, -2.0 / (1 - xs) ** 2)


def ell(t, T):
    """Time profile ``l(t)``: constant ``3T^2/16`` before ``T/4``, ``t(T-t)`` after.

    Returns ``(value, first derivative)``; the derivative at exactly ``T/4``
    uses the right branch.
    """
    t = _check_time(t, T)
    late = t >= T / 4
    val = np.where(late, t * (T - t), 3 * T**2 / 16)
    der = np.where(late, T - 2 * t, 0.0)
    return val, der


def beta(x, p: WeightParams):
    """Spatial factor of the weight exponent and its first two derivatives."""
    x = _check_unit(x)
    e, de = eta0(x, p.omega)
    dde = _eta0_second(x, p.omega)
    lam, mn = p.lam_w, p.m_w * p.eta0_norm
    inner = np.exp(lam * (mn + e))
    b = np.exp(2 * lam * mn) - inner
    db = -lam * de * inner
    ddb = -(lam * dde + (lam * de) ** 2) * inner
    return b, db, ddb


@dataclass(frozen=True)
class WeightBundle:
    """Per-point weight data; every field is an array broadcast over the query points.

    ``log_rho`` is the exponent ``s*beta/l`` of ``rho`` (``inf`` at ``t = T``).
    """

    log_rho: np.ndarray
    rho_inv: np.ndarray
    rho0_inv: np.ndarray
    w32: np.ndarray
    w12: np.ndarray
    c_dt: np.ndarray
    c_dx: np.ndarray
    c_dxx: np.ndarray


def bundle(x, t, p: WeightParams) -> WeightBundle:
    x = _check_unit(x)
    t = _check_time(t, p.T)
    x, t = np.broadcast_arrays(x, t)
    b, db, ddb = beta(x, p)
    lv, ld = ell(t, p.T)
    tau = p.T - t
    w12 = np.sqrt(tau)
    w32 = w12 * tau
    s = p.s_w
    alive = tau > 0
    safe_l = np.where(alive, lv, 1.0)
    expo = np.where(alive, s * b / safe_l, np.inf)
    rho_inv = np.where(alive, np.exp(-expo), 0.0)
    with np.errstate(divide="ignore"):
        rho0_inv = np.where(alive, np.exp(-expo - 1.5 * np.log(np.where(alive, tau, 1.0))), 0.0)
    sb_l = s * db / safe_l
    c_dt = np.where(alive, -1.5 * w12 - w32 * s * b * ld / safe_l**2, 0.0)
    c_dx = np.where(alive, w32 * sb_l, 0.0)
    c_dxx = np.where(alive, w32 * (s * ddb / safe_l + sb_l**2), 0.0)
    return WeightBundle(expo, rho_inv, rho0_inv, w32, w12, c_dt, c_dx, c_dxx)


def rho0_initial(x, p: WeightParams):
    """``rho_0(x, 0)``, the only place a growing weight is materialized."""
    b, _, _ = beta(x, p)
    l0 = 3 * p.T**2 / 16
    return p.T**1.5 * np.exp(p.s_w * b / l0)
