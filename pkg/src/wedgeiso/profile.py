"""Isoperimetric profile of the orthant under ``exp(c|x|^2) prod x_i^k_i``.

The minimizers are the quarter balls ``B_R`` intersected with the orthant, so
for measure ``m`` the least relative perimeter is ``kappa * h(R)`` with
``kappa * H(R) = m``.  Everything is evaluated through logarithms, which keeps
large masses (``c R^2`` in the hundreds) finite until the final value itself
overflows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import DEFAULT_TOL, big_H_inverse, kappa, log_big_H, log_small_h
from .wedge_geometry import WedgeWeight

__all__ = [
    "IsoperimetricProfile",
    "small_h",
    "profile_value",
    "profile_power_case",
    "quarter_ball_radius",
    "quarter_ball_measure",
]


@dataclass(frozen=True)
class IsoperimetricProfile:
    weight: WedgeWeight
    tol: float = DEFAULT_TOL
    kappa: float = field(default=None)

    def __post_init__(self):
        if self.kappa is None:
            object.__setattr__(self, "kappa", kappa(self.weight.k, self.tol))
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")

    @property
    def exponent(self) -> float:
        return self.weight.radial_exponent

    def __call__(self, m):
        return profile_value(self, m)


def _positive(m):
    m = np.asarray(m, dtype=float)
    if np.any(np.isnan(m)) or np.any(m <= 0):
        raise DomainError("measure must be positive")
    return m


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def small_h(p: IsoperimetricProfile, r):
    """``exp(c r^2) r^(N-1+|k|)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    return _scalar(np.exp(log_small_h(r, p.weight.c, p.exponent)))


def quarter_ball_radius(p: IsoperimetricProfile, m):
    """``R`` with ``mu(B_R cap W) = kappa H(R) = m``."""
    m = _positive(m)
    return _scalar(big_H_inverse(m / p.kappa, p.weight.c, p.exponent, p.tol))


def quarter_ball_measure(p: IsoperimetricProfile, R):
    return _scalar(p.kappa * np.exp(log_big_H(R, p.weight.c, p.exponent, p.tol)))


def profile_value(p: IsoperimetricProfile, m):
    """``kappa h(H^-1(m / kappa))``, the perimeter of the quarter ball of measure ``m``."""
    R = np.asarray(quarter_ball_radius(p, m))
    with np.errstate(over="ignore"):
        out = np.exp(np.log(p.kappa) + log_small_h(R, p.weight.c, p.exponent))
    return _scalar(out)


def profile_power_case(p: IsoperimetricProfile, m):
    """Closed form for ``c = 0``: ``kappa^(1/n) (n m)^((n-1)/n)`` with ``n = N + |k|``."""
    if p.weight.c != 0.0:
        raise DomainError("the power-law profile needs c = 0")
    m = _positive(m)
    n = p.weight.N + p.weight.abs_k
    return _scalar(p.kappa ** (1.0 / n) * (n * m) ** ((n - 1.0) / n))
