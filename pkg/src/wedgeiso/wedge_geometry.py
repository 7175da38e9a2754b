"""Weighted measure and relative perimeter in the quarter plane, and transport to the half plane.

Conventions for ``N = 2``: the weight is ``exp(c (x^2 + y^2)) x^l y^k`` with
``(l, k) = weight.k``; in polar form its angular factor is
``sin^k(theta) cos^l(theta)``.  The matching rearrangement map is
``build_sigma(k, l)``, i.e. ``build_sigma(weight.k[1], weight.k[0])``.

Sets are star-shaped about the origin, ``{(r, theta): r < rho(theta)}``, so
the only boundary inside the open wedge is the graph ``r = rho(theta)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .quadrature import DEFAULT_TOL, big_H, integrate
from .sigma_map import SigmaMap, sigma_and_prime, sigma_eval, sigma_inverse

__all__ = [
    "WedgeWeight",
    "HalfPlaneWeight",
    "RadialShape",
    "PolarCurve",
    "measure2d",
    "perimeter2d",
    "curve_perimeter",
    "transport",
    "halfplane_perimeter",
    "halfplane_measure",
    "check_contraction",
    "check_measure_preservation",
    "load_geometry",
]

HALF_PI = 0.5 * np.pi
DEFAULT_TOL_REL = 1e-6
MIN_SHAPE_NODES = 33


@dataclass(frozen=True)
class WedgeWeight:
    """Density ``exp(c |x|^2) prod x_i^k_i`` on the open orthant of R^N."""

    N: int
    c: float
    k: tuple

    def __post_init__(self):
        k = tuple(float(v) for v in self.k)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "c", float(self.c))
        if int(self.N) != self.N or self.N < 2:
            raise DomainError("N must be an integer >= 2")
        if len(k) != self.N:
            raise DomainError(f"expected {self.N} exponents, got {len(k)}")
        if not all(np.isfinite(v) and v >= 0 for v in k):
            raise DomainError("exponents k_i must be finite and >= 0")
        if not (np.isfinite(self.c) and self.c >= 0):
            raise DomainError("c must be finite and >= 0")

    @property
    def abs_k(self) -> float:
        return float(sum(self.k))

    @property
    def radial_exponent(self) -> float:
        """Exponent of ``r`` in the radial density: ``N - 1 + |k|``."""
        return self.N - 1 + self.abs_k

    def angular(self, theta):
        """``sin^k cos^l`` for ``N = 2``."""
        self._need_planar()
        return np.sin(theta) ** self.k[1] * np.cos(theta) ** self.k[0]

    def density(self, x):
        """Pointwise density at Cartesian points ``x`` of shape ``(..., N)``."""
        x = np.asarray(x, dtype=float)
        return np.exp(self.c * np.sum(x * x, axis=-1)) * np.prod(x ** np.asarray(self.k), axis=-1)

    def _need_planar(self):
        if self.N != 2:
            raise DomainError("operation is defined for N = 2 only")


@dataclass(frozen=True)
class HalfPlaneWeight:
    """Density ``exp(c (u^2 + v^2)) v^m`` on the upper half plane."""

    c: float
    m: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m >= 0):
            raise DomainError("m must be >= 0")
        if not (np.isfinite(self.c) and self.c >= 0):
            raise DomainError("c must be >= 0")


@dataclass(frozen=True)
class RadialShape:
    """Star-shaped set ``{r < rho(theta)}`` in the quarter plane.

    ``rho`` is sampled on a grid spanning ``[0, pi/2]`` and interpolated by a
    shape-preserving cubic; ``rho'`` comes from the interpolant.
    """

    theta: np.ndarray
    rho: np.ndarray
    _interp: PchipInterpolator = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if theta.ndim != 1 or theta.shape != rho.shape:
            raise ValueError("theta and rho must be equal-length 1D arrays")
        if theta.size < MIN_SHAPE_NODES:
            raise ValueError(f"need at least {MIN_SHAPE_NODES} samples, got {theta.size}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(rho))):
            raise ValueError("non-finite samples")
        if abs(theta[0]) > 1e-12 or abs(theta[-1] - HALF_PI) > 1e-12:
            raise ValueError("theta grid must span [0, pi/2]")
        if np.any(np.diff(theta) <= 0):
            raise ValueError("theta grid must be strictly increasing")
        if np.any(rho <= 0):
            raise ValueError("rho must be positive")
        theta = theta.copy()
        theta[0], theta[-1] = 0.0, HALF_PI
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "rho", rho.copy())
        object.__setattr__(self, "_interp", PchipInterpolator(theta, rho))

    def __call__(self, theta):
        return self._interp(theta)

    def derivative(self, theta):
        return self._interp(theta, 1)

    @classmethod
    def quarter_disc(cls, R: float, n: int = MIN_SHAPE_NODES) -> "RadialShape":
        return cls(np.linspace(0.0, HALF_PI, n), np.full(n, float(R)))

    @classmethod
    def from_function(cls, fn: Callable, n: int = 129) -> "RadialShape":
        theta = np.linspace(0.0, HALF_PI, n)
        return cls(theta, np.asarray(fn(theta), dtype=float))

    def scaled(self, factor: float) -> "RadialShape":
        return RadialShape(self.theta, self.rho * factor)

    def boundary_curve(self) -> "PolarCurve":
        """The graph ``r = rho(theta)`` parametrized by ``t = theta``."""
        interp, slope = self._interp, self._interp.derivative()

        def evaluator(t):
            t = np.asarray(t, dtype=float)
            return interp(t), slope(t), t, np.ones_like(t)

        return PolarCurve(self.theta, self.rho, self.theta, evaluator)

    def to_dict(self) -> dict:
        return {"type": "radial", "theta": self.theta.tolist(), "rho": self.rho.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "RadialShape":
        if not isinstance(data, dict) or data.get("type") != "radial":
            raise ValueError('shape JSON must have "type": "radial"')
        return cls(_float_list(data, "theta"), _float_list(data, "rho"))


@dataclass(frozen=True)
class PolarCurve:
    """Curve ``t -> (r(t), theta(t))`` through the given nodes.

    Between nodes ``r`` and ``theta`` are shape-preserving cubics in ``t``
    unless an exact evaluator is attached, which is how boundary graphs and
    their transported images keep full accuracy.
    """

    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    _evaluator: Callable = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        t, r, th = (np.asarray(a, dtype=float) for a in (self.t, self.r, self.theta))
        if not (t.ndim == 1 and t.shape == r.shape == th.shape):
            raise ValueError("t, r, theta must be equal-length 1D arrays")
        if t.size < 2:
            raise ValueError("a curve needs at least two nodes")
        if not all(np.all(np.isfinite(a)) for a in (t, r, th)):
            raise ValueError("non-finite curve nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly increasing")
        if np.any(r < 0):
            raise ValueError("r must be non-negative")
        if np.any(th < 0) or np.any(th > np.pi):
            raise ValueError("theta must lie in [0, pi]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", th)
        if self._evaluator is None:
            ri, ti = PchipInterpolator(t, r), PchipInterpolator(t, th)
            dri, dti = ri.derivative(), ti.derivative()
            object.__setattr__(self, "_evaluator", lambda s: (ri(s), dri(s), ti(s), dti(s)))

    def evaluate(self, t):
        """``(r, r', theta, theta')`` at parameter values ``t``."""
        return self._evaluator(t)

    def to_dict(self) -> dict:
        return {
            "type": "polar_curve",
            "t": self.t.tolist(),
            "r": self.r.tolist(),
            "theta": self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolarCurve":
        if not isinstance(data, dict) or data.get("type") != "polar_curve":
            raise ValueError('curve JSON must have "type": "polar_curve"')
        return cls(_float_list(data, "t"), _float_list(data, "r"), _float_list(data, "theta"))


def _float_list(data: dict, key: str) -> list:
    values = data.get(key)
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise ValueError(f'"{key}" must be a list of numbers')
    return [float(v) for v in values]


def load_geometry(text: str):
    """Parse shape or curve JSON into a :class:`RadialShape` or :class:`PolarCurve`."""
    data = json.loads(text)
    kind = data.get("type") if isinstance(data, dict) else None
    if kind == "radial":
        return RadialShape.from_dict(data)
    if kind == "polar_curve":
        return PolarCurve.from_dict(data)
    raise ValueError('expected "type" to be "radial" or "polar_curve"')


def measure2d(shape: RadialShape, w: WedgeWeight, tol: float = DEFAULT_TOL) -> float:
    """``mu(M) = int sin^k cos^l * H(rho(theta); c, k+l+1) dtheta``."""
    w._need_planar()
    m = w.abs_k + 1.0

    def integrand(theta):
        return w.angular(theta) * big_H(shape(theta), w.c, m, tol)

    return integrate(integrand, 0.0, HALF_PI, tol, points=shape.theta).value


def measure2d_and_scale_derivative(shape: RadialShape, w: WedgeWeight, tol: float = DEFAULT_TOL):
    """``(mu(M), d mu(lambda M)/d lambda at lambda = 1)`` in one quadrature."""
    w._need_planar()
    m = w.abs_k + 1.0

    def integrand(theta):
        rho = shape(theta)
        ang = w.angular(theta)
        return np.column_stack([
            ang * big_H(rho, w.c, m, tol),
            ang * np.exp(w.c * rho * rho) * rho ** (m + 1.0),
        ])

    return integrate(integrand, 0.0, HALF_PI, tol, points=shape.theta).value


def perimeter2d(shape: RadialShape, w: WedgeWeight, tol: float = DEFAULT_TOL) -> float:
    """Weighted length of the graph ``r = rho(theta)``; the axes are not counted."""
    w._need_planar()

    def integrand(theta):
        rho = shape(theta)
        drho = shape.derivative(theta)
        return (
            np.exp(w.c * rho * rho) * rho ** w.abs_k * w.angular(theta)
            * np.sqrt(rho * rho + drho * drho)
        )

    return integrate(integrand, 0.0, HALF_PI, tol, points=shape.theta).value


def curve_perimeter(curve: PolarCurve, w: WedgeWeight, tol: float = DEFAULT_TOL) -> float:
    """Weighted line integral of the quarter-plane density along ``curve``."""
    w._need_planar()
    if np.any(curve.theta > HALF_PI):
        raise DomainError("curve leaves the quarter plane")

    def integrand(t):
        r, dr, th, dth = curve.evaluate(t)
        return (
            np.exp(w.c * r * r) * r ** w.abs_k * w.angular(th)
            * np.sqrt(r * r * dth * dth + dr * dr)
        )

    return integrate(integrand, curve.t[0], curve.t[-1], tol, points=curve.t).value


def _check_pairing(w: WedgeWeight, smap: SigmaMap):
    if (smap.k, smap.l) != (w.k[1], w.k[0]):
        raise DomainError(
            f"sigma map built for (k, l) = ({smap.k}, {smap.l}) but the weight needs "
            f"({w.k[1]}, {w.k[0]})"
        )


def transport(curve: PolarCurve, smap: SigmaMap) -> PolarCurve:
    """Image of a quarter-plane curve under ``(r, theta) -> (r, sigma(theta))``."""
    if np.any(curve.theta > HALF_PI):
        raise DomainError("curve leaves the quarter plane")
    source = curve._evaluator

    def evaluator(t):
        r, dr, th, dth = source(t)
        sigma, prime = sigma_and_prime(smap, np.clip(th, 0.0, HALF_PI))
        return r, dr, sigma, prime * dth

    return PolarCurve(curve.t, curve.r, sigma_eval(smap, curve.theta), evaluator)


def halfplane_perimeter(curve: PolarCurve, hw: HalfPlaneWeight, tol: float = DEFAULT_TOL) -> float:
    """Weighted length of ``curve`` under ``exp(c r^2) r^m sin^m(theta)``."""

    def integrand(t):
        r, dr, th, dth = curve.evaluate(t)
        return (
            np.exp(hw.c * r * r) * r ** hw.m * np.sin(th) ** hw.m
            * np.sqrt(r * r * dth * dth + dr * dr)
        )

    return integrate(integrand, curve.t[0], curve.t[-1], tol, points=curve.t).value


def halfplane_measure(radius: Callable, hw: HalfPlaneWeight, tol: float = DEFAULT_TOL, points=None) -> float:
    """Measure of ``{(r, phi): r < radius(phi), 0 < phi < pi}`` under the half-plane weight."""

    def integrand(phi):
        return np.sin(phi) ** hw.m * big_H(radius(phi), hw.c, hw.m + 1.0, tol)

    return integrate(integrand, 0.0, np.pi, tol, points=points).value


def _transported_boundary_perimeter(shape, w, smap, tol):
    """``P`` of ``T(M)`` in the half plane, with ``t = theta`` as parameter."""
    curve = transport(shape.boundary_curve(), smap)
    return halfplane_perimeter(curve, HalfPlaneWeight(w.c, w.abs_k), tol)


def check_contraction(
    shape: RadialShape,
    w: WedgeWeight,
    smap: SigmaMap,
    tol: float = DEFAULT_TOL,
    tol_rel: float = DEFAULT_TOL_REL,
) -> dict:
    """Compare ``c1 * P~(T(M))`` with ``P(M)``; the first never exceeds the second."""
    w._need_planar()
    _check_pairing(w, smap)
    lhs = smap.c1 * _transported_boundary_perimeter(shape, w, smap, tol)
    rhs = perimeter2d(shape, w, tol)
    slack = tol_rel * (1.0 + rhs)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ok": bool(lhs <= rhs + slack),
        "equality": bool(abs(lhs - rhs) <= slack),
    }


def check_measure_preservation(
    shape: RadialShape,
    w: WedgeWeight,
    smap: SigmaMap,
    tol: float = DEFAULT_TOL,
    tol_rel: float = DEFAULT_TOL_REL,
) -> dict:
    """Compare ``mu(M)`` with ``c1 * mu~(T(M))``.

    ``mu~(T(M))`` is integrated in the half plane's own angle ``phi``: the
    image has radial function ``rho(sigma^-1(phi))``.  Breakpoints follow
    the images of the shape's knots.
    """
    w._need_planar()
    _check_pairing(w, smap)
    mu = measure2d(shape, w, tol)

    def radius(phi):
        return shape(np.clip(sigma_inverse(smap, np.clip(phi, 0.0, np.pi)), 0.0, HALF_PI))

    knots = sigma_eval(smap, shape.theta)
    mu_tilde = halfplane_measure(radius, HalfPlaneWeight(w.c, w.abs_k), tol, points=knots)
    c1_mu_tilde = smap.c1 * mu_tilde
    gap = abs(mu - c1_mu_tilde) / abs(mu)
    return {
        "mu": mu,
        "mu_tilde": mu_tilde,
        "c1_mu_tilde": c1_mu_tilde,
        "rel_gap": gap,
        "ok": bool(gap <= tol_rel),
    }

