"""Slice-wise symmetrization of sets in the 3D orthant.

A :class:`SliceSet3D` stores, at each node of a uniform ``x1`` grid, the
radial function ``rho(theta)`` of the slice in the ``(x2, x3)`` quarter plane
(``x2 = r cos(theta)``, ``x3 = r sin(theta)``).  Between ``x1`` nodes the
squared radius ``q = rho^2`` is a not-a-knot cubic spline in ``x1``; in
``theta`` each slice is a shape-preserving cubic.  Interpolating ``rho^2``
rather than ``rho`` reproduces balls (``q = R^2 - x1^2``) exactly and keeps
the surface element finite where a slice shrinks to a point.

The density is ``exp(c |x|^2) x1^k1 x2^k2 x3^k3``.  Symmetrization replaces
each slice by the quarter disc with the same slice measure; the radii define
the planar set ``K = {(x1, r): r < R(x1)}`` carrying the density
``a x1^k1 r^(k2+k3+1) exp(c (x1^2 + r^2))``, ``a = int cos^k2 sin^k3``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator, make_interp_spline

from .errors import DomainError
from .profile import IsoperimetricProfile, profile_value, quarter_ball_radius
from .quadrature import DEFAULT_TOL, big_H, big_H_inverse, integrate, trig_moment
from .wedge_geometry import RadialShape, WedgeWeight, _float_list, measure2d

__all__ = [
    "SliceSet3D",
    "ReducedSetK",
    "slice_measure",
    "symmetrize",
    "measure3d",
    "measures_match",
    "perimeter3d_sliceable",
    "check_step2",
    "octant_ball",
    "box_set",
    "random_slice_set",
]

HALF_PI = 0.5 * np.pi
MIN_X1_NODES = 65
MIN_THETA_NODES = 33
SURFACE_RADIUS_FLOOR = 1e-9


@dataclass(frozen=True)
class SliceSet3D:
    x1: np.ndarray
    theta: np.ndarray
    rho: np.ndarray  # shape (len(x1), len(theta))
    weight: WedgeWeight
    interpolation: str = "pchip"
    _field: "_SliceField" = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if self.interpolation not in ("pchip", "linear"):
            raise ValueError('interpolation must be "pchip" or "linear"')
        if self.weight.N != 3:
            raise DomainError("slice sets live in the 3D orthant (N = 3)")
        if x1.ndim != 1 or x1.size < MIN_X1_NODES:
            raise ValueError(f"need at least {MIN_X1_NODES} x1 nodes")
        if not np.all(np.isfinite(x1)) or x1[0] < 0:
            raise ValueError("x1 nodes must be finite and >= 0")
        step = np.diff(x1)
        if np.any(step <= 0) or np.ptp(step) > 1e-9 * step.mean():
            raise ValueError("x1 grid must be uniform and increasing")
        if theta.ndim != 1 or theta.size < MIN_THETA_NODES:
            raise ValueError(f"slices need at least {MIN_THETA_NODES} theta samples")
        if abs(theta[0]) > 1e-12 or abs(theta[-1] - HALF_PI) > 1e-12 or np.any(np.diff(theta) <= 0):
            raise ValueError("theta grid must increase across [0, pi/2]")
        if rho.shape != (x1.size, theta.size):
            raise ValueError("rho must have one row per x1 node and one column per theta sample")
        if not np.all(np.isfinite(rho)) or np.any(rho < 0):
            raise ValueError("rho must be finite and >= 0")
        zero_rows = np.all(rho == 0, axis=1)
        if np.any(np.any(rho == 0, axis=1) & ~zero_rows):
            raise ValueError("a slice is either empty or has positive radius everywhere")
        if zero_rows.all():
            raise ValueError("the set has no positive-measure slice")
        theta = theta.copy()
        theta[0], theta[-1] = 0.0, HALF_PI
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "_field", _SliceField(x1, theta, rho, self.interpolation))

    def slice(self, i: int) -> RadialShape:
        return RadialShape(self.theta, self.rho[i])

    def to_dict(self) -> dict:
        return {
            "x1": self.x1.tolist(),
            "interpolation": self.interpolation,
            "slices": [{"theta": self.theta.tolist(), "rho": row.tolist()} for row in self.rho],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, weight: WedgeWeight) -> "SliceSet3D":
        if not isinstance(data, dict):
            raise ValueError("slice-set JSON must be an object")
        x1 = _float_list(data, "x1")
        slices = data.get("slices")
        if not isinstance(slices, list) or len(slices) != len(x1):
            raise ValueError('"slices" must be a list with one entry per x1 node')
        thetas, rows = [], []
        for s in slices:
            if not isinstance(s, dict):
                raise ValueError("each slice must be an object")
            thetas.append(_float_list(s, "theta"))
            rows.append(_float_list(s, "rho"))
        if any(t != thetas[0] for t in thetas):
            raise ValueError("all slices must share one theta grid")
        if any(len(r) != len(thetas[0]) for r in rows):
            raise ValueError("rho and theta lengths differ")
        interpolation = data.get("interpolation", "pchip")
        if not isinstance(interpolation, str):
            raise ValueError('"interpolation" must be a string')
        return cls(np.array(x1), np.array(thetas[0]), np.array(rows), weight, interpolation)


class _SliceField:
    """Tensor evaluation of ``q = rho^2`` and its partial derivatives."""

    def __init__(self, x1, theta, rho, interpolation="pchip"):
        self.x1 = x1
        self.theta = theta
        if interpolation == "linear":
            # Piecewise linear keeps corners at nodes (polygonal slices) sharp.
            self.rho_interp = make_interp_spline(theta, rho.T, k=1, axis=0)
        else:
            self.rho_interp = PchipInterpolator(theta, rho.T, axis=0)
        self.drho_interp = self.rho_interp.derivative()
        self.basis = CubicSpline(x1, np.eye(x1.size), axis=0)
        self.dbasis = self.basis.derivative()

    def nodes_at(self, T):
        rho = self.rho_interp(T)  # (nT, n_x1)
        return rho * rho, 2.0 * rho * self.drho_interp(T)

    def at(self, X, T, need_derivatives=False):
        q_nodes, qt_nodes = self.nodes_at(T)
        q = q_nodes @ self.basis(X).T  # (nT, nX)
        if not need_derivatives:
            return q
        return q, q_nodes @ self.dbasis(X).T, qt_nodes @ self.basis(X).T


@dataclass(frozen=True)
class ReducedSetK:
    """``K = {(x1, r): 0 < r < R(x1)}`` with density ``a x1^k1 r^p exp(c(x1^2 + r^2))``."""

    x1: np.ndarray
    R: np.ndarray
    a: float
    c: float
    exponent: float  # p = k2 + k3 + 1
    k1: float

    def __post_init__(self):
        if np.any(np.asarray(self.R) < 0) or not np.all(np.isfinite(self.R)):
            raise ValueError("radii must be finite and >= 0")

    @property
    def planar_weight(self) -> WedgeWeight:
        return WedgeWeight(2, self.c, (self.k1, self.exponent))

    def _q(self):
        spline = CubicSpline(self.x1, np.asarray(self.R) ** 2)
        return spline, spline.derivative()

    def alpha_measure(self, tol: float = DEFAULT_TOL) -> float:
        q, _ = self._q()

        def integrand(x):
            R = np.sqrt(np.maximum(q(x), 0.0))
            return self.a * x**self.k1 * np.exp(self.c * x * x) * big_H(R, self.c, self.exponent, tol)

        return integrate(integrand, self.x1[0], self.x1[-1], tol, points=self.x1).value

    def alpha_perimeter(self, tol: float = DEFAULT_TOL) -> float:
        """Weighted length of the graph ``r = R(x1)`` plus the interior end segments."""
        q, dq = self._q()
        p = self.exponent

        def integrand(x):
            qq = np.maximum(q(x), SURFACE_RADIUS_FLOOR**2)
            d = dq(x)
            return (
                self.a * x**self.k1 * np.exp(self.c * (x * x + qq))
                * qq ** ((p - 1.0) / 2.0) * np.sqrt(qq + 0.25 * d * d)
            )

        lateral = integrate(integrand, self.x1[0], self.x1[-1], tol, points=self.x1).value
        return lateral + sum(self._end_segment(i, tol) for i in _interior_ends(self.x1))

    def _end_segment(self, i, tol):
        x = self.x1[i]
        return self.a * x**self.k1 * np.exp(self.c * x * x) * big_H(self.R[i], self.c, self.exponent, tol)

    def to_dict(self) -> dict:
        return {
            "x1": np.asarray(self.x1).tolist(),
            "R": np.asarray(self.R).tolist(),
            "a": self.a,
            "c": self.c,
            "exponent": self.exponent,
            "k1": self.k1,
        }


def _interior_ends(x1):
    """End faces ``x1 = const`` that lie inside the open orthant."""
    return [0, x1.size - 1] if x1[0] > 0 else [x1.size - 1]


def _slice_weight(w: WedgeWeight) -> WedgeWeight:
    return WedgeWeight(2, w.c, (w.k[1], w.k[2]))


def slice_measure(s: RadialShape, nu2: WedgeWeight, tol: float = DEFAULT_TOL) -> float:
    """Measure of one slice under ``x2^k2 x3^k3 exp(c (x2^2 + x3^2))``."""
    return measure2d(s, nu2, tol)


def _slice_measures(S: SliceSet3D, X, tol):
    """Slice measures of the interpolated set at every ``x1`` in ``X``."""
    _, k2, k3 = S.weight.k
    c = S.weight.c
    fld = S._field
    X = np.atleast_1d(np.asarray(X, dtype=float))

    def g(T):
        q = fld.at(X, T)
        ang = (np.cos(T) ** k2 * np.sin(T) ** k3)[:, None]
        return ang * big_H(np.sqrt(np.maximum(q, 0.0)), c, k2 + k3 + 1.0, tol)

    return np.atleast_1d(integrate(g, 0.0, HALF_PI, tol, points=S.theta).value)


def _nu1(w: WedgeWeight, x):
    return x ** w.k[0] * np.exp(w.c * x * x)


def measure3d(S: SliceSet3D, tol: float = DEFAULT_TOL) -> float:
    """``mu(S) = int nu1(x1) nu2(S(x1)) dx1``."""
    return integrate(
        lambda X: _nu1(S.weight, X) * _slice_measures(S, X, tol),
        S.x1[0], S.x1[-1], tol, points=S.x1,
    ).value


def perimeter3d_sliceable(S: SliceSet3D, tol: float = DEFAULT_TOL) -> float:
    """Weighted area of the boundary of ``S`` inside the open orthant.

    Lateral surface ``(x1, rho cos(theta), rho sin(theta))`` has area element
    ``sqrt(q + q_x1^2 / 4 + q_theta^2 / (4 q)) dx1 dtheta`` with ``q = rho^2``;
    end faces ``x1 = const`` off the wall contribute their weighted slice
    measure.
    """
    k1, k2, k3 = S.weight.k
    c = S.weight.c
    fld = S._field

    def lateral(X):
        def g(T):
            q, q1, qt = fld.at(X, T, need_derivatives=True)
            q = np.maximum(q, SURFACE_RADIUS_FLOOR**2)
            ang = (np.cos(T) ** k2 * np.sin(T) ** k3)[:, None]
            dens = np.exp(c * q) * q ** ((k2 + k3) / 2.0) * ang
            return dens * np.sqrt(q + 0.25 * q1 * q1 + qt * qt / (4.0 * q))

        inner = np.atleast_1d(integrate(g, 0.0, HALF_PI, tol, points=S.theta).value)
        return _nu1(S.weight, X) * inner

    area = integrate(lateral, S.x1[0], S.x1[-1], tol, points=S.x1).value
    ends = _interior_ends(S.x1)
    if ends:
        caps = _slice_measures(S, S.x1[ends], tol) * _nu1(S.weight, S.x1[ends])
        area += float(np.sum(caps))
    return area


def symmetrize(M: SliceSet3D, tol: float = DEFAULT_TOL):
    """Replace every slice by the quarter disc of equal slice measure.

    Returns ``(Q, K)``: the symmetrized slice set on the same grids and the
    planar reduced set of its radii.
    """
    k1, k2, k3 = M.weight.k
    c = M.weight.c
    p = k2 + k3 + 1.0
    a = trig_moment(k3, k2, tol)
    masses = _slice_measures(M, M.x1, tol)
    R = np.asarray(big_H_inverse(np.maximum(masses, 0.0) / a, c, p, tol), dtype=float)
    R[np.all(M.rho == 0, axis=1)] = 0.0
    Q = SliceSet3D(M.x1, M.theta, np.repeat(R[:, None], M.theta.size, axis=1), M.weight, M.interpolation)
    K = ReducedSetK(M.x1.copy(), R, a, c, p, k1)
    return Q, K


def measures_match(M: SliceSet3D, Q: SliceSet3D, tol_rel: float = 1e-6, tol: float = DEFAULT_TOL, K=None) -> dict:
    """Compare ``mu(M)``, ``mu(Q)`` and, when ``K`` is given, ``alpha(K)``."""
    mu_M = measure3d(M, tol)
    mu_Q = measure3d(Q, tol)
    report = {
        "mu_M": mu_M,
        "mu_Q": mu_Q,
        "gap_MQ": abs(mu_M - mu_Q) / abs(mu_M),
    }
    report["mu_ok"] = bool(report["gap_MQ"] <= tol_rel)
    if K is not None:
        alpha = K.alpha_measure(tol)
        report["alpha_K"] = alpha
        report["gap_QK"] = abs(mu_Q - alpha) / abs(mu_Q)
        report["alpha_ok"] = bool(report["gap_QK"] <= tol_rel)
    return report


def check_step2(M: SliceSet3D, tol: float = DEFAULT_TOL, tol_rel: float = 1e-6) -> dict:
    """Run the full reduction ``M -> Q -> K -> quarter ball`` and compare each link."""
    Q, K = symmetrize(M, tol)
    report = measures_match(M, Q, tol_rel, tol, K)
    P_M = perimeter3d_sliceable(M, tol)
    P_Q = perimeter3d_sliceable(Q, tol)
    P_K = K.alpha_perimeter(tol)
    profile3 = IsoperimetricProfile(M.weight, tol)
    bound = profile_value(profile3, report["mu_M"])
    planar = IsoperimetricProfile(K.planar_weight, tol)
    alpha_bound = K.a * profile_value(planar, report["alpha_K"] / K.a)
    slack = 1.0 + tol_rel
    report.update({
        "P_M": P_M,
        "P_Q": P_Q,
        "P_alpha_K": P_K,
        "profile_bound": bound,
        "alpha_profile_bound": alpha_bound,
        "ball_radius": quarter_ball_radius(profile3, report["mu_M"]),
        "perim_ok": bool(P_Q <= P_M * slack),
        "K_matches_Q": bool(abs(P_K - P_Q) <= tol_rel * P_Q),
        "alpha_ok_perimeter": bool(P_K * slack >= alpha_bound),
        "final_ok": bool(P_M * slack >= bound),
        "slack": P_M - bound,
    })
    report["all_ok"] = all(
        report[key] for key in ("mu_ok", "alpha_ok", "perim_ok", "alpha_ok_perimeter", "final_ok")
    )
    return report


def octant_ball(R: float, weight: WedgeWeight, n_x1: int = MIN_X1_NODES, n_theta: int = MIN_THETA_NODES) -> SliceSet3D:
    x1 = np.linspace(0.0, R, n_x1)
    radii = np.sqrt(np.maximum(R * R - x1 * x1, 0.0))
    radii[-1] = 0.0
    theta = np.linspace(0.0, HALF_PI, n_theta)
    return SliceSet3D(x1, theta, np.repeat(radii[:, None], n_theta, axis=1), weight)


def box_set(side: float, weight: WedgeWeight, n_x1: int = MIN_X1_NODES, n_theta: int = 129) -> SliceSet3D:
    """The cube ``(0, side)^3`` with piecewise-linear slices.

    ``n_theta - 1`` must be divisible by 4 so the slice corner is a node.
    """
    if (n_theta - 1) % 4:
        raise DomainError("n_theta - 1 must be divisible by 4")
    theta = np.linspace(0.0, HALF_PI, n_theta)
    row = side / np.maximum(np.cos(theta), np.sin(theta))
    x1 = np.linspace(0.0, side, n_x1)
    return SliceSet3D(x1, theta, np.repeat(row[None, :], n_x1, axis=0), weight, "linear")


def random_slice_set(
    rng: np.random.Generator,
    weight: WedgeWeight,
    n_x1: int = MIN_X1_NODES,
    n_theta: int = MIN_THETA_NODES,
    x_range=(0.2, 1.2),
    amplitude: float = 0.25,
) -> SliceSet3D:
    """Smooth random slice set: a radius profile in ``x1`` times angular perturbations."""
    x1 = np.linspace(*x_range, n_x1)
    s = (x1 - x_range[0]) / (x_range[1] - x_range[0])
    theta = np.linspace(0.0, HALF_PI, n_theta)
    b = rng.uniform(-amplitude, amplitude, 3)
    log_r = b[0] + b[1] * np.sin(np.pi * s) + b[2] * np.cos(np.pi * s)
    log_rho = np.repeat(log_r[:, None], n_theta, axis=1)
    for j in range(1, 4):
        amp, freq, phase = rng.uniform(-amplitude, amplitude), rng.uniform(0.5, 2.0), rng.uniform(0, np.pi)
        log_rho += amp * np.cos(freq * np.pi * s + phase)[:, None] * np.cos(2 * j * theta)[None, :]
    return SliceSet3D(x1, theta, np.exp(log_rho), weight)
