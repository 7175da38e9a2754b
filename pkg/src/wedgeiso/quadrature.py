"""Adaptive 1D quadrature, monotone inversion and the radial/angular constants.

Everything here is vectorized: integrands receive a 1D array of abscissae and
must return an array of the same length (or ``(n, B)`` for batched integrands
in :func:`integrate`).  Refinement is level-synchronous, so every pass over
the active intervals is a single integrand call.

The base rule is the 7-point Gauss / 15-point Kronrod pair with the QUADPACK
error heuristic.  Abscissae are strictly interior, so integrands with
``t**p`` endpoint behaviour (``p > -1``) are never evaluated at the endpoint.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergence

__all__ = [
    "QuadratureResult",
    "CumulativeTable",
    "integrate",
    "integrate_segments",
    "cumulative_integral",
    "invert_monotone",
    "trig_moment",
    "big_H",
    "log_big_H",
    "small_h",
    "log_small_h",
    "big_H_inverse",
    "kappa",
]

DEFAULT_TOL = 1e-10
MAX_INTERVALS = 10**6
LOG_SPACE_THRESHOLD = 600.0

_EPS = np.finfo(float).eps

# QUADPACK qk15 abscissae (non-negative half) and weights.
_XK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])
GK_WEIGHTS = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])
# Gauss nodes sit at odd positions of the Kronrod set.
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1::2] = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])


@dataclass(frozen=True)
class QuadratureResult:
    value: float | np.ndarray
    error_estimate: float
    subdivisions: int


def _gk15(f, lo, hi):
    """Apply the G7/K15 pair on every interval ``[lo[i], hi[i]]``.

    Returns Kronrod values and error estimates with shape ``(n, B)`` plus the
    ``resabs`` roundoff scale; ``B`` is 1 for scalar integrands.
    """
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    t = center[:, None] + half[:, None] * GK_NODES[None, :]
    y = np.asarray(f(t.ravel()), dtype=float)
    y = y.reshape(t.shape + y.shape[1:])
    if y.ndim == 2:
        y = y[:, :, None]
    hw = half[:, None]
    kron = hw * np.einsum("j,ijb->ib", GK_WEIGHTS, y)
    gauss = hw * np.einsum("j,ijb->ib", GAUSS_WEIGHTS, y)
    resabs = np.abs(hw) * np.einsum("j,ijb->ib", GK_WEIGHTS, np.abs(y))
    mean = kron / np.where(hw == 0.0, 1.0, 2.0 * hw)
    resasc = np.abs(hw) * np.einsum("j,ijb->ib", GK_WEIGHTS, np.abs(y - mean[:, None, :]))
    diff = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5)
    err = np.where(resasc > 0.0, scaled, diff)
    if not (np.all(np.isfinite(kron)) and np.all(np.isfinite(err))):
        raise NonConvergence("integrand returned non-finite values")
    return kron, err, resabs


def _split(lo, hi):
    mid = 0.5 * (lo + hi)
    new_lo = np.column_stack([lo, mid]).ravel()
    new_hi = np.column_stack([mid, hi]).ravel()
    return new_lo, new_hi


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    points=None,
    max_intervals: int = MAX_INTERVALS,
) -> QuadratureResult:
    """Globally adaptive integral of ``f`` over ``[a, b]``.

    Success means the summed error estimate is below
    ``max(tol, tol * |value|)`` for every component of a batched integrand.
    ``points`` are interior breakpoints (kinks, interpolation knots); they
    seed the initial partition.
    """
    if not a < b:
        raise DomainError(f"need a < b, got a={a!r}, b={b!r}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    edges = [a, b] if points is None else np.unique(np.concatenate([[a, b], np.asarray(points, float)]))
    edges = np.asarray(edges, dtype=float)
    edges = edges[(edges >= a) & (edges <= b)]
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    length = b - a

    acc_val = None
    n_intervals = lo.size
    while lo.size:
        kron, err, resabs = _gk15(f, lo, hi)
        if acc_val is None:
            acc_val = np.zeros(kron.shape[1])
            acc_err_vec = np.zeros(kron.shape[1])
        total = acc_val + kron.sum(axis=0)
        tol_abs = np.maximum(tol, tol * np.abs(total))
        budget = tol_abs[None, :] * ((hi - lo) / length)[:, None]
        good = (err <= budget) | (err <= 100.0 * _EPS * resabs)
        ok = good.all(axis=1)
        tiny = (hi - lo) <= 64.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        ok |= tiny
        reported = np.maximum(err, 50.0 * _EPS * resabs)
        if np.all(acc_err_vec + reported.sum(axis=0) <= tol_abs):
            # global criterion met: retire every active interval
            ok[:] = True
        acc_val = acc_val + kron[ok].sum(axis=0)
        acc_err_vec = acc_err_vec + reported[ok].sum(axis=0)
        lo, hi = _split(lo[~ok], hi[~ok])
        n_intervals += lo.size // 2
        if n_intervals > max_intervals:
            raise NonConvergence(
                f"subdivision cap {max_intervals} reached on [{a}, {b}]"
            )
    value = acc_val[0] if acc_val.size == 1 else acc_val
    if acc_val.size == 1:
        value = float(value)
    return QuadratureResult(value=value, error_estimate=float(np.max(acc_err_vec)), subdivisions=n_intervals)


def integrate_segments(
    f: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    tol: float = DEFAULT_TOL,
    atol: float = 0.0,
    max_intervals: int = MAX_INTERVALS,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a scalar ``f`` over many independent segments at once.

    Each segment is refined until its own error estimate is below
    ``max(atol, tol * |value|)``.  The relative criterion is what lets
    :func:`cumulative_integral` keep tiny partial integrals accurate.
    Returns ``(values, error_estimates)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
    lo, hi = np.broadcast_arrays(lo, hi)
    n = lo.size
    seg = np.arange(n)
    length = hi - lo
    length_safe = np.where(length == 0.0, 1.0, length)
    acc_val = np.zeros(n)
    acc_err = np.zeros(n)
    a, b = lo.ravel().copy(), hi.ravel().copy()
    n_intervals = n
    while seg.size:
        kron, err, resabs = _gk15(f, a, b)
        kron, err, resabs = kron[:, 0], err[:, 0], resabs[:, 0]
        current = acc_val + np.bincount(seg, weights=kron, minlength=n)
        budget = np.maximum(atol, tol * np.abs(current[seg])) * ((b - a) / length_safe.ravel()[seg])
        ok = (err <= budget) | (err <= 100.0 * _EPS * resabs)
        ok |= (b - a) <= 64.0 * _EPS * np.maximum(np.abs(a), np.abs(b))
        reported = np.maximum(err, 50.0 * _EPS * resabs)
        seg_err = acc_err + np.bincount(seg, weights=reported, minlength=n)
        done = seg_err <= np.maximum(atol, tol * np.abs(current))
        ok |= done[seg]
        acc_val += np.bincount(seg[ok], weights=kron[ok], minlength=n)
        acc_err += np.bincount(seg[ok], weights=reported[ok], minlength=n)
        keep = ~ok
        seg = np.repeat(seg[keep], 2)
        a, b = _split(a[keep], b[keep])
        n_intervals += int(keep.sum())
        if n_intervals > max_intervals:
            raise NonConvergence(f"subdivision cap {max_intervals} reached")
    return acc_val.reshape(lo.shape), acc_err.reshape(lo.shape)


def cumulative_integral(f, x, x0: float = 0.0, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``F(x_i) = integral of f from x0 to x_i`` for every entry of ``x >= x0``.

    Points are sorted and the gaps between neighbours integrated once each,
    so the cost is one segment per distinct point.  For a non-negative
    integrand the relative accuracy of every partial sum is ``tol``.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if flat.size == 0:
        return np.zeros_like(x)
    if np.any(flat < x0):
        raise DomainError("cumulative_integral needs x >= x0")
    pts, inverse = np.unique(flat, return_inverse=True)
    edges = np.concatenate([[x0], pts])
    pieces, _ = integrate_segments(f, edges[:-1], edges[1:], tol=tol)
    return np.cumsum(pieces)[inverse].reshape(x.shape)


class CumulativeTable:
    """Running integral of ``f`` on ``[a, b]`` backed by a table of cell integrals.

    ``value(x)`` adds the local integral from the left cell edge to the
    tabulated prefix sum, so each evaluation costs one short segment.
    """

    def __init__(self, f, a: float, b: float, n_cells: int = 256, tol: float = DEFAULT_TOL):
        self.f = f
        self.a, self.b = float(a), float(b)
        self.tol = tol
        self.grid = np.linspace(a, b, n_cells + 1)
        cells, _ = integrate_segments(f, self.grid[:-1], self.grid[1:], tol=tol)
        self.prefix = np.concatenate([[0.0], np.cumsum(cells)])

    @property
    def total(self) -> float:
        return float(self.prefix[-1])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = np.clip(x.ravel(), self.a, self.b)
        j = np.clip(np.searchsorted(self.grid, flat, side="right") - 1, 0, self.grid.size - 2)
        local, _ = integrate_segments(self.f, self.grid[j], flat, tol=self.tol)
        return (self.prefix[j] + local).reshape(x.shape)


def invert_monotone(
    func,
    dfunc,
    target,
    lo,
    hi,
    x0=None,
    xtol: float = 4.0 * _EPS,
    xatol: float = 1e-300,
    max_iter: int = 200,
) -> np.ndarray:
    """Solve ``func(x) = target`` elementwise for increasing ``func``.

    ``[lo, hi]`` must bracket each root.  Newton steps are taken while they
    stay inside the bracket and at least halve the residual; otherwise the
    step is a bisection.  ``func`` and ``dfunc`` act on arrays of abscissae.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float)).astype(float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.broadcast_to(x0, target.shape), lo, hi).astype(float)
    prev_res = np.full(target.shape, np.inf)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return x
        xa = x[idx]
        res = func(xa) - target[idx]
        zero = res == 0.0
        lo[idx] = np.where(res < 0.0, xa, lo[idx])
        hi[idx] = np.where(res > 0.0, xa, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - res / dfunc(xa)
        use_newton = (
            np.isfinite(newton)
            & (newton > lo[idx])
            & (newton < hi[idx])
            & (np.abs(res) <= 0.5 * prev_res[idx])
        )
        mid = 0.5 * (lo[idx] + hi[idx])
        xn = np.where(use_newton, newton, mid)
        scale = xtol * np.abs(xn) + xatol
        done = zero | (np.abs(xn - xa) <= scale) | ((hi[idx] - lo[idx]) <= scale)
        x[idx] = np.where(zero, xa, xn)
        prev_res[idx] = np.abs(res)
        active[idx[done]] = False
    if active.any():
        raise NonConvergence(f"monotone inversion: {int(active.sum())} points unresolved after {max_iter} iterations")
    return x


def trig_moment(p_sin: float, p_cos: float, tol: float = DEFAULT_TOL) -> float:
    """Integral of ``sin(t)**p_sin * cos(t)**p_cos`` over ``(0, pi/2)``."""
    if p_sin < 0 or p_cos < 0:
        raise DomainError("trig_moment needs non-negative exponents")
    return integrate(lambda t: np.sin(t) ** p_sin * np.cos(t) ** p_cos, 0.0, np.pi / 2, tol).value


def _check_radial_args(r, c, m):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("radius must be non-negative")
    if c < 0:
        raise DomainError("c must be non-negative")
    if m <= -1:
        raise DomainError("radial exponent must exceed -1")
    return r


def small_h(r, c: float, m: float):
    """Radial density ``exp(c r^2) r^m``."""
    r = np.asarray(r, dtype=float)
    return np.exp(c * r * r) * r**m


def log_small_h(r, c: float, m: float):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return c * r * r + m * np.log(r)


def big_H(r, c: float, m: float, tol: float = DEFAULT_TOL):
    """``H(r) = integral_0^r exp(c t^2) t^m dt``, elementwise over ``r``."""
    r = _check_radial_args(r, c, m)
    if c == 0.0:
        out = r ** (m + 1.0) / (m + 1.0)
    else:
        out = cumulative_integral(lambda t: np.exp(c * t * t) * t**m, r, 0.0, tol)
    return out if out.ndim else float(out)


def log_big_H(r, c: float, m: float, tol: float = DEFAULT_TOL):
    """``log H(r)``; switches to a rescaled integrand once ``c r^2`` is large."""
    r = _check_radial_args(r, c, m)
    flat = r.ravel()
    out = np.empty_like(flat)
    with np.errstate(divide="ignore"):
        if c == 0.0:
            out[:] = (m + 1.0) * np.log(flat) - np.log(m + 1.0)
        else:
            large = c * flat * flat > LOG_SPACE_THRESHOLD
            out[~large] = np.log(big_H(flat[~large], c, m, tol))
            for i in np.flatnonzero(large):
                R = flat[i]
                # integrand exp(c (t^2 - R^2)) (t/R)^m peaks at t = R
                scaled = integrate(
                    lambda t: np.exp(c * (t * t - R * R) + m * np.log(t / R)), 0.0, R, tol
                ).value
                out[i] = c * R * R + m * np.log(R) + np.log(scaled)
    out = out.reshape(r.shape)
    return out if out.ndim else float(out)


def big_H_inverse(s, c: float, m: float, tol: float = DEFAULT_TOL):
    """Radius ``r`` with ``H(r) = s``.

    Works on ``log H`` so that tiny and huge targets get the same relative
    accuracy.  The bracket grows geometrically from ``r = 1``; the root is
    then polished by the safeguarded Newton/bisection iteration.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise DomainError("big_H_inverse needs s >= 0")
    _check_radial_args(0.0, c, m)
    flat = s.ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if pos.any():
        logs = np.log(flat[pos])
        lo = np.ones_like(logs)
        hi = np.ones_like(logs)
        for _ in range(2100):
            grow = log_big_H(hi, c, m, tol) < logs
            if not grow.any():
                break
            hi[grow] *= 2.0
        for _ in range(2100):
            shrink = log_big_H(lo, c, m, tol) > logs
            if not shrink.any():
                break
            lo[shrink] *= 0.5
        root = invert_monotone(
            lambda r: log_big_H(r, c, m, tol),
            lambda r: np.exp(log_small_h(r, c, m) - log_big_H(r, c, m, tol)),
            logs,
            lo,
            hi,
        )
        out[pos] = root
    out = out.reshape(s.shape)
    return out if out.ndim else float(out)


def kappa(k, tol: float = DEFAULT_TOL) -> float:
    """Monomial mass ``integral of prod x_i^k_i`` over the unit sphere in the orthant.

    Peels one coordinate at a time: writing ``x = (cos(phi) y, sin(phi))``
    with ``y`` on the lower-dimensional sphere gives the factor
    ``integral_0^{pi/2} cos^(j-2+sum_{i<j} k_i) sin^(k_j)``.
    """
    k = [float(v) for v in k]
    if len(k) < 2:
        raise DomainError("kappa needs N >= 2")
    if any(v < 0 for v in k):
        raise DomainError("exponents must be non-negative")
    value = 1.0
    partial = k[0]
    for j in range(2, len(k) + 1):
        value *= trig_moment(k[j - 1], (j - 2) + partial, tol)
        partial += k[j - 1]
    return value
