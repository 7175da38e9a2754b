"""The angular rearrangement map sending the quarter plane onto the half plane.

For exponents ``k, l >= 0`` the map ``sigma: [0, pi/2] -> [0, pi]`` equalizes
cumulative angular mass::

    int_0^theta sin^k t cos^l t dt = c1 * int_0^sigma(theta) sin^(k+l) s ds

with ``c1`` the ratio of the two total masses, so ``sigma(pi/2) = pi``.

Evaluation never interpolates: ``sigma(theta)`` is obtained by inverting the
cumulative integrals directly.  Points past the angular median are solved
through the complementary masses (``int_theta^{pi/2}`` against
``int_sigma^pi``), which keeps ``pi - sigma`` accurate near the far
endpoint.  The node table doubles as a warm start.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_jacobi

from .errors import DomainError
from .quadrature import DEFAULT_TOL, CumulativeTable, integrate, invert_monotone

__all__ = [
    "AngularPrimitive",
    "SigmaMap",
    "c1",
    "build_sigma",
    "sigma_eval",
    "sigma_prime",
    "sigma_inverse",
    "certify_derivative_bound",
]

HALF_PI = 0.5 * np.pi
DEFAULT_NODES = 257
DEFAULT_DELTA = 1e-6


def c1(k: float, l: float, tol: float = DEFAULT_TOL) -> float:
    """Mass ratio of ``sin^k cos^l`` on ``(0, pi/2)`` to ``sin^(k+l)`` on ``(0, pi)``."""
    _check_exponents(k, l)
    num = integrate(lambda t: np.sin(t) ** k * np.cos(t) ** l, 0.0, HALF_PI, tol).value
    den = integrate(lambda s: np.sin(s) ** (k + l), 0.0, np.pi, tol).value
    return num / den


def _jacobi01(n, power):
    """Nodes/weights on ``[0, 1]`` for ``int_0^1 v^power g(v) dv``."""
    x, w = roots_jacobi(n, 0.0, power)
    return 0.5 * (x + 1.0), w / 2.0 ** (power + 1.0)


def _check_exponents(k, l):
    if not (np.isfinite(k) and np.isfinite(l)):
        raise DomainError("exponents must be finite")
    if k < 0:
        raise DomainError("k must be >= 0")
    if l < 0:
        raise DomainError("l must be >= 0")


class AngularPrimitive:
    """``P(x) = int_0^x sin^a t cos^b t dt`` on ``[0, pi/2]`` and its inverse.

    Interior cells use the adaptive table.  The two end cells carry the
    factors ``t^a`` and ``(pi/2 - t)^b``; there a Gauss-Jacobi rule absorbs
    the power exactly and the remaining factor is analytic on the cell.
    """

    _JACOBI_POINTS = 20

    def __init__(self, p_sin: float, p_cos: float, tol: float = DEFAULT_TOL, n_cells: int = 256):
        self.p_sin, self.p_cos = float(p_sin), float(p_cos)
        self.table = CumulativeTable(self.density, 0.0, HALF_PI, n_cells=n_cells, tol=tol)
        self._h = self.table.grid[1]
        self._left_rule = _jacobi01(self._JACOBI_POINTS, self.p_sin)
        self._right_rule = _jacobi01(self._JACOBI_POINTS, self.p_cos)

    def density(self, x):
        return np.sin(x) ** self.p_sin * np.cos(x) ** self.p_cos

    def _sinc_power(self, t, p):
        return np.where(t == 0.0, 1.0, np.sin(t) / np.where(t == 0.0, 1.0, t)) ** p

    def _head(self, x):
        """``int_0^x`` for ``x`` in the first cell."""
        v, wts = self._left_rule
        t = x[:, None] * v[None, :]
        g = self._sinc_power(t, self.p_sin) * np.cos(t) ** self.p_cos
        return x ** (self.p_sin + 1.0) * (g @ wts)

    def _tail(self, x):
        """``int_x^{pi/2}`` for ``x`` in the last cell."""
        d = HALF_PI - x
        v, wts = self._right_rule
        u = d[:, None] * v[None, :]
        # cos(pi/2 - u) = sin(u), sin(pi/2 - u) = cos(u)
        g = self._sinc_power(u, self.p_cos) * np.cos(u) ** self.p_sin
        return d ** (self.p_cos + 1.0) * (g @ wts)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.clip(x.ravel(), 0.0, HALF_PI)
        out = np.empty_like(flat)
        head = flat <= self._h
        tail = flat >= HALF_PI - self._h
        mid = ~(head | tail)
        if head.any():
            out[head] = self._head(flat[head])
        if tail.any():
            out[tail & ~head] = self.total - self._tail(flat[tail & ~head])
        if mid.any():
            out[mid] = self.table.value(flat[mid])
        return out.reshape(x.shape)

    @property
    def total(self) -> float:
        return self.table.total

    def solve(self, target, guess=None) -> np.ndarray:
        """``x`` in ``[0, pi/2]`` with ``P(x) = target``.

        Newton runs on ``log P`` against ``log x``, where the primitive is
        close to a straight line of slope ``p_sin + 1`` near the origin.
        """
        target = np.asarray(target, dtype=float)
        out = np.zeros(target.shape)
        full = target >= self.total
        out[full] = HALF_PI
        pos = (target > 0) & ~full
        if not pos.any():
            return out
        t = target[pos]
        if guess is None:
            # small-angle power law, adequate as a warm start everywhere
            g = ((self.p_sin + 1.0) * t) ** (1.0 / (self.p_sin + 1.0))
        else:
            g = np.asarray(guess, dtype=float)[pos]
        g = np.clip(g, 1e-300, HALF_PI)

        def logp(u):
            with np.errstate(divide="ignore"):
                return np.log(self(np.exp(u)))

        def dlogp(u):
            x = np.exp(u)
            return x * self.density(x) / self(x)

        u = invert_monotone(
            logp, dlogp, np.log(t), np.log(1e-300), np.log(HALF_PI),
            x0=np.log(g), xtol=0.0, xatol=1e-15,
        )
        out[pos] = np.exp(u)
        return out


@dataclass(frozen=True)
class SigmaMap:
    """Certified node table of ``sigma`` plus the primitives used to evaluate it."""

    k: float
    l: float
    c1: float
    theta: np.ndarray
    sigma: np.ndarray
    tol: float = DEFAULT_TOL
    _F: AngularPrimitive = field(repr=False, compare=False, default=None)
    _Fc: AngularPrimitive = field(repr=False, compare=False, default=None)
    _G: AngularPrimitive = field(repr=False, compare=False, default=None)
    _guess: PchipInterpolator = field(repr=False, compare=False, default=None)

    @property
    def m(self) -> float:
        return self.k + self.l

    def residuals(self) -> np.ndarray:
        """``F(theta_i) - c1 * G(sigma_i)`` at every node."""
        G_full = np.where(
            self.sigma <= HALF_PI,
            self._G(np.minimum(self.sigma, HALF_PI)),
            2.0 * self._G.total - self._G(np.clip(np.pi - self.sigma, 0.0, HALF_PI)),
        )
        return self._F(self.theta) - self.c1 * G_full

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "c1": self.c1,
            "tol": self.tol,
            "theta": self.theta.tolist(),
            "sigma": self.sigma.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SigmaMap":
        """Rebuild from serialized nodes; the nodes are re-verified, not trusted."""
        k, l = float(data["k"]), float(data["l"])
        tol = float(data.get("tol", DEFAULT_TOL))
        theta = np.asarray(data["theta"], dtype=float)
        sigma = np.asarray(data["sigma"], dtype=float)
        if theta.ndim != 1 or theta.shape != sigma.shape or theta.size < 2:
            raise ValueError("theta and sigma must be equal-length 1D lists")
        smap = _assemble(k, l, theta, sigma, tol)
        if abs(smap.c1 - float(data["c1"])) > 10 * tol:
            raise ValueError("stored c1 disagrees with the exponents")
        _validate(smap)
        return smap

    @classmethod
    def from_json(cls, text: str) -> "SigmaMap":
        return cls.from_dict(json.loads(text))


def _assemble(k, l, theta, sigma, tol) -> SigmaMap:
    _check_exponents(k, l)
    F = AngularPrimitive(k, l, tol)
    Fc = AngularPrimitive(l, k, tol)
    G = AngularPrimitive(k + l, 0.0, tol)
    c1_value = F.total / (2.0 * G.total)
    guess = PchipInterpolator(theta, sigma) if theta.size >= 2 else None
    return SigmaMap(k, l, c1_value, theta, sigma, tol, F, Fc, G, guess)


def _validate(smap: SigmaMap) -> None:
    th, sg = smap.theta, smap.sigma
    if not (np.all(np.isfinite(th)) and np.all(np.isfinite(sg))):
        raise ValueError("non-finite node values")
    if th[0] != 0.0 or sg[0] != 0.0:
        raise ValueError("first node must be (0, 0)")
    if abs(th[-1] - HALF_PI) > smap.tol or abs(sg[-1] - np.pi) > smap.tol:
        raise ValueError("last node must be (pi/2, pi)")
    if np.any(np.diff(th) <= 0) or np.any(np.diff(sg) <= 0):
        raise ValueError("nodes must be strictly increasing")
    if np.max(np.abs(smap.residuals())) > smap.tol:
        raise ValueError("nodes do not solve the defining equation")


def _solve(smap: SigmaMap, theta: np.ndarray, guess=None):
    """Return ``(sigma, s)`` where ``s = min(sigma, pi - sigma)`` is exact."""
    theta = np.asarray(theta, dtype=float)
    left_mass = smap._F(theta)
    right_mass = smap._Fc(HALF_PI - theta)
    right = right_mass < left_mass
    target = np.where(right, right_mass, left_mass) / smap.c1
    target = np.minimum(target, smap._G.total)
    if guess is not None:
        guess = np.where(right, np.pi - guess, guess)
    s = smap._G.solve(target, guess)
    sigma = np.where(right, np.pi - s, s)
    return sigma, s


def build_sigma(k: float, l: float, n_nodes: int = DEFAULT_NODES, tol: float = DEFAULT_TOL) -> SigmaMap:
    """Solve for ``sigma`` on a uniform node grid of ``[0, pi/2]``."""
    _check_exponents(k, l)
    if n_nodes < 16:
        raise DomainError("n_nodes must be >= 16")
    theta = np.linspace(0.0, HALF_PI, n_nodes)
    provisional = _assemble(k, l, theta[[0, -1]], np.array([0.0, np.pi]), tol)
    sigma, _ = _solve(provisional, theta)
    sigma[0], sigma[-1] = 0.0, np.pi
    smap = SigmaMap(
        k, l, provisional.c1, theta, sigma, tol,
        provisional._F, provisional._Fc, provisional._G, PchipInterpolator(theta, sigma),
    )
    _validate(smap)
    return smap


def _check_theta(theta, open_interval=False):
    theta = np.asarray(theta, dtype=float)
    if np.any(np.isnan(theta)):
        raise DomainError("theta is NaN")
    if open_interval:
        if np.any(theta <= 0.0) or np.any(theta >= HALF_PI):
            raise DomainError("theta must lie in the open interval (0, pi/2)")
    elif np.any(theta < 0.0) or np.any(theta > HALF_PI):
        raise DomainError("theta must lie in [0, pi/2]")
    return theta


def sigma_eval(smap: SigmaMap, theta):
    """``sigma(theta)``; node abscissae return the stored node values."""
    th = _check_theta(theta)
    flat = th.ravel()
    sigma, _ = _solve(smap, flat, smap._guess(flat))
    pos = np.searchsorted(smap.theta, flat)
    pos = np.clip(pos, 0, smap.theta.size - 1)
    hit = smap.theta[pos] == flat
    sigma[hit] = smap.sigma[pos[hit]]
    sigma = sigma.reshape(th.shape)
    return sigma if sigma.ndim else float(sigma)


def _sigma_prime_raw(smap: SigmaMap, theta):
    flat = np.asarray(theta, dtype=float).ravel()
    _, s = _solve(smap, flat, smap._guess(flat))
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(flat) ** smap.k * np.cos(flat) ** smap.l
        return (num / (smap.c1 * np.sin(s) ** smap.m)).reshape(np.shape(theta))


def sigma_and_prime(smap: SigmaMap, theta):
    """``(sigma, sigma')`` at interior angles with one shared solve."""
    flat = np.asarray(theta, dtype=float).ravel()
    sigma, s = _solve(smap, flat, smap._guess(flat))
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(flat) ** smap.k * np.cos(flat) ** smap.l
        prime = num / (smap.c1 * np.sin(s) ** smap.m)
    shape = np.shape(theta)
    return sigma.reshape(shape), prime.reshape(shape)


def sigma_prime(smap: SigmaMap, theta):
    """``d sigma / d theta`` from differentiating the defining identity."""
    th = _check_theta(theta, open_interval=True)
    out = _sigma_prime_raw(smap, th)
    return out if np.ndim(out) else float(out)


def sigma_inverse(smap: SigmaMap, phi):
    """``theta`` with ``sigma(theta) = phi`` for ``phi`` in ``[0, pi]``."""
    phi = np.asarray(phi, dtype=float)
    if np.any(np.isnan(phi)) or np.any(phi < 0) or np.any(phi > np.pi):
        raise DomainError("phi must lie in [0, pi]")
    flat = phi.ravel()
    right = flat > HALF_PI
    e = np.where(right, np.pi - flat, flat)
    mass = smap.c1 * smap._G(e)
    out = np.empty_like(flat)
    if (~right).any():
        out[~right] = smap._F.solve(np.minimum(mass[~right], smap._F.total))
    if right.any():
        out[right] = HALF_PI - smap._Fc.solve(np.minimum(mass[right], smap._Fc.total))
    out = out.reshape(phi.shape)
    return out if out.ndim else float(out)


def certify_derivative_bound(smap: SigmaMap, grid_size: int = 10**4, delta: float = DEFAULT_DELTA) -> dict:
    """Minimum of ``sigma'`` over an interior grid of ``[delta, pi/2 - delta]``."""
    if grid_size < 1000:
        raise DomainError("grid_size must be >= 1000")
    theta = np.linspace(delta, HALF_PI - delta, grid_size)
    values = _sigma_prime_raw(smap, theta)
    i = int(np.argmin(values))
    threshold = 1.0 - 10.0 * smap.tol
    return {
        "k": smap.k,
        "l": smap.l,
        "c1": smap.c1,
        "grid_size": grid_size,
        "delta": delta,
        "min_sigma_prime": float(values[i]),
        "argmin": float(theta[i]),
        "threshold": threshold,
        "success": bool(values[i] >= threshold),
    }
