"""Randomized checks of the quarter-disc inequality and shape optimization.

Shapes come from the family ``rho(theta) = exp(sum_j a_j cos(2 j theta))``,
``j = 0..J``.  The cosine basis has zero slope at both axes, so every member
meets the walls orthogonally.

``random_sweep`` measures the slack ``P(M) - I(mu(M))`` over random members.
``optimize_shape`` minimizes perimeter at fixed measure with a Nelder-Mead
simplex over ``a_1..a_J``; ``a_0`` is eliminated by rescaling the shape onto
the measure constraint.
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import roots_jacobi

from .errors import DomainError, NonConvergence
from .profile import IsoperimetricProfile, profile_value, quarter_ball_radius
from .quadrature import DEFAULT_TOL, big_H, invert_monotone
from .wedge_geometry import RadialShape, WedgeWeight, measure2d, measure2d_and_scale_derivative, perimeter2d

__all__ = [
    "ShapeFamily",
    "VerificationReport",
    "random_sweep",
    "optimize_shape",
    "profile_scan",
    "report_csv",
    "thread_count",
]

HALF_PI = 0.5 * np.pi
DEFAULT_J = 6
RNG_NAME = "numpy.random.PCG64"
CSV_COLUMNS = ("idx", "m", "P", "I", "slack")
RESOLUTION_TOL = 1e-7


@dataclass(frozen=True)
class ShapeFamily:
    J: int = DEFAULT_J
    bound: float = 10.0
    n_nodes: int = 129

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise DomainError("J must be a non-negative integer")
        if not self.bound > 0:
            raise DomainError("coefficient bound must be positive")

    def log_rho(self, a, theta):
        a = self._coeffs(a)
        j = 2.0 * np.arange(self.J + 1)
        return np.cos(np.multiply.outer(np.asarray(theta, dtype=float), j)) @ a

    def dlog_rho(self, a, theta):
        a = self._coeffs(a)
        j = 2.0 * np.arange(self.J + 1)
        return -np.sin(np.multiply.outer(np.asarray(theta, dtype=float), j)) @ (j * a)

    def rho(self, a, theta):
        return np.exp(self.log_rho(a, theta))

    def shape(self, a) -> RadialShape:
        theta = np.linspace(0.0, HALF_PI, self.n_nodes)
        return RadialShape(theta, self.rho(a, theta))

    def _coeffs(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (self.J + 1,):
            raise DomainError(f"expected {self.J + 1} coefficients")
        if np.any(np.abs(a) > self.bound):
            raise DomainError("coefficient outside the family bounds")
        return a


@dataclass
class VerificationReport:
    weight: WedgeWeight
    seed: int
    amplitude: float
    tol_abs: float
    records: list = field(default_factory=list)
    rng: str = RNG_NAME

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if not r["slack"] >= -self.tol_abs)

    @property
    def min_slack(self) -> float:
        return min(r["slack"] for r in self.records)

    def to_dict(self) -> dict:
        return {
            "weight": {"N": self.weight.N, "c": self.weight.c, "k": list(self.weight.k)},
            "seed": self.seed,
            "rng": self.rng,
            "amplitude": self.amplitude,
            "tol_abs": self.tol_abs,
            "n": len(self.records),
            "violations": self.violations,
            "min_slack": self.min_slack,
            "records": self.records,
        }


def thread_count() -> int:
    """Worker count from ``WEDGE_ISO_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("WEDGE_ISO_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = thread_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def random_sweep(
    w: WedgeWeight,
    n: int,
    seed: int,
    amplitude: float,
    tol: float = DEFAULT_TOL,
    tol_abs: float = 1e-7,
    family: ShapeFamily | None = None,
) -> VerificationReport:
    """Slack ``perimeter - profile(measure)`` for ``n`` random family members."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (np.isfinite(amplitude) and amplitude >= 0):
        raise DomainError("amplitude must be finite and >= 0")
    family = family or ShapeFamily()
    if amplitude > family.bound:
        family = ShapeFamily(family.J, amplitude, family.n_nodes)
    profile = IsoperimetricProfile(w, tol)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-amplitude, amplitude, size=(n, family.J + 1))

    def one(i):
        shape = family.shape(coeffs[i])
        m = measure2d(shape, w, tol)
        P = perimeter2d(shape, w, tol)
        bound = profile_value(profile, m)
        return {
            "idx": i,
            "coeffs": coeffs[i].tolist(),
            "measure": m,
            "perimeter": P,
            "profile_bound": bound,
            "slack": P - bound,
        }

    records = sorted(_map(one, range(n)), key=lambda r: r["idx"])
    return VerificationReport(w, int(seed), float(amplitude), tol_abs, records)


def report_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_COLUMNS)
    for r in report.records:
        out.writerow([r["idx"]] + [f"{r[key]:.17g}" for key in ("measure", "perimeter", "profile_bound", "slack")])
    return buf.getvalue()


class _FixedRule:
    """Gauss-Jacobi rule on ``(0, pi/2)`` absorbing ``sin^k cos^l`` at the ends.

    The family is analytic in ``theta``, so once the endpoint powers are in
    the weight the remaining integrand is smooth and a fixed rule converges
    spectrally.  ``H(r) = r^(m+1) int_0^1 s^m exp(c r^2 s^2) ds`` uses a second
    Jacobi rule in ``s``.  Only the optimizer loop uses these rules.
    """

    RADIAL_NODES = 40
    MAX_EXPONENT = 40.0  # beyond c r^2 = 40 the radial rule is not trusted

    def __init__(self, w: WedgeWeight, n: int = 64):
        l, k = w.k
        x, wts = roots_jacobi(n, l, k)
        self.theta = 0.25 * np.pi * (1.0 + x)
        comp = HALF_PI - self.theta
        smooth = (np.sin(self.theta) / self.theta) ** k * (np.cos(self.theta) / comp) ** l
        self.weights = wts * smooth * (0.25 * np.pi) ** (k + l + 1.0)
        self.w = w
        self.m = w.abs_k + 1.0
        xs, ws = roots_jacobi(self.RADIAL_NODES, 0.0, self.m)
        self.s2 = (0.5 * (1.0 + xs)) ** 2
        self.ws = ws / 2.0 ** (self.m + 1.0)

    def big_H(self, rho):
        if self.w.c == 0.0:
            return rho ** (self.m + 1.0) / (self.m + 1.0)
        z = self.w.c * rho * rho
        if z.max() > self.MAX_EXPONENT:
            raise NonConvergence("shape too large for the fixed radial rule")
        return rho ** (self.m + 1.0) * (np.exp(np.multiply.outer(z, self.s2)) @ self.ws)

    def measure(self, rho):
        return self.weights @ self.big_H(rho)

    def scale_derivative(self, rho):
        return self.weights @ (np.exp(self.w.c * rho * rho) * rho ** (self.m + 1.0))

    def perimeter(self, rho, drho):
        return self.weights @ (
            np.exp(self.w.c * rho * rho) * rho ** self.w.abs_k * np.sqrt(rho * rho + drho * drho)
        )


def _project_scale(rule, rho0, m):
    """``lambda`` with ``mu(lambda rho0) = m`` under ``rule``."""
    n = rule.m + 1.0
    lam0 = (m / rule.measure(rho0)) ** (1.0 / n)
    if rule.w.c == 0.0:
        return lam0
    # With c > 0 the power-law scale is only a first guess; expand a bracket around it.
    target = np.log(m)
    guess = lo = hi = np.log(lam0)
    while np.log(rule.measure(np.exp(lo) * rho0)) > target:
        lo -= 1.0
    while np.log(rule.measure(np.exp(hi) * rho0)) < target:
        hi += 0.5

    def f(t):
        return np.array([np.log(rule.measure(np.exp(t[0]) * rho0))])

    def df(t):
        r = np.exp(t[0]) * rho0
        return np.array([rule.scale_derivative(r) / rule.measure(r)])

    t = invert_monotone(f, df, target, lo, hi, x0=guess, xtol=1e-15)
    return float(np.exp(t[0]))


def _project_adaptive(family, coeffs, w, m, tol):
    """Adjust ``a_0`` so the adaptive measure of the family member equals ``m``."""
    def mu(t):
        a = coeffs.copy()
        a[0] = t
        return measure2d_and_scale_derivative(family.shape(a), w, tol)

    t = float(coeffs[0])
    for _ in range(50):
        value, slope = mu(t)
        step = (np.log(m) - np.log(value)) * value / slope
        t += step
        if abs(step) <= 1e-15 * max(1.0, abs(t)):
            break
    else:
        raise NonConvergence("scale projection did not converge")
    out = coeffs.copy()
    out[0] = t
    return out


def optimize_shape(
    w: WedgeWeight,
    m: float,
    J: int = DEFAULT_J,
    seed: int = 0,
    start=None,
    amplitude: float = 0.2,
    max_iter: int = 4000,
    restarts: int = 3,
    grad_tol: float = 1e-4,
    tol: float = DEFAULT_TOL,
    rule_nodes: int = 256,
) -> dict:
    """Minimize perimeter at measure ``m`` over the exponential cosine family.

    ``start`` fixes ``a_1..a_J``; otherwise they are drawn uniformly from
    ``[-amplitude, amplitude]`` with the given seed.  Returns the final shape,
    its adaptive-quadrature perimeter, the profile bound and the relative gap.
    """
    if not (np.isfinite(m) and m > 0):
        raise DomainError("measure must be positive")
    family = ShapeFamily(J)
    rule = _FixedRule(w, rule_nodes)
    cos_j = np.cos(np.multiply.outer(rule.theta, 2.0 * np.arange(1, J + 1)))
    sin_j = np.sin(np.multiply.outer(rule.theta, 2.0 * np.arange(1, J + 1))) * (2.0 * np.arange(1, J + 1))
    check = _FixedRule(w, (3 * rule_nodes) // 4)
    cos_c = np.cos(np.multiply.outer(check.theta, 2.0 * np.arange(1, J + 1)))
    sin_c = np.sin(np.multiply.outer(check.theta, 2.0 * np.arange(1, J + 1))) * (2.0 * np.arange(1, J + 1))
    if start is None:
        start = np.random.default_rng(seed).uniform(-amplitude, amplitude, J)
    x = np.asarray(start, dtype=float)
    if x.shape != (J,):
        raise DomainError(f"start must have {J} coefficients")

    def projected(a):
        log_rho = cos_j @ a
        rho0 = np.exp(log_rho - log_rho.max())
        lam = _project_scale(rule, rho0, m) * np.exp(-log_rho.max())
        return lam, rho0 * np.exp(log_rho.max())

    def objective(a):
        if np.any(np.abs(a) > family.bound):
            return np.inf
        try:
            with np.errstate(over="raise", invalid="raise"):
                lam, rho0 = projected(a)
                rho = lam * rho0
                P = rule.perimeter(rho, -rho * (sin_j @ a))
                rho_c = lam * np.exp(cos_c @ a)
                P_c = check.perimeter(rho_c, -rho_c * (sin_c @ a))
                m_c = check.measure(rho_c)
        except (NonConvergence, FloatingPointError):
            # Shapes whose weighted measure overflows are never minimizers.
            return np.inf
        if abs(P_c - P) > RESOLUTION_TOL * P or abs(m_c - m) > RESOLUTION_TOL * m:
            # Under-resolved shapes are rejected so the simplex cannot exploit rule error.
            return np.inf
        return P

    history = [objective(x)]

    def track(intermediate_result):
        history.append(float(intermediate_result.fun))

    step = max(amplitude, 0.05)
    evaluations = 0
    hit_cap = False
    for attempt in range(restarts + 1):
        simplex = np.vstack([x, x + step * np.eye(J)])
        with np.errstate(invalid="ignore"):  # rejected vertices are +inf
            res = minimize(
                objective, x, method="Nelder-Mead", callback=track,
                options={"initial_simplex": simplex, "maxiter": max_iter, "xatol": 1e-7, "fatol": 1e-14},
            )
        evaluations += res.nfev
        hit_cap = res.nit >= max_iter
        improved = res.fun < objective(x) - 1e-13
        x = res.x
        step = max(1e-3, 0.1 * float(np.max(np.abs(x)))) if np.any(x) else 1e-3
        if not improved and attempt > 0:
            break
    if hit_cap:
        h = 1e-6
        grad = np.array([(objective(x + h * e) - objective(x - h * e)) / (2 * h) for e in np.eye(J)])
        if np.linalg.norm(grad) > grad_tol:
            raise NonConvergence(f"optimizer hit {max_iter} iterations with gradient norm {np.linalg.norm(grad):.3g}")

    if not np.isfinite(objective(x)):
        raise NonConvergence("optimizer ended on an unresolved shape")
    lam, _ = projected(x)
    coeffs = _project_adaptive(family, np.concatenate([[np.log(lam)], x]), w, m, tol)
    shape = family.shape(coeffs)
    profile = IsoperimetricProfile(w, tol)
    P = perimeter2d(shape, w, tol)
    bound = profile_value(profile, m)
    R = quarter_ball_radius(profile, m)
    fine = np.linspace(0.0, HALF_PI, 1001)
    return {
        "shape": shape,
        "coeffs": coeffs.tolist(),
        "measure": measure2d(shape, w, tol),
        "perimeter": P,
        "bound": bound,
        "gap": (P - bound) / bound,
        "radius": R,
        "sup_distance": float(np.max(np.abs(family.rho(coeffs, fine) - R)) / R),
        "evaluations": int(evaluations),
        "history": history,
    }


def profile_scan(w: WedgeWeight, m_grid, tol: float = DEFAULT_TOL) -> dict:
    """Columns ``m``, quarter-ball radius ``R`` and profile ``I`` over ``m_grid``."""
    m = np.atleast_1d(np.asarray(m_grid, dtype=float))
    if m.ndim != 1 or m.size == 0 or not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise DomainError("measure must be positive")
    if np.any(np.diff(m) <= 0):
        raise DomainError("m grid must be increasing")
    profile = IsoperimetricProfile(w, tol)
    R = np.atleast_1d(quarter_ball_radius(profile, m))
    I = np.atleast_1d(profile_value(profile, m))
    return {"m": m.tolist(), "R": R.tolist(), "I": I.tolist()}


def scan_csv(table: dict) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(("m", "R", "I"))
    for row in zip(table["m"], table["R"], table["I"]):
        out.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True)
