"""
Constant-weight problems with identity h and power g.

The Dirichlet solution with n-1 interior nodes corresponds to the closed
orbit whose period equals 2L/n, so its branch in lambda follows from the
period map by a monotone root search.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import conf
from .exceptions import NodalAtlasError, OutOfRange, SignViolation
from .model import BRENT_RTOL, BoundaryArc, HomeoSpec, NonlinSpec, ProblemSpec, StepWeight
from .quadrature import semilinear_period

logger = logging.getLogger(__name__)

X_FLOOR = 1e-12
X_CAP = 1e12
EDGE_GAP = 1e-12


def sigma_n(n: int, L: float) -> float:
    """n-th Dirichlet eigenvalue of -D^2 on (0, L)."""
    if n < 1 or not L > 0.0:
        raise ValueError(f"need n >= 1 and L > 0, got n={n}, L={L}")
    return (n * math.pi / L) ** 2


class CriticalPoints(NamedTuple):
    x_star: float
    omega_plus: float
    c_star: float


def _check_p(p: float):
    if not p > 0.0 or p == 1.0:
        raise OutOfRange('p', p, '(0, 1) or (1, inf)')


def critical_points(lam: float, mu: float, p: float) -> CriticalPoints:
    """x* (where F vanishes), omega_+ (equilibrium) and c* = F(omega_+) for lambda < 0."""
    if not lam < 0.0:
        raise SignViolation(lam, '< 0')
    _check_p(p)
    omega = (-lam / mu) ** (1.0 / (p - 1.0))
    x_star = (-lam * (p + 1.0) / (2.0 * mu)) ** (1.0 / (p - 1.0))
    c_star = 0.5 * lam * omega ** 2 + mu * omega ** (p + 1.0) / (p + 1.0)
    return CriticalPoints(x_star=x_star, omega_plus=omega, c_star=c_star)


def period_map(lam: float, mu: float, p: float, x_plus: float, tol: Optional[float] = None) -> float:
    return semilinear_period(lam, mu, p, x_plus, tol)


def apriori_curve(lam: float, a_sup_norm: float, p: float) -> float:
    """Lower bound (-lambda/||a||)^(1/(p-1)) for the amplitude of any solution."""
    if not lam < 0.0:
        raise SignViolation(lam, '< 0')
    _check_p(p)
    return (-lam / a_sup_norm) ** (1.0 / (p - 1.0))


@dataclass(frozen=True)
class BranchPoint:
    lam: float
    n: int
    M_plus: float
    x_plus: float
    slope_sign: int = 1
    error_est: float = 0.0
    saturated: bool = False


def _x_range(lam: float, mu: float, p: float) -> Tuple[float, float]:
    if lam < 0.0:
        cp = critical_points(lam, mu, p)
        if p > 1.0:
            return max(cp.x_star * (1.0 + EDGE_GAP), X_FLOOR), X_CAP
        return X_FLOOR, min(cp.omega_plus * (1.0 - EDGE_GAP), X_CAP)
    return X_FLOOR, X_CAP


def branch_point(n: int, lam: float, mu: float, p: float, L: float,
                 seed: Optional[float] = None, tol: Optional[float] = None) -> Optional[BranchPoint]:
    """The orbit abscissa with period 2L/n, or None when lambda >= sigma_n.

    Args:
        n: one more than the number of interior nodes
        lam: lambda
        mu: constant weight
        p: exponent of g
        L: interval length
        seed: previous x_plus used to start the bracket

    Returns:
        BranchPoint, flagged saturated when the root lies beyond the search range
    """
    _check_p(p)
    if lam >= sigma_n(n, L):
        return None
    tol = conf.get('QUAD_TOL') if tol is None else tol
    target = 2.0 * L / n
    lo, hi = _x_range(lam, mu, p)
    # T decreases in x_plus for p > 1 and increases for p < 1
    sign = -1.0 if p > 1.0 else 1.0

    def f(u):
        return sign * (period_map(lam, mu, p, math.exp(u), tol) - target)

    ulo, uhi = math.log(lo), math.log(hi)
    if seed is not None and lo < seed < hi:
        a, b, step = math.log(seed) - 0.5, math.log(seed) + 0.5, 1.0
        a, b = max(a, ulo), min(b, uhi)
        while f(a) > 0.0 and a > ulo:
            a, step = max(a - step, ulo), 2.0 * step
        while f(b) < 0.0 and b < uhi:
            b, step = min(b + step, uhi), 2.0 * step
    else:
        a, b = ulo, uhi
    fa, fb = f(a), f(b)
    if fa > 0.0 or fb < 0.0:
        edge = lo if fa > 0.0 else hi
        logger.warning(f"branch n={n} at lambda={lam}: root beyond x_plus={edge}, saturated")
        return BranchPoint(lam=lam, n=n, M_plus=edge, x_plus=edge, saturated=True,
                           error_est=abs(f(math.log(edge))))
    try:
        u = optimize.brentq(f, a, b, xtol=1e-14, rtol=BRENT_RTOL)
    except (ValueError, RuntimeError) as e:
        logger.error(f"branch search failed for n={n}, lambda={lam}: {e}")
        raise NodalAtlasError(f"branch search failed for n={n}, lambda={lam}: {e}")
    x_plus = math.exp(u)
    residual = abs(f(u))
    return BranchPoint(lam=lam, n=n, M_plus=x_plus, x_plus=x_plus, error_est=residual + tol)


class Sweep(NamedTuple):
    points: List[BranchPoint]
    verdict: str
    expected: str


def _sweep_chunk(args) -> List[Optional[BranchPoint]]:
    n, lams, mu, p, L, seed, tol = args
    out = []
    for lam in lams:
        point = branch_point(n, lam, mu, p, L, seed=seed, tol=tol)
        out.append(point)
        if point is not None and not point.saturated:
            seed = point.x_plus
    return out


def branch_sweep(n: int, lambda_grid: Sequence[float], mu: float, p: float, L: float,
                 threads: int = 1, tol: Optional[float] = None) -> Sweep:
    """Branch points over an ascending lambda grid with a monotonicity verdict.

    With several threads a serial pass over every eighth grid point seeds the
    chunks that the worker processes then complete.
    """
    grid = [float(v) for v in lambda_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda grid must be sorted ascending")
    expected = 'decreasing' if p > 1.0 else 'increasing'
    if threads <= 1 or len(grid) < 16:
        found = _sweep_chunk((n, grid, mu, p, L, None, tol))
    else:
        coarse = _sweep_chunk((n, grid[::8], mu, p, L, None, tol))
        jobs = []
        for k, seed_point in enumerate(coarse):
            seed = seed_point.x_plus if seed_point is not None and not seed_point.saturated else None
            jobs.append((n, grid[8 * k:8 * k + 8], mu, p, L, seed, tol))
        with ProcessPoolExecutor(max_workers=threads) as executor:
            found = [point for part in executor.map(_sweep_chunk, jobs) for point in part]
    points = [point for point in found if point is not None]
    values = [point.M_plus for point in points if not point.saturated]
    if len(values) < 2:
        verdict = 'empty' if not values else expected
    else:
        steps = np.diff(values)
        verdict = ('decreasing' if np.all(steps < 0.0) else
                   'increasing' if np.all(steps > 0.0) else 'not monotone')
    logger.info(f"sweep n={n}: {len(points)} of {len(grid)} grid points on the branch, {verdict}")
    return Sweep(points=points, verdict=verdict, expected=expected)


def nodes(point: BranchPoint, L: float) -> List[float]:
    """Interior zeros iL/n of the branch solution."""
    return [i * L / point.n for i in range(1, point.n)]


def branch_problem(lam: float, mu: float, p: float, L: float, n: int = 1) -> ProblemSpec:
    """Dirichlet problem whose branch-n solution starts on the positive y-axis."""
    end = 'negative-y-axis' if n % 2 else 'positive-y-axis'
    return ProblemSpec(h=HomeoSpec.build('identity'), g=NonlinSpec('power-p', p), lam=lam,
                       weight=StepWeight.constant(mu, L),
                       r0=BoundaryArc('positive-y-axis'), rL=BoundaryArc(end))


def branch_initial_slope(point: BranchPoint, mu: float, p: float) -> float:
    """u'(0) > 0 of the branch solution, from H(y) = F(x_plus)."""
    x = point.x_plus
    return math.sqrt(2.0 * (0.5 * point.lam * x * x + mu * x ** (p + 1.0) / (p + 1.0)))
