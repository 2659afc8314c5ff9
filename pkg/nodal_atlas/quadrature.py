"""
Time integrals of the hump and gap systems.

Periods and quarter-lap times of the closed orbits H(y) + F_i(x) = c, the
transit times along the level lines of the gap system
H(y) + lambda*x^2/2 = e, and the closed forms used for equal humps.

All integrands have inverse square root singularities at turning points.
They are removed by sine (or hyperbolic) profiles: x = x_end*sin(phi) turns
c - F(x) into a smooth multiple of cos(phi)^2 near phi = pi/2, evaluated
through the cancellation-free drop of the potential.
"""

import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import integrate, optimize, special

from . import conf
from .exceptions import (DegenerateLevel, DomainViolation, IncompatibleGeometry,
                         NoBracket, OutOfRange, SignViolation)
from .model import BRENT_RTOL, ProblemSpec

logger = logging.getLogger(__name__)

BRACKET_START = 1e-8
BRACKET_LIMIT = 2.0 ** 60
BRACKET_SUBDIVISIONS = 8
QUAD_LIMIT = 200

Levels = Tuple[Tuple[float, float], Tuple[float, float]]


class LevelCrossing(NamedTuple):
    c: float
    x_plus: float
    x_minus: float
    y_plus: float
    y_minus: float


class QuarterTimes(NamedTuple):
    t_I: float
    t_II: float
    t_III: float
    t_IV: float
    error: float = 0.0

    @property
    def period(self) -> float:
        return self.t_I + self.t_II + self.t_III + self.t_IV

    def of(self, quadrant: str) -> float:
        return getattr(self, f't_{quadrant}')


class CompatReport(NamedTuple):
    ok: bool
    x_com: float
    slack: float
    lhs: float
    rhs: float


def _tol(tol: Optional[float]) -> float:
    return conf.get('QUAD_TOL') if tol is None else tol


def _quad(func, a, b, tol):
    value, err = integrate.quad(func, a, b, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT)
    return value, err


######################################################################

def solve_level_abscissa(problem: ProblemSpec, i: int, c: float, side: str,
                         mu: Optional[float] = None) -> float:
    """x_+(c) or x_-(c): the crossing of F_i = c closest to the origin.

    Raises NoBracket when F never reaches c and DegenerateLevel when c is a
    critical value of F.
    """
    if not c > 0.0:
        raise DomainViolation(c, 0.0, math.inf, what='c')
    sign = 1.0 if side == 'plus' else -1.0

    def f(x):
        return float(problem.F(i, x, mu)) - c

    lo, x = 0.0, BRACKET_START
    root = None
    while root is None:
        grid = np.linspace(lo, x, BRACKET_SUBDIVISIONS + 1)
        values = [f(sign * v) for v in grid]
        for k in range(BRACKET_SUBDIVISIONS):
            if values[k] < 0.0 <= values[k + 1]:
                a, b = sign * grid[k], sign * grid[k + 1]
                root = optimize.brentq(f, min(a, b), max(a, b), xtol=1e-300, rtol=BRENT_RTOL)
                break
        lo, x = x, 2.0 * x
        if root is None and x > BRACKET_LIMIT:
            logger.error(f"no crossing of F_{i} = {c} on side {side}")
            raise NoBracket(c, side, BRACKET_LIMIT)
    slope = float(problem.F_prime(i, root, mu))
    if abs(slope * root) <= 1e-9 * max(1.0, c) or slope * sign <= 0.0:
        raise DegenerateLevel(c, root, slope)
    return root


def level_crossing(problem: ProblemSpec, i: int, c: float,
                   mu: Optional[float] = None) -> LevelCrossing:
    if not c < problem.h.h_star():
        raise DomainViolation(c, 0.0, problem.h.h_star(), what='c')
    return LevelCrossing(c=c,
                         x_plus=solve_level_abscissa(problem, i, c, 'plus', mu),
                         x_minus=solve_level_abscissa(problem, i, c, 'minus', mu),
                         y_plus=problem.h.h_inverse_of_H(c, 'plus'),
                         y_minus=problem.h.h_inverse_of_H(c, 'minus'))


def _quarter(problem: ProblemSpec, i: int, x_end: float, y_side: str,
             mu: Optional[float], tol: float) -> Tuple[float, float]:
    """Time spent between the y-axis and the turning point x_end on one half plane."""
    h = problem.h
    b = abs(x_end)

    def integrand(phi):
        delta = 2.0 * b * math.sin(0.25 * math.pi - 0.5 * phi) ** 2
        level = problem.potential_drop(i, x_end, delta, mu)
        if level <= 0.0:
            return 0.0
        speed = abs(float(h.raw_h(h.h_inverse_of_H(level, y_side))))
        return b * math.cos(phi) / speed

    return _quad(integrand, 0.0, 0.5 * math.pi, tol)


def quarter_times(problem: ProblemSpec, i: int, c: float, tol: Optional[float] = None,
                  mu: Optional[float] = None) -> QuarterTimes:
    """Quarter-lap times of the closed orbit H_i = c.

    t_I runs from (0, y_+) to (x_+, 0) and the others follow clockwise.
    """
    tol = _tol(tol)
    try:
        lc = level_crossing(problem, i, c, mu)
        t_I, e1 = _quarter(problem, i, lc.x_plus, 'plus', mu, tol)
        t_IV, e4 = _quarter(problem, i, lc.x_plus, 'minus', mu, tol)
        t_III, e3 = _quarter(problem, i, lc.x_minus, 'minus', mu, tol)
        t_II, e2 = _quarter(problem, i, lc.x_minus, 'plus', mu, tol)
    except (DomainViolation, NoBracket, DegenerateLevel) as e:
        logger.error(f"quarter times of hump {i} at c={c} failed: {e}")
        raise
    return QuarterTimes(t_I=t_I, t_II=t_II, t_III=t_III, t_IV=t_IV, error=e1 + e2 + e3 + e4)


def period(problem: ProblemSpec, i: int, c: float, tol: Optional[float] = None,
           mu: Optional[float] = None) -> float:
    return quarter_times(problem, i, c, tol, mu).period


def period_scaling_lambda0(p: float, mu: float, c: float) -> float:
    """A quarter of the period at lambda = 0 for identity h and power g."""
    constant = special.beta(1.0 / (p + 1.0), 0.5) / (math.sqrt(2.0) * (p + 1.0) ** (p / (p + 1.0)))
    return mu ** (-1.0 / (p + 1.0)) * c ** ((1.0 - p) / (2.0 * (p + 1.0))) * constant


######################################################################

def _one_minus_sin_power(phi: float, q: float) -> float:
    """1 - sin(phi)**q, accurate as phi approaches pi/2."""
    return -math.expm1(q * math.log1p(-2.0 * math.sin(0.25 * math.pi - 0.5 * phi) ** 2))


def semilinear_period(lam: float, mu: float, p: float, x_plus: float,
                      tol: Optional[float] = None) -> float:
    """Period of the orbit through (x_plus, 0) for identity h and g = |x|^(p-1)x."""
    tol = _tol(tol)
    k = 2.0 * mu / (p + 1.0) * x_plus ** (p - 1.0)
    # radicand / cos^2 tends to lam + k at phi = 0 and to lam + k(p+1)/2 at pi/2
    if not (lam + k > 0.0 and lam + 0.5 * k * (p + 1.0) > 0.0):
        raise OutOfRange('x_plus', x_plus, 'the range of closed orbits')

    def integrand(phi):
        c2 = math.cos(phi) ** 2
        radicand = lam * c2 + k * _one_minus_sin_power(phi, p + 1.0)
        return math.cos(phi) / math.sqrt(radicand) if radicand > 0.0 else 0.0

    value, _ = _quad(integrand, 0.0, 0.5 * math.pi, tol)
    return 4.0 * value


def script_T1(theta: float, p: float, tol: Optional[float] = None, full_output: bool = False):
    """The normalized quarter period as a function of theta = x_+/x*."""
    tol = _tol(tol)
    if p > 1.0:
        if not theta > 1.0:
            raise OutOfRange('theta', theta, '(1, inf) for p > 1')
    else:
        theta_max = ((p + 1.0) / 2.0) ** (1.0 / (1.0 - p))
        if not 0.0 < theta < theta_max:
            raise OutOfRange('theta', theta, f'(0, {theta_max!r}) for p < 1')
    scale = theta ** (p - 1.0)

    def integrand(phi):
        radicand = -math.cos(phi) ** 2 + scale * _one_minus_sin_power(phi, p + 1.0)
        return math.cos(phi) / math.sqrt(radicand) if radicand > 0.0 else 0.0

    value, err = _quad(integrand, 0.0, 0.5 * math.pi, tol)
    return (value, err) if full_output else value


class LambdaBounds(NamedTuple):
    lambda1: float
    lambda2: float
    lambda_star: float


def lambda_bounds(theta1: float, theta2: float, p: float, lam: float) -> LambdaBounds:
    """Gap-length thresholds for lambda < 0 in terms of theta = x/x*."""
    if not lam < 0.0:
        raise SignViolation(lam, '< 0')
    if not theta2 >= theta1 > 0.0:
        raise OutOfRange('theta2/theta1', theta2 / theta1 if theta1 else math.inf, '[1, inf)')
    base = theta1 ** (p - 1.0) - 1.0
    if not base > 0.0:
        raise OutOfRange('theta1', theta1, 'theta1**(p-1) > 1')
    lambda1 = math.asinh(theta2 / (theta1 * math.sqrt(base)))
    lambda2 = math.acosh(theta2 / theta1)
    return LambdaBounds(lambda1, lambda2, 2.0 / math.sqrt(-lam) * max(lambda1, lambda2))


######################################################################

def energy_transit(problem: ProblemSpec, e: float, a: float, b: float, half: str,
                   tol: Optional[float] = None, full_output: bool = False):
    """Time to run along H(y) + lambda*x^2/2 = e between abscissae a < b.

    `half` is 'upper' (y > 0) or 'lower' (y < 0).  Turning points on the
    x-axis, where H(y) = e - lambda*x^2/2 vanishes, may be endpoints.
    """
    tol = _tol(tol)
    lam = problem.lam
    h = problem.h
    y_side = 'plus' if half == 'upper' else 'minus'
    if not a < b:
        return (0.0, 0.0) if full_output else 0.0
    far = max(abs(a), abs(b))
    near = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
    w_max = e - 0.5 * lam * (near * near if lam > 0.0 else far * far)
    if not w_max < h.H_edge(y_side):
        logger.error(f"level line E={e} leaves the domain of h on [{a}, {b}]")
        raise DomainViolation(w_max, 0.0, h.H_edge(y_side), what='H along the level line')

    def speed(w):
        return abs(float(h.raw_h(h.h_inverse_of_H(w, y_side))))

    if lam == 0.0:
        value = (b - a) / speed(e)
        return (value, 0.0) if full_output else value

    turning = math.sqrt(2.0 * e / lam) if e / lam > 0.0 else None
    pieces = [(0.0, -a), (0.0, b)] if a < 0.0 < b else [(abs(b), abs(a))] if b <= 0.0 else [(a, b)]
    total, error = 0.0, 0.0
    for u, v in pieces:
        if v <= u:
            continue
        value, err = _transit_piece(lam, e, u, v, turning, speed, tol)
        total += value
        error += err
    return (total, error) if full_output else total


def _transit_piece(lam, e, u, v, turning, speed, tol):
    """Integral over [u, v] in |x|, 0 <= u < v, with a turning point allowed at an end."""
    if lam > 0.0 and turning is not None and v >= turning * (1.0 - 1e-12):
        r = turning
        phi0 = math.asin(min(u / r, 1.0))

        def integrand(phi):
            w = e * math.cos(phi) ** 2
            return r * math.cos(phi) / speed(w) if w > 0.0 else 0.0

        return _quad(integrand, phi0, 0.5 * math.pi, tol)
    if lam < 0.0 and turning is not None and u <= turning * (1.0 + 1e-12):
        r = turning
        s1 = math.acosh(max(v / r, 1.0))

        def integrand(s):
            w = -e * math.sinh(s) ** 2
            return r * math.sinh(s) / speed(w) if w > 0.0 else 0.0

        return _quad(integrand, 0.0, s1, tol)
    return _quad(lambda x: 1.0 / speed(e - 0.5 * lam * x * x), u, v, tol)


def gap_period(problem: ProblemSpec, c: float, tol: Optional[float] = None) -> float:
    """Period of the closed gap orbit H(y) + lambda*x^2/2 = c (lambda > 0)."""
    if not problem.lam > 0.0:
        raise SignViolation(problem.lam, '> 0')
    r = math.sqrt(2.0 * c / problem.lam)
    return (energy_transit(problem, c, -r, r, 'upper', tol)
            + energy_transit(problem, c, -r, r, 'lower', tol))


######################################################################

def crossing_abscissa(problem: ProblemSpec, j: int, level: float, e: float, side: str) -> float:
    """Abscissa where the gap line E = e meets the hump-j orbit H_j = level.

    On E = e the Hamiltonian reads e + mu_j*G(x), so x = G_side^{-1}((level - e)/mu_j).
    """
    v = (level - e) / problem.mu(j)
    if v < 0.0:
        raise IncompatibleGeometry(f"level line E={e} lies outside the orbit H_{j}={level}", slack=v)
    return problem.g.G_inverse(v, side)


def compat_margin(problem: ProblemSpec, i: int, levels: Levels,
                  c: Optional[float] = None) -> CompatReport:
    """Whether E = c crosses both outer orbits inside |x| < sqrt(2c/lambda)."""
    if not problem.lam > 0.0:
        raise SignViolation(problem.lam, '> 0')
    (c1_i, c2_i), (c1_j, c2_j) = levels
    c = min(c1_i, c1_j) if c is None else c
    reach = math.sqrt(2.0 * c / problem.lam)
    lhs = min(float(problem.g.G(-reach)), float(problem.g.G(reach)))
    values = [(c2_i - c) / problem.mu(i), (c2_j - c) / problem.mu(i + 1)]
    rhs = max(values)
    x_com = max(max(abs(problem.g.G_inverse(v, 'minus')), problem.g.G_inverse(v, 'plus'))
                for v in values)
    return CompatReport(ok=lhs > rhs, x_com=x_com, slack=reach - x_com, lhs=lhs, rhs=rhs)


TRANSIT_KINDS = ('II->I', 'IV->III', 'IV->I', 'II->III',
                 'c2:II->I', 'c1:II->I', 'c1-sqrt:II->I',
                 'c2:IV->III', 'c1:IV->III', 'c1-sqrt:IV->III',
                 'III->I', 'I->III')


def transit_linear(problem: ProblemSpec, kind: str, i: int, levels: Levels,
                   c: Optional[float] = None, tol: Optional[float] = None,
                   full_output: bool = False):
    """Transit time across gap i between the annuli of humps i and i+1.

    `levels` is ((c1_i, c2_i), (c1_{i+1}, c2_{i+1})).  For lambda <= 0 the
    kinds are 'II->I' and 'IV->III' (and 'IV->I', 'II->III' for lambda < 0);
    for lambda > 0 they are taken on the level line E = c, which defaults to
    min(c1_i, c1_{i+1}).
    """
    if kind not in TRANSIT_KINDS:
        raise ValueError(f"unknown transit kind '{kind}'")
    lam = problem.lam
    (c1_i, c2_i), (c1_j, c2_j) = levels
    j = i + 1
    parts = []

    if lam <= 0.0:
        if kind in ('II->I', 'IV->III'):
            e = min(c1_i, c1_j)
            if kind == 'II->I':
                left = crossing_abscissa(problem, i, c2_i, e, 'minus')
                right = crossing_abscissa(problem, j, c2_j, e, 'plus')
                parts.append((e, left, right, 'upper'))
            else:
                right = crossing_abscissa(problem, i, c2_i, e, 'plus')
                left = crossing_abscissa(problem, j, c2_j, e, 'minus')
                parts.append((e, left, right, 'lower'))
        elif lam < 0.0 and kind == 'IV->I':
            x_near = min(solve_level_abscissa(problem, i, c1_i, 'plus'),
                         solve_level_abscissa(problem, j, c1_j, 'plus'))
            e = 0.5 * lam * x_near * x_near
            parts.append((e, x_near, crossing_abscissa(problem, i, c2_i, e, 'plus'), 'lower'))
            parts.append((e, x_near, crossing_abscissa(problem, j, c2_j, e, 'plus'), 'upper'))
        elif lam < 0.0 and kind == 'II->III':
            x_near = max(solve_level_abscissa(problem, i, c1_i, 'minus'),
                         solve_level_abscissa(problem, j, c1_j, 'minus'))
            e = 0.5 * lam * x_near * x_near
            parts.append((e, crossing_abscissa(problem, i, c2_i, e, 'minus'), x_near, 'upper'))
            parts.append((e, crossing_abscissa(problem, j, c2_j, e, 'minus'), x_near, 'lower'))
        else:
            raise SignViolation(lam, '> 0' if ':' in kind or kind in ('III->I', 'I->III') else '< 0')
    else:
        if kind in ('II->I', 'IV->III', 'IV->I', 'II->III'):
            raise SignViolation(lam, '<= 0')
        report = compat_margin(problem, i, levels, c)
        if not report.ok:
            logger.error(f"gap {i}: level line does not cross both annuli (slack {report.slack})")
            raise IncompatibleGeometry(f"compatibility fails on gap {i}", slack=report.slack)
        c = min(c1_i, c1_j) if c is None else c
        reach = math.sqrt(2.0 * c / lam)
        if kind == 'c2:II->I':
            parts.append((c, crossing_abscissa(problem, i, c2_i, c, 'minus'),
                          crossing_abscissa(problem, j, c2_j, c, 'plus'), 'upper'))
        elif kind == 'c1:II->I':
            parts.append((c, crossing_abscissa(problem, i, c1_i, c, 'minus'),
                          crossing_abscissa(problem, j, c1_j, c, 'plus'), 'upper'))
        elif kind == 'c1-sqrt:II->I':
            parts.append((c, crossing_abscissa(problem, i, c1_i, c, 'minus'), reach, 'upper'))
        elif kind == 'c2:IV->III':
            parts.append((c, crossing_abscissa(problem, j, c2_j, c, 'minus'),
                          crossing_abscissa(problem, i, c2_i, c, 'plus'), 'lower'))
        elif kind == 'c1:IV->III':
            parts.append((c, crossing_abscissa(problem, j, c1_j, c, 'minus'),
                          crossing_abscissa(problem, i, c1_i, c, 'plus'), 'lower'))
        elif kind == 'c1-sqrt:IV->III':
            parts.append((c, -reach, crossing_abscissa(problem, i, c1_i, c, 'plus'), 'lower'))
        elif kind == 'III->I':
            parts.append((c, -reach, crossing_abscissa(problem, i, c2_i, c, 'minus'), 'lower'))
            parts.append((c, -reach, crossing_abscissa(problem, j, c1_j, c, 'plus'), 'upper'))
        else:
            parts.append((c, crossing_abscissa(problem, i, c2_i, c, 'plus'), reach, 'upper'))
            parts.append((c, crossing_abscissa(problem, j, c1_j, c, 'minus'), reach, 'lower'))

    value, error = 0.0, 0.0
    for e, a, b, half in parts:
        v, err = energy_transit(problem, e, a, b, half, tol, full_output=True)
        value += v
        error += err
    return (value, error) if full_output else value
