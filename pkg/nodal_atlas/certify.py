"""
Hypothesis checks behind the multiplicity bounds.

Twist conditions on each hump, compatibility and transit-time windows on
each gap, the admissible itineraries between the annuli, and the count of
solutions they guarantee.

A strict inequality is only reported as satisfied when its slack exceeds
SLACK_FACTOR times the quadrature error estimate; closer calls come back as
'indeterminate'.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from . import conf
from .exceptions import MissingCertificate, NodalAtlasError, SignViolation
from .model import QUADRANTS, ProblemSpec, predecessor, successor
from .quadrature import (CompatReport, compat_margin, gap_period, lambda_bounds,
                         level_crossing, quarter_times, transit_linear)

logger = logging.getLogger(__name__)

TWIST_VARIANTS = ('standard', 'strong', 'positive', 'lambda0-interior', 'lambda0-endpoint',
                  'positive-interior', 'positive-endpoint', 'sublinear', 'start-iv',
                  'boundary-quadrant')
WINDOW_VARIANTS = ('through-y-axis', 'through-x-axis', 'level-window', 'level-window-winding',
                   'level-crossing', 'lambda0-gap', 'equal-hump-positive', 'saddle-gap')
ANGLE_SAMPLES = 64


@dataclass(frozen=True)
class Annulus:
    """Energy window c1 <= H_i <= c2 around the origin for hump i.

    c1 == c2 is the degenerate annulus, a single closed orbit.
    """

    i: int
    c1: float
    c2: float

    def __post_init__(self):
        if not 0.0 < self.c1 <= self.c2:
            raise NodalAtlasError(f"annulus needs 0 < c1 <= c2, got ({self.c1!r}, {self.c2!r})")

    @classmethod
    def build(cls, problem: ProblemSpec, i: int, c1: float, c2: float) -> 'Annulus':
        """Construct and check that both levels are regular closed orbits below H*."""
        annulus = cls(i, float(c1), float(c2))
        level_crossing(problem, i, annulus.c1)
        level_crossing(problem, i, annulus.c2)
        return annulus

    @property
    def levels(self) -> Tuple[float, float]:
        return self.c1, self.c2


@dataclass(frozen=True)
class TwistCertificate:
    i: int
    alpha: int
    beta: int
    variant: str
    d: float
    e: float
    status: str
    margins: Tuple[Tuple[str, float], ...]
    error: float
    violated: Optional[str] = None
    deficit: Optional[float] = None
    extrapolated: bool = False

    @property
    def satisfied(self) -> bool:
        return self.status == 'satisfied'

    @property
    def crossing_number(self) -> int:
        return self.beta - self.alpha


@dataclass(frozen=True)
class WindowReport:
    i: int
    variant: str
    status: str
    margins: Tuple[Tuple[str, float], ...]
    error: float
    multiplier: int = 1
    empirical: bool = False
    violated: Optional[str] = None

    @property
    def satisfied(self) -> bool:
        return self.status == 'satisfied'


@dataclass(frozen=True)
class Itinerary:
    """Quadrant labels at the hump entrances and the moves between them.

    Each move is (transition, channel): transition is 'horizontal' (same
    label) or 'diagonal' (opposite label); channel 'one' passes over the
    y-axis and channel 'two' (lambda < 0 only) through the x-axis.
    """

    kappas: Tuple[str, ...]
    moves: Tuple[Tuple[str, str], ...] = ()

    def exit_quadrant(self, i: int) -> str:
        """Quadrant in which hump i ends for this itinerary (i < m)."""
        transition, channel = self.moves[i]
        kappa = self.kappas[i]
        if (transition == 'horizontal') == (channel == 'one'):
            return predecessor(kappa)
        return successor(kappa)

    def label(self) -> str:
        parts = [self.kappas[0]]
        for (transition, channel), kappa in zip(self.moves, self.kappas[1:]):
            parts.append(f"-{channel}->{kappa}")
        return ''.join(parts)


@dataclass(frozen=True)
class CountBound:
    total: int
    breakdown: Tuple[Tuple[Itinerary, int], ...]
    classes: int = 1


######################################################################

def _threshold(error: float, slack_factor: Optional[float]) -> float:
    factor = conf.get('SLACK_FACTOR') if slack_factor is None else slack_factor
    return factor * max(error, conf.get('QUAD_TOL'))


def _verdict(margins: List[Tuple[str, float]], threshold: float):
    for name, slack in margins:
        if slack <= -threshold:
            return 'violated', name, -slack
    for name, slack in margins:
        if slack < threshold:
            return 'indeterminate', name, -slack
    return 'satisfied', None, None


def _default_levels(problem, annulus, variant, tol):
    if variant in ('positive', 'positive-interior', 'positive-endpoint'):
        return annulus.c1, annulus.c2
    if variant == 'sublinear':
        return annulus.c2, annulus.c1
    # the slower orbit plays d
    inner = quarter_times(problem, annulus.i, annulus.c1, tol).period
    outer = quarter_times(problem, annulus.i, annulus.c2, tol).period
    return (annulus.c1, annulus.c2) if inner >= outer else (annulus.c2, annulus.c1)


def check_twist(problem: ProblemSpec, annulus: Annulus, tau: Optional[float], alpha: int,
                beta: int, variant: str = 'standard', d: Optional[float] = None,
                e: Optional[float] = None, quadrant: str = 'II', endpoint: bool = False,
                tol: Optional[float] = None, slack_factor: Optional[float] = None) -> TwistCertificate:
    """Evaluate the twist inequalities of `variant` on hump annulus.i.

    Args:
        problem: the problem instance
        annulus: the hump annulus
        tau: hump length (defaults to tau_i of the weight)
        alpha: lower winding count
        beta: upper winding count, beta > alpha >= 0
        variant: one of TWIST_VARIANTS
        d: slow level (default by regime)
        e: fast level (default by regime)
        quadrant: boundary quadrant for 'boundary-quadrant'
        endpoint: use the quarter-period form for 'sublinear'

    Returns:
        TwistCertificate whose status is satisfied, violated or indeterminate
    """
    if variant not in TWIST_VARIANTS:
        raise ValueError(f"unknown twist variant '{variant}'")
    if not 0 <= alpha < beta:
        raise ValueError(f"need 0 <= alpha < beta, got alpha={alpha}, beta={beta}")
    i = annulus.i
    tau = problem.weight.tau(i) if tau is None else tau
    if d is None or e is None:
        d, e = _default_levels(problem, annulus, variant, tol)
    qd = quarter_times(problem, i, d, tol)
    qe = quarter_times(problem, i, e, tol)
    Td, Te = qd.period, qe.period
    margins: List[Tuple[str, float]] = []

    if variant in ('standard', 'strong'):
        for kappa in QUADRANTS:
            k1, k2 = successor(kappa), successor(kappa, 2)
            lead = qd.of(k1) + (qd.of(k2) if variant == 'standard' else 0.0)
            margins.append((f"slow side, kappa={kappa}", lead + alpha * Td - tau))
            margins.append((f"fast side, kappa={kappa}", tau - (qe.of(kappa) + qe.of(k1) + beta * Te)))
    elif variant == 'positive':
        for kappa in ('I', 'III'):
            margins.append((f"slow side, kappa={kappa}", qd.of(successor(kappa)) + alpha * Td - tau))
        margins.append(("fast side", tau - beta * Te))
    elif variant in ('lambda0-interior', 'positive-interior') or (variant == 'sublinear' and not endpoint):
        margins.append(("slow side", (alpha + 0.5) * Td - tau))
        margins.append(("fast side", tau - (beta + 0.5) * Te))
    elif variant in ('lambda0-endpoint', 'positive-endpoint', 'sublinear'):
        margins.append(("slow side", (alpha + 0.25) * Td - tau))
        margins.append(("fast side", tau - (beta + 0.5) * Te))
    elif variant == 'start-iv':
        margins.append(("slow side", qd.t_IV + qd.t_III + alpha * Td - tau))
        margins.append(("fast side", tau - beta * Te))
    else:
        if quadrant not in QUADRANTS:
            raise ValueError(f"unknown quadrant '{quadrant}'")
        margins.append(("slow side", qd.of(successor(quadrant)) + alpha * Td - tau))
        margins.append(("fast side", tau - (qe.of(quadrant) + beta * Te)))

    error = (alpha + 2) * qd.error + (beta + 2) * qe.error
    status, violated, deficit = _verdict(margins, _threshold(error, slack_factor))
    if status == 'indeterminate':
        logger.warning(f"twist on hump {i} ({variant}) is indeterminate at '{violated}'")
    else:
        logger.info(f"twist on hump {i} ({variant}, alpha={alpha}, beta={beta}, tau={tau}): {status}")
    return TwistCertificate(i=i, alpha=alpha, beta=beta, variant=variant, d=d, e=e, status=status,
                            margins=tuple(margins), error=error, violated=violated,
                            deficit=deficit,
                            extrapolated=variant == 'boundary-quadrant' and quadrant != 'II')


def scan_twist(problem: ProblemSpec, annulus: Annulus, tau_grid: Sequence[float], alpha: int,
               beta: int, variant: str = 'standard', **kwargs) -> List[Tuple[float, str]]:
    """Status of the twist condition at every tau of a grid."""
    return [(float(tau), check_twist(problem, annulus, tau, alpha, beta, variant, **kwargs).status)
            for tau in tau_grid]


######################################################################

def check_compat(problem: ProblemSpec, annulus: Annulus, next_annulus: Annulus,
                 c: Optional[float] = None) -> CompatReport:
    """Whether the gap level line E = c crosses both outer orbits (lambda > 0)."""
    if next_annulus.i != annulus.i + 1:
        raise ValueError(f"annuli {annulus.i} and {next_annulus.i} are not consecutive")
    return compat_margin(problem, annulus.i, (annulus.levels, next_annulus.levels), c)


def lambda0_gap_bound(problem: ProblemSpec, annulus: Annulus, next_annulus: Annulus) -> float:
    """Upper bound for the lambda = 0 transit times across gap annulus.i."""
    g, h = problem.g, problem.h
    i, j = annulus.i, next_annulus.i
    low = min(annulus.c1, next_annulus.c1)
    upper = (g.G_inverse(next_annulus.c2 / problem.mu(j), 'plus')
             - g.G_inverse(annulus.c2 / problem.mu(i), 'minus'))
    lower = (g.G_inverse(annulus.c2 / problem.mu(i), 'plus')
             - g.G_inverse(next_annulus.c2 / problem.mu(j), 'minus'))
    return max(upper / float(h.raw_h(h.h_inverse_of_H(low, 'plus'))),
               lower / abs(float(h.raw_h(h.h_inverse_of_H(low, 'minus')))))


def _saddle_thetas(problem, annulus, p):
    lam, mu = problem.lam, problem.mu(annulus.i)
    x_star = (-lam * (p + 1.0) / (2.0 * mu)) ** (1.0 / (p - 1.0))
    x1 = level_crossing(problem, annulus.i, annulus.c1).x_plus
    x2 = level_crossing(problem, annulus.i, annulus.c2).x_plus
    return x1 / x_star, x2 / x_star


def _monotone_angle(problem: ProblemSpec, annulus: Annulus, c: float) -> Tuple[bool, bool]:
    """(holds, empirical) for the monotone angle of the gap flow near the annulus."""
    if problem.h.kind == 'identity':
        return problem.lam > 0.0, False
    lc = level_crossing(problem, annulus.i, annulus.c1)
    reach = math.sqrt(2.0 * c / problem.lam)
    xs = np.linspace(max(lc.x_minus, -reach), min(lc.x_plus, reach), ANGLE_SAMPLES)
    ok = True
    for x in xs:
        w = annulus.c1 - float(problem.F(annulus.i, x))
        for side in ('plus', 'minus'):
            y = problem.h.h_inverse_of_H(max(w, 0.0), side)
            omega = y * float(problem.h.raw_h(y)) + problem.lam * x * x
            ok = ok and omega > 0.0
    return ok, True


def check_linear_window(problem: ProblemSpec, i: int, variant: str,
                        annuli: Tuple[Annulus, Annulus], varsigma: Optional[float] = None,
                        tol: Optional[float] = None, slack_factor: Optional[float] = None,
                        **params) -> WindowReport:
    """Evaluate a transit-time condition on gap i against its length.

    Params by variant: level-window takes d_hat and e_hat; level-window-winding
    adds xi and zeta; level-crossing takes c; equal-hump-positive takes xi;
    saddle-gap takes theta1, theta2 and p.
    """
    if variant not in WINDOW_VARIANTS:
        raise ValueError(f"unknown window variant '{variant}'")
    lam = problem.lam
    varsigma = problem.weight.varsigma(i) if varsigma is None else varsigma
    first, second = annuli
    levels = (first.levels, second.levels)
    margins: List[Tuple[str, float]] = []
    error = 0.0
    multiplier, empirical = 1, False

    def transit(kind, c=None):
        nonlocal error
        value, err = transit_linear(problem, kind, i, levels, c, tol, full_output=True)
        error += err
        return value

    if variant == 'through-y-axis':
        if lam > 0.0:
            raise SignViolation(lam, '<= 0')
        margins.append(("II->I", varsigma - transit('II->I')))
        margins.append(("IV->III", varsigma - transit('IV->III')))
    elif variant == 'through-x-axis':
        if not lam < 0.0:
            raise SignViolation(lam, '< 0')
        margins.append(("IV->I", varsigma - transit('IV->I')))
        margins.append(("II->III", varsigma - transit('II->III')))
    elif variant in ('level-window', 'level-window-winding'):
        if not lam > 0.0:
            raise SignViolation(lam, '> 0')
        low = min(first.c1, second.c1)
        d_hat = float(params.get('d_hat', low))
        e_hat = float(params.get('e_hat', low))
        xi = int(params.get('xi', 0)) if variant == 'level-window-winding' else 0
        zeta = int(params.get('zeta', 0)) if variant == 'level-window-winding' else 0
        if zeta > xi:
            raise ValueError(f"need zeta <= xi, got zeta={zeta}, xi={xi}")
        extra_e = xi * gap_period(problem, e_hat, tol) if xi else 0.0
        extra_d = zeta * gap_period(problem, d_hat, tol) if zeta else 0.0
        for a, b in (('II', 'I'), ('IV', 'III')):
            margins.append((f"outer {a}->{b}", varsigma - transit(f'c2:{a}->{b}', e_hat) - extra_e))
            margins.append((f"inner {a}->{b}", transit(f'c1:{a}->{b}', d_hat) + extra_d - varsigma))
        multiplier = xi - zeta + 1
    elif variant == 'level-crossing':
        if not lam > 0.0:
            raise SignViolation(lam, '> 0')
        c = float(params.get('c', min(first.c1, second.c1)))
        for a, b, across in (('II', 'I', 'III->I'), ('IV', 'III', 'I->III')):
            margins.append((f"outer {a}->{b}", varsigma - transit(f'c2:{a}->{b}', c)))
            margins.append((f"inner {a}->{b}", transit(f'c1-sqrt:{a}->{b}', c) - varsigma))
            margins.append((across, transit(across, c) - varsigma))
        holds, empirical = _monotone_angle(problem, first, c)
        if not holds:
            margins.append(("monotone angle", -1.0))
    elif variant == 'lambda0-gap':
        if lam != 0.0:
            raise SignViolation(lam, '= 0')
        margins.append(("gap bound", varsigma - lambda0_gap_bound(problem, first, second)))
    elif variant == 'equal-hump-positive':
        if not lam > 0.0:
            raise SignViolation(lam, '> 0')
        xi = int(params.get('xi', 0))
        c = min(first.c1, second.c1)
        turns = xi * gap_period(problem, c, tol)
        for a, b in (('II', 'I'), ('IV', 'III')):
            margins.append((f"outer {a}->{b}", varsigma - transit(f'c2:{a}->{b}', c) - turns))
            margins.append((f"inner {a}->{b}", transit(f'c1-sqrt:{a}->{b}', c) + turns - varsigma))
    else:
        if not lam < 0.0:
            raise SignViolation(lam, '< 0')
        p = float(params.get('p', problem.g.p))
        if 'theta1' in params and 'theta2' in params:
            theta1, theta2 = float(params['theta1']), float(params['theta2'])
        else:
            theta1, theta2 = _saddle_thetas(problem, first, p)
        margins.append(("saddle bound", varsigma - lambda_bounds(theta1, theta2, p, lam).lambda_star))

    status, violated, _ = _verdict(margins, _threshold(error, slack_factor))
    if status == 'indeterminate':
        logger.warning(f"window on gap {i} ({variant}) is indeterminate at '{violated}'")
    else:
        logger.info(f"window on gap {i} ({variant}, varsigma={varsigma}): {status}")
    return WindowReport(i=i, variant=variant, status=status, margins=tuple(margins), error=error,
                        multiplier=multiplier, empirical=empirical, violated=violated)


######################################################################

def enumerate_itineraries(m: int, lambda_sign: float, kappa0: str = 'I') -> List[Itinerary]:
    """All admissible itineraries of m moves starting at kappa0.

    For lambda >= 0 each move uses channel 'one'; for lambda < 0 both
    channels are open, giving 4^m channel paths.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if kappa0 not in ('I', 'III'):
        raise ValueError(f"itineraries start in I or III, got '{kappa0}'")
    channels = ('one', 'two') if lambda_sign < 0 else ('one',)
    steps = [(t, c) for t in ('horizontal', 'diagonal') for c in channels]
    result = []
    for moves in itertools.product(steps, repeat=m):
        kappas = [kappa0]
        for transition, _ in moves:
            kappas.append(kappas[-1] if transition == 'horizontal' else successor(kappas[-1], 2))
        result.append(Itinerary(kappas=tuple(kappas), moves=tuple(moves)))
    return result


def lower_bound(certificates: Sequence[Optional[TwistCertificate]], lambda_sign: float,
                boundary_mode: str = 'single',
                windows: Optional[Sequence[Optional[WindowReport]]] = None,
                kappa0: str = 'I') -> CountBound:
    """Guaranteed number of solutions for one boundary placement ('single')
    or for all four quadrant placements ('four-class')."""
    if boundary_mode not in ('single', 'four-class'):
        raise ValueError(f"unknown boundary mode '{boundary_mode}'")
    for k, cert in enumerate(certificates):
        if cert is None or not cert.satisfied:
            raise MissingCertificate(k, 'twist')
    m = len(certificates) - 1
    if m < 0:
        raise MissingCertificate(0, 'twist')
    multipliers = [1] * m
    if windows is not None:
        if len(windows) != m:
            raise MissingCertificate(len(windows), 'window')
        for k, report in enumerate(windows):
            if report is None or not report.satisfied:
                raise MissingCertificate(k, 'window')
            multipliers[k] = report.multiplier
    breakdown = []
    for itinerary in enumerate_itineraries(m, lambda_sign, kappa0):
        product = certificates[m].crossing_number
        for k in range(m):
            product *= certificates[k].crossing_number * multipliers[k]
        breakdown.append((itinerary, product))
    classes = 4 if boundary_mode == 'four-class' else 1
    total = classes * sum(count for _, count in breakdown)
    logger.info(f"lower bound for m={m}, lambda sign {np.sign(lambda_sign):+.0f}: {total}")
    return CountBound(total=total, breakdown=tuple(breakdown), classes=classes)


def four_class_bound(certificates: Sequence[TwistCertificate], lambda_sign: float,
                     windows: Optional[Sequence[WindowReport]] = None) -> int:
    return lower_bound(certificates, lambda_sign, 'four-class', windows).total


######################################################################

def equal_hump_threshold(beta: int, p: float) -> float:
    """Ratio e/d at which equal humps with alpha = 0 start (p > 1) or stop (p < 1)
    satisfying the twist condition."""
    return (2.0 * (2.0 * beta + 1.0)) ** (2.0 * (p + 1.0) / (p - 1.0))


def lambda_ratio(p: float, theta: float) -> float:
    """Smallest gap-to-hump length ratio for equal humps at lambda = 0."""
    b = special.beta(1.0 / (p + 1.0), 0.5)
    if p > 1.0:
        return 2.0 * (p + 1.0) * theta ** (1.0 / (p + 1.0)) / b
    return 2.0 * (p + 1.0) * theta ** -0.5 / b


def certificate_summary(cert) -> Dict[str, object]:
    """Plain dict of a certificate or window report for JSON output."""
    data = {k: getattr(cert, k) for k in cert.__dataclass_fields__}
    data['margins'] = {name: slack for name, slack in cert.margins}
    return data
