"""
Shooting along the boundary arc r_0.

The arc is tabulated by the end angle of the full Poincare map, every
crossing of a target angle (or sign change of the distance to r_L) is
refined with Brent's method, and each solution is classified by its zeros
per hump and gap.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import conf
from .certify import Itinerary, TwistCertificate
from .exceptions import NodalAtlasError
from .flow import PhasePoint, Trajectory, count_zeros, integrate
from .model import (BRENT_RTOL, BoundaryArc, HomeoSpec, NonlinSpec, ProblemSpec, StepWeight,
                    angle_of_point, predecessor, quadrant_of_point,
                    successor)

logger = logging.getLogger(__name__)

SCAN_RTOL = 1e-8
SCAN_ATOL = 1e-10
DEDUPE_TOL = 1e-9
MAX_DOUBLINGS = 3
RESIDUAL_TOL = 1e-8
VERIFY_TOL = 1e-7
TWO_PI = 2.0 * math.pi


class ArcSample(NamedTuple):
    param: float
    point: Tuple[float, float]
    theta: float
    end: Tuple[float, float]
    status: str  # ok | blow-up | escaped | origin | failed
    note: str = ''

    @property
    def ok(self) -> bool:
        return self.status == 'ok'


@dataclass(frozen=True)
class NodalSignature:
    labels: Tuple[str, ...]
    zeros_x: Tuple[int, ...]
    zeros_y: Tuple[int, ...]
    j_indices: Tuple[Optional[int], ...]
    consistent: bool
    notes: Tuple[str, ...] = ()

    @property
    def interior_x_zeros(self) -> int:
        return sum(self.zeros_x)


@dataclass
class NodalSolution:
    arc_param: float
    z0: PhasePoint
    itinerary: Itinerary
    zeros_x: Tuple[int, ...]
    zeros_y: Tuple[int, ...]
    residual: float
    trajectory: Trajectory
    signature: Optional[NodalSignature] = None

    @property
    def scale(self) -> float:
        """Size of the terminal point, at least 1."""
        return max(1.0, math.hypot(*self.trajectory.end))

    @property
    def within_tolerance(self) -> bool:
        return self.residual <= RESIDUAL_TOL * self.scale

    @property
    def M_plus(self) -> float:
        return float(np.max(np.abs(self.trajectory.x)))

    @property
    def is_positive(self) -> bool:
        return sum(self.zeros_x) == 0 and float(np.min(self.trajectory.x[1:-1])) > 0.0


######################################################################

def _radial_point(problem: ProblemSpec, arc: BoundaryArc, c: float) -> Tuple[float, float]:
    """Point of the ray where the first-hump Hamiltonian equals c."""
    phi = arc.direction
    sx, cy = math.sin(phi), math.cos(phi)
    if abs(sx) < 1e-15:
        y = problem.h.h_inverse_of_H(c, 'plus' if cy > 0.0 else 'minus')
        return 0.0, y

    def f(r):
        return float(problem.h.raw_H(r * cy) + problem.F(0, r * sx)) - c

    edge = math.inf
    if cy > 0.0:
        edge = problem.h.upper / cy
    elif cy < 0.0:
        edge = problem.h.lower / cy
    a, b = 0.0, min(1.0, 0.5 * edge)
    while f(b) < 0.0:
        if b >= edge * (1.0 - 1e-12) or b > 1e12:
            raise NodalAtlasError(f"ray at angle {phi} never reaches level {c}")
        a, b = b, min(2.0 * b, 0.5 * (b + edge))
    r = optimize.brentq(f, a, b, xtol=1e-14, rtol=BRENT_RTOL)
    return r * sx, r * cy


def arc_point(problem: ProblemSpec, arc: BoundaryArc, s: float, by_energy: bool) -> Tuple[float, float]:
    """Point on r_0 for parameter s: energy level, radius or arclength fraction."""
    if not arc.is_radial:
        return arc.point_at(s)
    if by_energy:
        return _radial_point(problem, arc, s)
    return arc.point_at_radius(s)


def _shoot(problem: ProblemSpec, z0, rtol: float, atol: float,
           energy_cap: Optional[float]) -> Tuple[float, Tuple[float, float], str, str]:
    """Unwrapped end angle and end point of the full map, interval by interval."""
    z = PhasePoint(float(z0[0]), float(z0[1]))
    theta = angle_of_point(z.x, z.y)
    for kind, idx, a, b in problem.weight.intervals():
        if energy_cap is not None and kind == 'hump' and idx > 0:
            level = float(problem.hamiltonian(idx, z.x, z.y))
            if level > energy_cap:
                return theta, (z.x, z.y), 'escaped', f"H_{idx}={level:.6g} at t={a}"
        traj = integrate(problem, z, a, b, rtol=rtol, atol=atol, track_zeros=False)
        if traj.blow_up is not None:
            return theta, (z.x, z.y), 'blow-up', f"t={traj.blow_up.t}"
        if traj.origin_hit:
            return theta, (z.x, z.y), 'origin', f"near t={traj.t1}"
        theta += float(traj.theta[-1] - traj.theta[0])
        z = traj.end
    return theta, (z.x, z.y), 'ok', ''


def _scan_chunk(args) -> List[ArcSample]:
    problem, arc, params, by_energy, rtol, atol, energy_cap = args
    out = []
    for s in params:
        try:
            point = arc_point(problem, arc, s, by_energy)
            theta, end, status, note = _shoot(problem, point, rtol, atol, energy_cap)
        except NodalAtlasError as e:
            point, theta, end, status, note = (math.nan, math.nan), math.nan, (math.nan, math.nan), 'failed', str(e)
        if status != 'ok':
            logger.warning(f"arc sample s={s!r} excluded ({status}): {note}")
        out.append(ArcSample(float(s), point, theta, end, status, note))
    return out


def _param_range(arc: BoundaryArc, c_range, by_energy: bool) -> Tuple[float, float]:
    if not arc.is_radial:
        return 0.0, 1.0
    if by_energy:
        return float(c_range[0]), float(c_range[1])
    if arc.span is None:
        raise NodalAtlasError(f"radial arc '{arc.kind}' needs a span or an energy range")
    return arc.span


def scan_arc(problem: ProblemSpec, r0: Optional[BoundaryArc] = None, n_samples: Optional[int] = None,
             c_range: Optional[Tuple[float, float]] = None, threads: int = 1, seed: int = 0,
             energy_cap: Optional[float] = None, rtol: float = SCAN_RTOL,
             atol: float = SCAN_ATOL) -> List[ArcSample]:
    """Tabulate the end angle and end point of the full map along r_0.

    Radial arcs are parametrized by the first-hump energy when `c_range` is
    given and by the radius over `r0.span` otherwise; a param-curve by its
    arclength fraction.  Samples that blow up, reach the origin or exceed
    `energy_cap` at a hump entrance are kept with their status but are not
    used for bracketing.

    Args:
        problem: the problem instance
        r0: starting arc (defaults to problem.r0)
        n_samples: number of samples (defaults to SCAN_SAMPLES)
        c_range: (c1, c2) energy window for radial arcs
        threads: worker processes, serial when <= 1
        seed: jitter seed, 0 for an even grid
        energy_cap: largest Hamiltonian allowed at a hump entrance

    Returns:
        list of ArcSample in parameter order
    """
    r0 = problem.r0 if r0 is None else r0
    n_samples = conf.get('SCAN_SAMPLES') if n_samples is None else int(n_samples)
    by_energy = c_range is not None
    if by_energy and not r0.is_radial:
        raise NodalAtlasError("energy parametrization needs a radial arc")
    lo, hi = _param_range(r0, c_range, by_energy)
    if n_samples < 2 or lo == hi:
        params = np.array([lo])
    else:
        params = np.linspace(lo, hi, n_samples)
        if seed:
            rng = np.random.default_rng(seed)
            step = (hi - lo) / (n_samples - 1)
            params[1:-1] += rng.uniform(-0.25, 0.25, n_samples - 2) * step

    if threads <= 1:
        samples = _scan_chunk((problem, r0, params, by_energy, rtol, atol, energy_cap))
    else:
        chunks = np.array_split(params, threads * 4)
        jobs = [(problem, r0, chunk, by_energy, rtol, atol, energy_cap) for chunk in chunks if len(chunk)]
        with ProcessPoolExecutor(max_workers=threads) as executor:
            samples = [s for part in executor.map(_scan_chunk, jobs) for s in part]
    bad = sum(1 for s in samples if not s.ok)
    logger.info(f"scanned {len(samples)} arc samples on '{r0.kind}', {bad} excluded")
    return samples


######################################################################

def _target_residual(rL: BoundaryArc, theta: float, end) -> float:
    if rL.is_radial:
        return theta - rL.direction
    return rL.signed_distance(*end)


def _brackets(samples: Sequence[ArcSample], rL: BoundaryArc, theta0: float,
              max_winding: Optional[float]) -> List[Tuple[float, float, float]]:
    """(s_a, s_b, target) for every crossing between consecutive valid samples."""
    found = []
    for a, b in zip(samples, samples[1:]):
        if not (a.ok and b.ok):
            continue
        if rL.is_radial:
            ra, rb = a.theta - rL.direction, b.theta - rL.direction
            lo, hi = sorted((ra, rb))
            for k in range(math.ceil(lo / TWO_PI), math.floor(hi / TWO_PI) + 1):
                target = rL.direction + TWO_PI * k
                if max_winding is not None and abs(target - theta0) > max_winding:
                    continue
                if (ra - TWO_PI * k) * (rb - TWO_PI * k) < 0.0:
                    found.append((a.param, b.param, target))
                elif ra == TWO_PI * k:
                    found.append((a.param, a.param, target))
        else:
            da, db = rL.signed_distance(*a.end), rL.signed_distance(*b.end)
            ref = angle_of_point(*rL.samples[0])
            turn_a = math.floor((a.theta - ref) / TWO_PI)
            turn_b = math.floor((b.theta - ref) / TWO_PI)
            if da * db < 0.0 and turn_a == turn_b:
                if max_winding is None or abs(a.theta - theta0) <= max_winding:
                    found.append((a.param, b.param, ref + TWO_PI * turn_a))
    return found


def _refine(problem: ProblemSpec, r0: BoundaryArc, rL: BoundaryArc, bracket, by_energy: bool,
            span: float, rtol: float, atol: float) -> Optional[float]:
    s_a, s_b, target = bracket
    if s_a == s_b:
        return s_a

    def residual(s):
        theta, end, status, note = _shoot(problem, arc_point(problem, r0, s, by_energy), rtol, atol, None)
        if status != 'ok':
            raise NodalAtlasError(f"refinement sample s={s!r} failed ({status}): {note}")
        if rL.is_radial:
            return theta - target
        return rL.signed_distance(*end)

    try:
        return optimize.brentq(residual, s_a, s_b, xtol=1e-12 * max(span, 1e-300), rtol=BRENT_RTOL)
    except (NodalAtlasError, ValueError) as e:
        logger.warning(f"bracket ({s_a!r}, {s_b!r}) dropped: {e}")
        return None


def _dedupe(points: Sequence[Tuple[float, Tuple[float, float]]]) -> List[Tuple[float, Tuple[float, float]]]:
    kept = []
    for s, point in sorted(points, key=lambda item: item[0]):
        if kept:
            px, py = kept[-1][1]
            if math.hypot(point[0] - px, point[1] - py) <= DEDUPE_TOL * max(1.0, math.hypot(*point)):
                continue
        kept.append((s, point))
    return kept


def find_solutions(problem: ProblemSpec, r0: Optional[BoundaryArc] = None,
                   rL: Optional[BoundaryArc] = None, max_winding: Optional[float] = None,
                   n_samples: Optional[int] = None, c_range: Optional[Tuple[float, float]] = None,
                   threads: int = 1, seed: int = 0, energy_cap: Optional[float] = None,
                   stable_rounds: int = 2, max_doublings: int = MAX_DOUBLINGS,
                   rtol: Optional[float] = None, atol: Optional[float] = None,
                   certificates: Optional[Sequence[TwistCertificate]] = None) -> List[NodalSolution]:
    """All solutions from r_0 to r_L that the arc scan can isolate.

    The scan resolution is doubled until the number of brackets is unchanged
    `stable_rounds` times in a row (or `max_doublings` is reached).  An empty
    list is a valid result.
    """
    r0 = problem.r0 if r0 is None else r0
    rL = problem.rL if rL is None else rL
    n = conf.get('SCAN_SAMPLES') if n_samples is None else int(n_samples)
    by_energy = c_range is not None
    lo, hi = _param_range(r0, c_range, by_energy)
    span = abs(hi - lo)
    theta0 = angle_of_point(*arc_point(problem, r0, lo, by_energy))

    brackets, previous, stable = [], None, 0
    for _ in range(max_doublings + 1):
        samples = scan_arc(problem, r0, n, c_range, threads, seed, energy_cap)
        brackets = _brackets(samples, rL, theta0, max_winding)
        logger.info(f"{len(brackets)} brackets at {n} samples")
        if previous is not None and len(brackets) == previous:
            stable += 1
            if stable >= stable_rounds:
                break
        else:
            stable = 0
        previous = len(brackets)
        if n < 2:
            break
        n *= 2

    roots = []
    for bracket in brackets:
        s = _refine(problem, r0, rL, bracket, by_energy, span, SCAN_RTOL * 1e-2, SCAN_ATOL * 1e-2)
        if s is not None:
            roots.append((s, arc_point(problem, r0, s, by_energy)))

    solutions = []
    for s, point in _dedupe(roots):
        try:
            solution = build_solution(problem, s, point, rL, rtol, atol)
        except NodalAtlasError as e:
            logger.warning(f"solution at s={s!r} discarded: {e}")
            continue
        if solution is None:
            continue
        if not solution.within_tolerance:
            logger.warning(f"solution at s={s!r} discarded: terminal residual {solution.residual:.3g} "
                           f"exceeds {RESIDUAL_TOL:g} x {solution.scale:.3g}")
            continue
        solution.signature = classify_nodal(solution, problem, certificates)
        solutions.append(solution)
    logger.info(f"found {len(solutions)} solutions from '{r0.kind}' to '{rL.kind}'")
    return solutions


######################################################################

def _itinerary(problem: ProblemSpec, trajectory: Trajectory) -> Itinerary:
    w = problem.weight
    kappas, moves = [], []
    for i in range(w.m + 1):
        x, y, _ = trajectory.at(w.t(i))
        kappas.append(quadrant_of_point(float(x), float(y)))
    for i in range(w.m):
        x, y, _ = trajectory.at(w.s(i))
        exit_q = quadrant_of_point(float(x), float(y))
        kappa, nxt = kappas[i], kappas[i + 1]
        transition = ('horizontal' if nxt == kappa else
                      'diagonal' if nxt == successor(kappa, 2) else 'adjacent')
        channel = 'other'
        if transition != 'adjacent':
            one = predecessor(kappa) if transition == 'horizontal' else successor(kappa)
            two = successor(kappa) if transition == 'horizontal' else predecessor(kappa)
            channel = 'one' if exit_q == one else 'two' if exit_q == two else 'other'
        moves.append((transition, channel))
    return Itinerary(kappas=tuple(kappas), moves=tuple(moves))


def _windows_of(problem: ProblemSpec):
    """(label, interval, x window, y window) in time order."""
    out = []
    for kind, idx, a, b in problem.weight.intervals():
        if kind == 'hump':
            out.append((f"hump{idx}", (a, b), 'open', 'closed'))
        else:
            out.append((f"gap{idx}", (a, b), 'left-open', 'left-open'))
    return out


def build_solution(problem: ProblemSpec, s: float, point, rL: Optional[BoundaryArc] = None,
                   rtol: Optional[float] = None, atol: Optional[float] = None) -> Optional[NodalSolution]:
    """Integrate from `point` with full zero tracking and count zeros per interval."""
    rL = problem.rL if rL is None else rL
    traj = integrate(problem, point, 0.0, problem.weight.L, rtol=rtol, atol=atol)
    if traj.blow_up is not None:
        logger.warning(f"solution candidate at s={s!r} blows up at t={traj.blow_up.t}")
        return None
    zeros_x, zeros_y = [], []
    for _, interval, wx, wy in _windows_of(problem):
        zeros_x.append(count_zeros(traj, 'x', wx, interval))
        zeros_y.append(count_zeros(traj, 'y', wy, interval))
    residual = abs(rL.signed_distance(*traj.end))
    return NodalSolution(arc_param=float(s), z0=PhasePoint(float(point[0]), float(point[1])),
                         itinerary=_itinerary(problem, traj), zeros_x=tuple(zeros_x),
                         zeros_y=tuple(zeros_y), residual=residual, trajectory=traj)


def _axis_crossings(theta_a: float, theta_b: float, offset: float, window: str) -> int:
    """Net number of angles offset + k*pi passed between theta_a and theta_b."""
    u, v = (theta_a - offset) / math.pi, (theta_b - offset) / math.pi
    eps = 1e-9 * max(1.0, abs(u), abs(v))
    lo, hi = min(u, v), max(u, v)
    count = max(0, math.ceil(hi - eps) - math.floor(lo + eps) - 1)
    on_a = abs(u - round(u)) <= eps
    on_b = abs(v - round(v)) <= eps
    if hi - lo > eps:
        count += on_a and window == 'closed'
        count += on_b and window != 'open'
    elif on_a:
        count += window != 'open'
    return count


def classify_nodal(solution: NodalSolution, problem: ProblemSpec,
                   certificates: Optional[Sequence[TwistCertificate]] = None) -> NodalSignature:
    """Nodal signature of a solution and its agreement with the predicted pattern.

    Every interval must have zero counts with the parity of the net angle
    swept across the axes.  When the itinerary is admissible, hump i ending
    in the predecessor of its entrance quadrant must carry 2(alpha_i + j) - 1
    x-zeros and one ending in the successor 2(alpha_i + j); gaps passing
    over the y-axis carry an odd number of x-zeros (exactly one for
    lambda <= 0) and gaps through the x-axis none.
    """
    traj = solution.trajectory
    w = problem.weight
    notes = []
    consistent = True
    labels = []
    for (label, (a, b), wx, wy), nx, ny in zip(_windows_of(problem), solution.zeros_x, solution.zeros_y):
        labels.append(label)
        ta, tb = float(traj.at(a)[2]), float(traj.at(b)[2])
        for comp, count, offset, window in (('x', nx, 0.0, wx), ('y', ny, 0.5 * math.pi, wy)):
            net = _axis_crossings(ta, tb, offset, window)
            if count < net or (count - net) % 2:
                consistent = False
                notes.append(f"{label}: {count} {comp}-zeros against a net angle of {net} crossings")

    itinerary = solution.itinerary
    admissible = (all(k in ('I', 'III') for k in itinerary.kappas)
                  and all(c in ('one', 'two') for _, c in itinerary.moves))
    j_indices: List[Optional[int]] = [None] * (w.m + 1)
    if admissible:
        for i in range(w.m + 1):
            alpha = certificates[i].alpha if certificates else 0
            nx = solution.zeros_x[2 * i]
            if i < w.m:
                to_predecessor = itinerary.exit_quadrant(i) == predecessor(itinerary.kappas[i])
            else:
                base = 0.0 if itinerary.kappas[i] == 'I' else math.pi
                rel = (float(traj.theta[-1]) - base) % TWO_PI
                to_predecessor = rel >= 1.5 * math.pi or rel <= 1e-9
            if to_predecessor != (nx % 2 == 1):
                consistent = False
                notes.append(f"hump{i}: {nx} x-zeros do not match its exit quadrant")
                continue
            j = (nx + 1) // 2 - alpha if nx % 2 else nx // 2 - alpha
            j_indices[i] = j
            if certificates and not 1 <= j <= certificates[i].crossing_number:
                consistent = False
                notes.append(f"hump{i}: j={j} outside 1..{certificates[i].crossing_number}")
        for i, (_, channel) in enumerate(itinerary.moves):
            nx, ny = solution.zeros_x[2 * i + 1], solution.zeros_y[2 * i + 1]
            if channel == 'one':
                ok = nx % 2 == 1 and ny == nx - 1 and (problem.lam > 0.0 or nx == 1)
            else:
                ok = nx == 0 and ny == 1
            if not ok:
                consistent = False
                notes.append(f"gap{i}: ({nx}, {ny}) zeros do not fit channel '{channel}'")
    return NodalSignature(labels=tuple(labels), zeros_x=tuple(solution.zeros_x),
                          zeros_y=tuple(solution.zeros_y), j_indices=tuple(j_indices),
                          consistent=consistent, notes=tuple(notes))


######################################################################

def verify_solution(problem: ProblemSpec, solution: NodalSolution,
                    rL: Optional[BoundaryArc] = None) -> Tuple[float, bool]:
    """Residual after re-integrating with halved tolerances, and whether it stays
    within VERIFY_TOL x scale with unchanged zero counts."""
    rtol = 0.5 * conf.get('ODE_RTOL')
    atol = 0.5 * conf.get('ODE_ATOL')
    again = build_solution(problem, solution.arc_param, tuple(solution.z0), rL, rtol, atol)
    if again is None:
        return math.inf, False
    same = again.zeros_x == solution.zeros_x and again.zeros_y == solution.zeros_y
    return again.residual, same and again.residual <= VERIFY_TOL * again.scale


def mirror_solution(problem: ProblemSpec, solution: NodalSolution) -> NodalSolution:
    """The solution through -z0, which exists when h and g are odd."""
    if not problem.is_odd():
        raise NodalAtlasError("mirror solutions need odd h and g")
    point = (-solution.z0.x, -solution.z0.y)
    mirrored = build_solution(problem, solution.arc_param, point)
    if mirrored is None:
        raise NodalAtlasError(f"mirror of the solution at s={solution.arc_param!r} blows up")
    mirrored.signature = classify_nodal(mirrored, problem)
    return mirrored


def moore_nehari_scan(alpha_grid: Sequence[float], y_max: float, n_samples: int = 512,
                      p: float = 3.0, threads: int = 1) -> List[Tuple[float, int, List[NodalSolution]]]:
    """Positive Dirichlet solutions for a = 1 on [0,1] and [alpha, alpha+1], 0 between.

    Returns (alpha, number of positive solutions, solutions) for every alpha.
    """
    results = []
    for alpha in alpha_grid:
        if not alpha > 1.0:
            raise ValueError(f"the second hump must start after t=1, got alpha={alpha}")
        problem = ProblemSpec(
            h=HomeoSpec.build('identity'), g=NonlinSpec('power-p', p), lam=0.0,
            weight=StepWeight((0.0, 1.0, float(alpha), float(alpha) + 1.0), (1.0, 1.0)),
            r0=BoundaryArc('positive-y-axis', span=(1e-6 * y_max, y_max)),
            rL=BoundaryArc('negative-y-axis'))
        solutions = find_solutions(problem, max_winding=math.pi, n_samples=n_samples,
                                   threads=threads, stable_rounds=1, max_doublings=1)
        positive = [s for s in solutions if s.is_positive]
        logger.info(f"alpha={alpha}: {len(positive)} positive solutions")
        results.append((float(alpha), len(positive), positive))
    return results


def solution_row(k: int, solution: NodalSolution) -> Dict[str, object]:
    return {
        'solution_id': k,
        'arc_param': solution.arc_param,
        'x0': solution.z0.x,
        'y0': solution.z0.y,
        'itinerary': solution.itinerary.label(),
        'zeros_x_per_interval': ';'.join(str(v) for v in solution.zeros_x),
        'zeros_y_per_interval': ';'.join(str(v) for v in solution.zeros_y),
        'residual': solution.residual,
    }
