"""
Integration of the switched system with axis-crossing events.

The state carries the winding angle theta next to (x, y), so theta is
integrated together with the trajectory and never needs unwrapping.  Each
hump or gap is integrated separately and the integration restarts at every
breakpoint.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from . import conf
from .exceptions import (InvalidWindow, MapUndefined, NodalAtlasError, OriginCrossing,
                         TangentialZero)
from .model import ProblemSpec, angle_of_point

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-9
ORIGIN_GUARD = 1e-9
WINDOWS = ('open', 'closed', 'left-open')


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float

    def __iter__(self):
        return iter((self.x, self.y))

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Event:
    kind: str  # x-zero | y-zero | hump-switch | blow-up
    t: float
    point: PhasePoint
    direction: int


@dataclass
class Trajectory:
    """Samples at the solver steps, the events and the dense solutions."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    events: Tuple[Event, ...]
    segments: Tuple[Tuple[float, float, float], ...]
    touches: dict = field(default_factory=dict)
    blow_up: Optional[Event] = None
    origin_hit: bool = False
    dense: List[Tuple[float, float, object]] = field(default_factory=list, repr=False)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    @property
    def end(self) -> PhasePoint:
        return PhasePoint(float(self.x[-1]), float(self.y[-1]))

    @property
    def samples(self) -> List[Tuple[float, PhasePoint]]:
        return [(float(t), PhasePoint(float(x), float(y)))
                for t, x, y in zip(self.t, self.x, self.y)]

    @property
    def min_radius(self) -> float:
        return float(np.min(np.hypot(self.x, self.y)))

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.hypot(self.x, self.y))))

    def at(self, t: float) -> np.ndarray:
        """State (x, y, theta) at time t from the dense output."""
        for start, end, sol in self.dense:
            if start <= t <= end:
                return sol(t)
        raise InvalidWindow(t, t, self.t1)

    def events_of(self, kind: str) -> List[Event]:
        return [e for e in self.events if e.kind == kind]


def _as_point(z0: Union[PhasePoint, Sequence[float]]) -> PhasePoint:
    return z0 if isinstance(z0, PhasePoint) else PhasePoint(float(z0[0]), float(z0[1]))


def _windows(problem: ProblemSpec, t0: float, t1: float,
             mu: Optional[float]) -> List[Tuple[float, float, float]]:
    if not t0 < t1:
        raise InvalidWindow(t0, t1, problem.weight.L)
    if mu is not None:
        return [(t0, t1, float(mu))]
    length = problem.weight.L
    slack = 1e-12 * max(1.0, length)
    if t0 < -slack or t1 > length + slack:
        raise InvalidWindow(t0, t1, length)
    return [(max(a, t0), min(b, t1), height) for a, b, height in problem.weight.segments()
            if b > t0 and a < t1]


def _vector_field(problem: ProblemSpec, mu: float):
    h, g, lam = problem.h, problem.g, problem.lam
    lower, upper = h.lower, h.upper

    def fun(t, z):
        x, y = z[0], z[1]
        yc = min(max(y, lower), upper)
        dx = float(h.raw_h(yc))
        dy = -lam * x - mu * float(g.g(x))
        r2 = x * x + y * y
        dtheta = (y * dx - x * dy) / r2 if r2 > 0.0 else 0.0
        return [dx, dy, dtheta]

    return fun


def _terminal_events(problem: ProblemSpec, guard: float):
    h = problem.h
    events, names = [], []
    if math.isfinite(h.rho_plus):
        def top(t, z):
            return z[1] - h.upper
        top.terminal, top.direction = True, 1
        events.append(top)
        names.append('blow-up+')
    if math.isfinite(h.rho_minus):
        def bottom(t, z):
            return z[1] - h.lower
        bottom.terminal, bottom.direction = True, -1
        events.append(bottom)
        names.append('blow-up-')

    def origin(t, z):
        return z[0] * z[0] + z[1] * z[1] - guard * guard
    origin.terminal, origin.direction = True, -1
    events.append(origin)
    names.append('origin')
    return events, names


def _axis_events():
    def x_axis(t, z):
        return z[0]

    def y_axis(t, z):
        return z[1]
    return [x_axis, y_axis], ['x-zero', 'y-zero']


def integrate(problem: ProblemSpec, z0, t0: float, t1: float, mu: Optional[float] = None,
              rtol: Optional[float] = None, atol: Optional[float] = None,
              track_zeros: bool = True) -> Trajectory:
    """Integrate from z0 over [t0, t1].

    With `mu` given the autonomous system with constant weight mu is
    integrated over any window; otherwise the switched system over a window
    inside [0, L].  A blow-up (y entering the guard band of rho) ends the
    trajectory with a 'blow-up' event instead of raising.

    Args:
        problem: the problem instance
        z0: initial point
        t0: start time
        t1: end time
        mu: constant weight overriding the stepwise one
        rtol: relative tolerance (default ODE_RTOL)
        atol: absolute tolerance (default ODE_ATOL)
        track_zeros: locate axis crossings (disable for endpoint-only runs)

    Returns:
        Trajectory
    """
    rtol = conf.get('ODE_RTOL') if rtol is None else rtol
    atol = conf.get('ODE_ATOL') if atol is None else atol
    z0 = _as_point(z0)
    problem.h.check(z0.y)
    windows = _windows(problem, t0, t1, mu)
    guard = ORIGIN_GUARD * max(1.0, z0.radius)
    axis_events, axis_names = _axis_events() if track_zeros else ([], [])
    stop_events, stop_names = _terminal_events(problem, guard)
    names = axis_names + stop_names

    state = np.array([z0.x, z0.y, angle_of_point(z0.x, z0.y)])
    ts, xs, ys, thetas = [np.array([t0])], [np.array([z0.x])], [np.array([z0.y])], [state[2:3]]
    events: List[Event] = []
    dense = []
    blow_up, origin_hit = None, z0.radius == 0.0
    zero_tol = ZERO_TOL * max(1.0, z0.radius)

    def record_zero(kind, t, z, seg_mu):
        point = PhasePoint(float(z[0]), float(z[1]))
        if kind == 'x-zero':
            slope = float(problem.h.raw_h(min(max(point.y, problem.h.lower), problem.h.upper)))
        else:
            slope = -problem.lam * point.x - seg_mu * float(problem.g.g(point.x))
        for e in reversed(events):
            if e.kind == kind and abs(e.t - t) <= 1e-9 * max(1.0, abs(t)):
                return
        events.append(Event(kind, float(t), point, int(np.sign(slope))))

    if track_zeros:
        if abs(z0.x) <= zero_tol:
            record_zero('x-zero', t0, state, windows[0][2])
        if abs(z0.y) <= zero_tol:
            record_zero('y-zero', t0, state, windows[0][2])

    for k, (a, b, seg_mu) in enumerate(windows):
        if origin_hit:
            break
        if k > 0:
            events.append(Event('hump-switch', float(a), PhasePoint(float(state[0]), float(state[1])),
                                1 if seg_mu > 0.0 else -1))
        sol = solve_ivp(_vector_field(problem, seg_mu), (a, b), state, method='RK45',
                        rtol=rtol, atol=atol, dense_output=True,
                        events=axis_events + stop_events)
        if sol.status == -1:
            logger.error(f"integration failed on [{a}, {b}]: {sol.message}")
            raise NodalAtlasError(f"integration failed on [{a}, {b}]: {sol.message}")
        dense.append((float(sol.t[0]), float(sol.t[-1]), sol.sol))
        ts.append(sol.t[1:])
        xs.append(sol.y[0, 1:])
        ys.append(sol.y[1, 1:])
        thetas.append(sol.y[2, 1:])
        found = []
        for name, times, values in zip(names, sol.t_events, sol.y_events):
            for t_event, z_event in zip(times, values):
                found.append((float(t_event), name, z_event))
        for t_event, name, z_event in sorted(found, key=lambda item: item[0]):
            if name in ('x-zero', 'y-zero'):
                record_zero(name, t_event, z_event, seg_mu)
            elif name.startswith('blow-up'):
                blow_up = Event('blow-up', t_event, PhasePoint(float(z_event[0]), float(z_event[1])),
                                1 if name == 'blow-up+' else -1)
                events.append(blow_up)
                logger.debug(f"blow-up at t={t_event} near y={z_event[1]}")
            elif name == 'origin':
                origin_hit = True
        state = sol.y[:, -1].copy()
        if blow_up is not None or origin_hit:
            break

    t = np.concatenate(ts)
    x, y, theta = np.concatenate(xs), np.concatenate(ys), np.concatenate(thetas)
    if track_zeros and blow_up is None:
        end_tol = ZERO_TOL * max(1.0, float(np.max(np.hypot(x, y))))
        if abs(x[-1]) <= end_tol:
            record_zero('x-zero', t[-1], (x[-1], y[-1]), windows[-1][2])
        if abs(y[-1]) <= end_tol:
            record_zero('y-zero', t[-1], (x[-1], y[-1]), windows[-1][2])
    events.sort(key=lambda e: e.t)
    touches = _touches(t, x, y) if track_zeros else {}
    return Trajectory(t=t, x=x, y=y, theta=theta, events=tuple(events), segments=tuple(windows),
                      touches=touches, blow_up=blow_up, origin_hit=origin_hit, dense=dense)


def _touches(t, x, y) -> dict:
    """Sampled local minima of |x| or |y| close to zero without a sign change."""
    scale = max(1.0, float(np.max(np.hypot(x, y))))
    found = {'x': [], 'y': []}
    for name, values in (('x', x), ('y', y)):
        a = np.abs(values)
        for k in range(1, len(values) - 1):
            if (a[k] <= ZERO_TOL * scale and a[k] <= a[k - 1] and a[k] <= a[k + 1]
                    and values[k - 1] * values[k + 1] > 0.0 and values[k] * values[k - 1] > 0.0):
                found[name].append((float(t[k]), float(values[k])))
    return found


######################################################################

def poincare_phi(problem: ProblemSpec, i: int, z0, **kwargs) -> PhasePoint:
    """Time-tau_i map of the hump system."""
    w = problem.weight
    if not 0 <= i <= w.m:
        raise InvalidWindow(float(i), float(i), w.L)
    return _map_end(integrate(problem, z0, w.t(i), w.s(i), track_zeros=False, **kwargs))


def poincare_psi(problem: ProblemSpec, i: int, z0, **kwargs) -> PhasePoint:
    """Time-varsigma_i map of the gap system."""
    w = problem.weight
    if not 0 <= i < w.m:
        raise InvalidWindow(float(i), float(i), w.L)
    return _map_end(integrate(problem, z0, w.s(i), w.t(i + 1), track_zeros=False, **kwargs))


def poincare_full(problem: ProblemSpec, z0, **kwargs) -> PhasePoint:
    return _map_end(integrate(problem, z0, 0.0, problem.weight.L, track_zeros=False, **kwargs))


def _map_end(trajectory: Trajectory) -> PhasePoint:
    if trajectory.blow_up is not None:
        e = trajectory.blow_up
        logger.error(f"Poincare map undefined: blow-up at t={e.t}")
        raise MapUndefined(e.t, (e.point.x, e.point.y))
    return trajectory.end


######################################################################

def winding(trajectory: Trajectory) -> float:
    """Total clockwise angle swept by the trajectory."""
    if trajectory.origin_hit or trajectory.min_radius <= ORIGIN_GUARD * trajectory.scale:
        k = int(np.argmin(np.hypot(trajectory.x, trajectory.y)))
        raise OriginCrossing(float(trajectory.t[k]), trajectory.min_radius)
    return float(trajectory.theta[-1] - trajectory.theta[0])


def count_zeros(trajectory: Trajectory, component: str, window: str = 'open',
                interval: Optional[Tuple[float, float]] = None) -> int:
    """Number of sign changes of x or y inside a time window.

    `window` is 'open' (a, b), 'closed' [a, b] or 'left-open' (a, b];
    endpoint zeros count only where the window is closed.
    """
    if window not in WINDOWS:
        raise ValueError(f"unknown window '{window}'")
    a, b = interval if interval is not None else (trajectory.t0, trajectory.t1)
    tol = 1e-9 * max(1.0, abs(b))
    for t, value in trajectory.touches.get(component, ()):
        if a - tol <= t <= b + tol:
            raise TangentialZero(component, t, abs(value))
    count = 0
    for e in trajectory.events_of(f'{component}-zero'):
        at_a, at_b = abs(e.t - a) <= tol, abs(e.t - b) <= tol
        if at_a:
            count += window == 'closed'
        elif at_b:
            count += window in ('closed', 'left-open')
        elif a < e.t < b:
            count += 1
    return count


######################################################################

def hamiltonian_drift(problem: ProblemSpec, trajectory: Trajectory) -> float:
    """Largest relative drift of the conserved quantity over any hump or gap."""
    drift = 0.0
    for a, b, seg_mu in trajectory.segments:
        mask = (trajectory.t >= a) & (trajectory.t <= b)
        if np.count_nonzero(mask) < 2:
            continue
        x, y = trajectory.x[mask], trajectory.y[mask]
        values = problem.h.raw_H(y) + 0.5 * problem.lam * x * x + seg_mu * problem.g.G(x)
        reference = max(abs(float(values[0])), 1e-12)
        drift = max(drift, float(np.max(np.abs(values - values[0]))) / reference)
    return drift


def reversibility_error(problem: ProblemSpec, z0, t0: float, t1: float,
                        mu: Optional[float] = None, rtol: Optional[float] = None,
                        atol: Optional[float] = None) -> float:
    """Distance to z0 after integrating forward to t1 and back to t0."""
    rtol = conf.get('ODE_RTOL') if rtol is None else rtol
    atol = conf.get('ODE_ATOL') if atol is None else atol
    forward = integrate(problem, z0, t0, t1, mu=mu, rtol=rtol, atol=atol, track_zeros=False)
    if forward.blow_up is not None:
        raise MapUndefined(forward.blow_up.t, tuple(forward.blow_up.point))
    state = np.array([forward.x[-1], forward.y[-1], forward.theta[-1]])
    for a, b, seg_mu in reversed(forward.segments):
        sol = solve_ivp(_vector_field(problem, seg_mu), (b, a), state, method='RK45',
                        rtol=rtol, atol=atol)
        state = sol.y[:, -1]
    z0 = _as_point(z0)
    return math.hypot(state[0] - z0.x, state[1] - z0.y)


def first_return_time(problem: ProblemSpec, i: int, c: float, rtol: Optional[float] = None,
                      atol: Optional[float] = None, horizon: float = 1.0) -> float:
    """Period of the hump-i orbit at level c measured with the ODE solver.

    Starts at (x_+(c), 0) and returns the first later time at which y
    crosses zero downward with x > 0.
    """
    from .quadrature import solve_level_abscissa

    mu = problem.mu(i)
    state = (solve_level_abscissa(problem, i, c, 'plus'), 0.0)
    t_start, elapsed = 0.0, 0.0
    for _ in range(60):
        traj = integrate(problem, state, t_start, t_start + horizon, mu=mu, rtol=rtol, atol=atol)
        for e in traj.events_of('y-zero'):
            if e.t > 1e-9 and e.direction < 0 and e.point.x > 0.0:
                return e.t
        elapsed = traj.t1
        state = traj.end
        t_start, horizon = elapsed, 2.0 * horizon
    raise NodalAtlasError(f"no return to the positive x-axis for hump {i} at c={c}")
