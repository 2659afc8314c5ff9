"""
Problem description for the switched planar system

    x' = h(y),   y' = -lambda*x - a(t)*g(x)

with a stepwise weight a(t).  This module holds the homeomorphism h, the
nonlinearity g, the weight, the boundary arcs and the potentials and
Hamiltonians built from them.  Every value is a frozen dataclass so that it
can be hashed for memo caches and pickled for worker processes.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from .exceptions import DomainViolation, NoBracket, NodalAtlasError

logger = logging.getLogger(__name__)

HOMEO_KINDS = ('identity', 'power-q', 'minkowski-inverse', 'relativistic-inverse',
               'rational-cubic', 'log-barrier')
NONLIN_KINDS = ('power-p', 'exp-minus-one')
ARC_KINDS = ('positive-y-axis', 'negative-y-axis', 'positive-x-axis', 'negative-x-axis',
             'ray', 'param-curve')

# Quadrants listed clockwise starting at the positive y-axis, so that the
# successor of a quadrant is the next entry.
QUADRANTS = ('I', 'IV', 'III', 'II')

VALIDATION_GRID = 1024
DOMAIN_MARGIN = 1e-9
# smallest relative tolerance brentq accepts
BRENT_RTOL = 4.0 * np.finfo(float).eps

AXIS_ANGLES = {
    'positive-y-axis': 0.0,
    'positive-x-axis': 0.5 * math.pi,
    'negative-y-axis': math.pi,
    'negative-x-axis': 1.5 * math.pi,
}


def successor(quadrant: str, steps: int = 1) -> str:
    """Quadrant reached after `steps` clockwise quarter turns (kappa + steps)."""
    return QUADRANTS[(QUADRANTS.index(quadrant) + steps) % 4]


def predecessor(quadrant: str) -> str:
    return successor(quadrant, -1)


def quadrant_of_angle(theta: float) -> str:
    """Quadrant label of a clockwise angle measured from the positive y-axis.

    Each quadrant is the half-open range [k*pi/2, (k+1)*pi/2).
    """
    k = int(math.floor((theta % (2.0 * math.pi)) / (0.5 * math.pi))) % 4
    return QUADRANTS[k]


def angle_of_point(x: float, y: float) -> float:
    """Clockwise angle of (x, y) from the positive y-axis, in [0, 2*pi)."""
    theta = math.atan2(x, y)
    return theta + 2.0 * math.pi if theta < 0.0 else theta


def quadrant_of_point(x: float, y: float) -> str:
    return quadrant_of_angle(angle_of_point(x, y))


######################################################################

@dataclass(frozen=True)
class HomeoSpec:
    """The increasing homeomorphism h: (rho_minus, rho_plus) -> R.

    `params` is a tuple of (name, value) pairs so the value stays hashable;
    power-q reads `q`.  log-barrier uses rho_plus as its barrier.
    """

    kind: str = 'identity'
    params: Tuple[Tuple[str, float], ...] = ()
    rho_minus: float = -math.inf
    rho_plus: float = math.inf

    def __post_init__(self):
        if self.kind not in HOMEO_KINDS:
            raise NodalAtlasError(f"unknown h kind '{self.kind}'")
        if not self.rho_minus < 0.0 < self.rho_plus:
            raise DomainViolation(0.0, self.rho_minus, self.rho_plus, what='origin')
        if self.kind == 'power-q' and not self.param('q', 1.0) > 0.0:
            raise NodalAtlasError(f"power-q needs q > 0, got {self.param('q')!r}")
        if self.kind == 'minkowski-inverse' and (self.rho_minus < -1.0 or self.rho_plus > 1.0):
            raise DomainViolation(self.rho_plus, -1.0, 1.0, what='rho')
        if self.kind == 'log-barrier' and not math.isfinite(self.rho_plus):
            raise DomainViolation(self.rho_plus, 0.0, math.inf, what='rho_plus')
        self._validate_monotone()

    @classmethod
    def build(cls, kind: str, **params) -> 'HomeoSpec':
        """Construct a spec, filling in the natural domain of the kind."""
        rho_minus = params.pop('rho_minus', None)
        rho_plus = params.pop('rho_plus', None)
        if kind == 'minkowski-inverse':
            rho_minus = -1.0 if rho_minus is None else rho_minus
            rho_plus = 1.0 if rho_plus is None else rho_plus
        if kind == 'log-barrier' and rho_plus is None:
            rho_plus = float(params.pop('rho', 4.0))
        return cls(kind=kind,
                   params=tuple(sorted((k, float(v)) for k, v in params.items())),
                   rho_minus=-math.inf if rho_minus is None else float(rho_minus),
                   rho_plus=math.inf if rho_plus is None else float(rho_plus))

    def param(self, name: str, default: Optional[float] = None) -> Optional[float]:
        return dict(self.params).get(name, default)

    @property
    def margin(self) -> float:
        width = self.rho_plus - self.rho_minus
        return DOMAIN_MARGIN * (width if math.isfinite(width) else 1.0)

    @property
    def lower(self) -> float:
        return self.rho_minus + self.margin

    @property
    def upper(self) -> float:
        return self.rho_plus - self.margin

    def is_odd(self) -> bool:
        return self.kind != 'log-barrier' and self.rho_minus == -self.rho_plus

    def check(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= self.lower) or np.any(y >= self.upper) or np.any(np.isnan(y)):
            bad = float(y) if y.ndim == 0 else float(y[(y <= self.lower) | (y >= self.upper)][0])
            raise DomainViolation(bad, self.rho_minus, self.rho_plus)

    def raw_h(self, y):
        """h without the domain guard."""
        kind = self.kind
        if kind == 'identity':
            return y * 1.0
        if kind == 'power-q':
            return np.sign(y) * np.abs(y) ** self.param('q')
        if kind == 'minkowski-inverse':
            return y / np.sqrt((1.0 - y) * (1.0 + y))
        if kind == 'relativistic-inverse':
            return y / np.sqrt(1.0 + y * y)
        if kind == 'rational-cubic':
            return y ** 3 / (1.0 + y * y)
        return -np.log1p(-y / self.rho_plus)

    def h(self, y):
        self.check(y)
        return self.raw_h(y)

    def H(self, y):
        """Primitive of h vanishing at 0 (closed form for every built-in kind)."""
        self.check(y)
        return self.raw_H(y)

    def raw_H(self, y):
        kind = self.kind
        if kind == 'identity':
            return 0.5 * y * y
        if kind == 'power-q':
            q = self.param('q')
            return np.abs(y) ** (q + 1.0) / (q + 1.0)
        if kind == 'minkowski-inverse':
            return y * y / (1.0 + np.sqrt((1.0 - y) * (1.0 + y)))
        if kind == 'relativistic-inverse':
            return y * y / (1.0 + np.sqrt(1.0 + y * y))
        if kind == 'rational-cubic':
            return 0.5 * y * y - 0.5 * np.log1p(y * y)
        rho = self.rho_plus
        w = 1.0 - y / rho
        return rho * (w * np.log(w) - w + 1.0) if np.ndim(w) else _barrier_primitive(rho, float(w))

    def H_edge(self, side: str) -> float:
        """Limit of H at rho_plus (side 'plus') or rho_minus (side 'minus')."""
        rho = self.rho_plus if side == 'plus' else self.rho_minus
        if not math.isfinite(rho):
            return math.inf
        if self.kind == 'log-barrier' and side == 'plus':
            return rho
        return float(self.raw_H(rho))

    def h_star(self) -> float:
        return min(self.H_edge('minus'), self.H_edge('plus'))

    def h_inverse_of_H(self, c: float, side: str) -> float:
        """The branch H_+^{-1}(c) >= 0 or H_-^{-1}(c) <= 0."""
        return _h_inverse_of_H(self, float(c), side)

    def _validate_monotone(self):
        lo = self.rho_minus if math.isfinite(self.rho_minus) else -10.0
        hi = self.rho_plus if math.isfinite(self.rho_plus) else 10.0
        grid = np.linspace(lo, hi, VALIDATION_GRID + 2)[1:-1]
        with np.errstate(all='ignore'):
            values = self.raw_h(grid)
        if not np.all(np.isfinite(values)) or not np.all(np.diff(values) > 0.0):
            raise NodalAtlasError(f"h of kind '{self.kind}' is not strictly increasing on its domain")


def _barrier_primitive(rho: float, w: float) -> float:
    # w*log(w) - w + 1 loses digits near w = 1
    if abs(w - 1.0) < 1e-4:
        u = 1.0 - w
        return rho * u * u * (0.5 + u / 6.0 + u * u / 12.0)
    return rho * (w * math.log(w) - w + 1.0)


@lru_cache(maxsize=65536)
def _h_inverse_of_H(spec: HomeoSpec, c: float, side: str) -> float:
    if c < 0.0:
        raise DomainViolation(c, 0.0, spec.h_star(), what='c')
    if c == 0.0:
        return 0.0
    sign = 1.0 if side == 'plus' else -1.0
    if c >= spec.H_edge(side):
        raise DomainViolation(c, 0.0, spec.H_edge(side), what='c')
    kind = spec.kind
    if kind == 'identity':
        return sign * math.sqrt(2.0 * c)
    if kind == 'power-q':
        q = spec.param('q')
        return sign * ((q + 1.0) * c) ** (1.0 / (q + 1.0))
    if kind == 'minkowski-inverse':
        return sign * math.sqrt(c * (2.0 - c))
    if kind == 'relativistic-inverse':
        return sign * math.sqrt(c * (c + 2.0))
    edge = spec.upper if side == 'plus' else spec.lower
    bound = sign * 1.0
    while abs(bound) < abs(edge) and float(spec.H(bound)) < c:
        bound *= 2.0
        if abs(bound) > 2.0 ** 60:
            raise NoBracket(c, side, abs(bound))
    if abs(bound) >= abs(edge):
        bound = edge
        if float(spec.raw_H(edge)) < c:
            raise DomainViolation(c, 0.0, float(spec.raw_H(edge)), what='c')
    a, b = (0.0, bound) if sign > 0 else (bound, 0.0)
    return optimize.brentq(lambda y: float(spec.raw_H(y)) - c, a, b, xtol=1e-15, rtol=BRENT_RTOL)


def eval_h(spec: HomeoSpec, y: float) -> float:
    return float(spec.h(y))


def h_star(spec: HomeoSpec) -> float:
    return spec.h_star()


def H_by_quadrature(spec: HomeoSpec, y: float, tol: float = 1e-12) -> float:
    """Primitive of h by adaptive quadrature; used to cross-check closed forms.

    At a finite edge (y equal to rho) the integral is taken as an improper one.
    """
    if y == spec.rho_plus or y == spec.rho_minus:
        value, _ = integrate.quad(spec.raw_h, 0.0, y, epsabs=tol, epsrel=tol, limit=200)
        return value
    spec.check(y)
    value, _ = integrate.quad(spec.raw_h, 0.0, y, epsabs=tol, epsrel=tol, limit=200)
    return value


######################################################################

@dataclass(frozen=True)
class NonlinSpec:
    """The nonlinearity g with g(0) = 0 and g(s)s > 0."""

    kind: str = 'power-p'
    p: float = 3.0

    def __post_init__(self):
        if self.kind not in NONLIN_KINDS:
            raise NodalAtlasError(f"unknown g kind '{self.kind}'")
        if self.kind == 'power-p' and (not self.p > 0.0 or self.p == 1.0):
            raise NodalAtlasError(f"power-p needs p > 0 and p != 1, got {self.p!r}")
        grid = np.linspace(-10.0, 10.0, VALIDATION_GRID)
        grid = grid[grid != 0.0]
        if not np.all(self.g(grid) * grid > 0.0) or self.g(0.0) != 0.0:
            raise NodalAtlasError(f"g of kind '{self.kind}' violates g(s)s > 0")

    def is_odd(self) -> bool:
        return self.kind == 'power-p'

    def g(self, x):
        if self.kind == 'power-p':
            return np.sign(x) * np.abs(x) ** self.p
        return np.expm1(x)

    def G(self, x):
        if self.kind == 'power-p':
            return np.abs(x) ** (self.p + 1.0) / (self.p + 1.0)
        return np.expm1(x) - x

    def G_inverse(self, v: float, side: str) -> float:
        """G_+^{-1}(v) >= 0 or G_-^{-1}(v) <= 0 for v >= 0."""
        if v < 0.0:
            raise DomainViolation(v, 0.0, math.inf, what='G level')
        if v == 0.0:
            return 0.0
        sign = 1.0 if side == 'plus' else -1.0
        if self.kind == 'power-p':
            return sign * ((self.p + 1.0) * v) ** (1.0 / (self.p + 1.0))
        if side == 'plus':
            bound = max(1.0, math.log1p(v) + 1.0)
        else:
            bound = -(v + 2.0)
        a, b = (0.0, bound) if sign > 0 else (bound, 0.0)
        return optimize.brentq(lambda x: float(self.G(x)) - v, a, b, xtol=1e-15, rtol=BRENT_RTOL)

    def drop(self, b: float, delta: float) -> float:
        """G(b) - G(b - sgn(b)*delta) without cancellation for small delta."""
        if delta == 0.0 or b == 0.0:
            return float(self.G(b)) - float(self.G(b - math.copysign(delta, b)))
        s = math.copysign(1.0, b)
        if self.kind == 'power-p':
            ab = abs(b)
            if delta >= ab:
                return float(self.G(b)) - float(self.G(b - s * delta))
            q = self.p + 1.0
            return -ab ** q * math.expm1(q * math.log1p(-delta / ab)) / q
        a = b - s * delta
        d = s * delta
        if abs(d) < 1e-2:
            tail = d * d / 2.0 * (1.0 + d / 3.0 + d * d / 12.0 + d ** 3 / 60.0
                                  + d ** 4 / 360.0 + d ** 5 / 2520.0)
        else:
            tail = math.expm1(d) - d
        return math.expm1(a) * math.expm1(d) + tail


######################################################################

@dataclass(frozen=True)
class StepWeight:
    """Stepwise weight: a = mu_i on [t_i, s_i] and a = 0 on (s_i, t_{i+1}).

    `breakpoints` is the flat sequence (t_0, s_0, t_1, s_1, ..., t_m, s_m)
    with t_0 = 0 and s_m = L.
    """

    breakpoints: Tuple[float, ...]
    heights: Tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(v) for v in self.breakpoints)
        mu = tuple(float(v) for v in self.heights)
        object.__setattr__(self, 'breakpoints', bp)
        object.__setattr__(self, 'heights', mu)
        if len(bp) < 2 or len(bp) % 2 or len(mu) != len(bp) // 2:
            raise NodalAtlasError(
                f"weight needs 2(m+1) breakpoints and m+1 heights, got {len(bp)} and {len(mu)}")
        if bp[0] != 0.0:
            raise NodalAtlasError(f"weight must start at t_0 = 0, got {bp[0]!r}")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise NodalAtlasError(f"breakpoints must be strictly increasing: {bp!r}")
        if any(not v > 0.0 for v in mu):
            raise NodalAtlasError(f"hump heights must be positive: {mu!r}")

    @classmethod
    def constant(cls, mu: float, length: float) -> 'StepWeight':
        return cls(breakpoints=(0.0, float(length)), heights=(float(mu),))

    @classmethod
    def equal(cls, mu: float, tau: float, varsigma: float, m: int) -> 'StepWeight':
        """m+1 humps of height mu and length tau separated by gaps of length varsigma."""
        bp = []
        for i in range(m + 1):
            start = i * (tau + varsigma)
            bp.extend((start, start + tau))
        return cls(breakpoints=tuple(bp), heights=(float(mu),) * (m + 1))

    @property
    def m(self) -> int:
        return len(self.heights) - 1

    @property
    def L(self) -> float:
        return self.breakpoints[-1]

    def t(self, i: int) -> float:
        return self.breakpoints[2 * i]

    def s(self, i: int) -> float:
        return self.breakpoints[2 * i + 1]

    def tau(self, i: int) -> float:
        return self.s(i) - self.t(i)

    def varsigma(self, i: int) -> float:
        return self.t(i + 1) - self.s(i)

    @property
    def taus(self) -> Tuple[float, ...]:
        return tuple(self.tau(i) for i in range(self.m + 1))

    @property
    def varsigmas(self) -> Tuple[float, ...]:
        return tuple(self.varsigma(i) for i in range(self.m))

    @property
    def sup_norm(self) -> float:
        return max(self.heights)

    def segments(self) -> Tuple[Tuple[float, float, float], ...]:
        """(start, end, height) for every hump and gap in time order."""
        bp = self.breakpoints
        return tuple((bp[k], bp[k + 1], self.heights[k // 2] if k % 2 == 0 else 0.0)
                     for k in range(len(bp) - 1))

    def intervals(self) -> Tuple[Tuple[str, int, float, float], ...]:
        """('hump'|'gap', index, start, end) in time order."""
        bp = self.breakpoints
        return tuple(('hump' if k % 2 == 0 else 'gap', k // 2, bp[k], bp[k + 1])
                     for k in range(len(bp) - 1))

    def weight_at(self, t: float) -> float:
        # a breakpoint belongs to the interval that ends there
        for start, end, mu in self.segments():
            if start <= t <= end:
                return mu
        raise NodalAtlasError(f"t={t!r} outside [0, {self.L!r}]")


######################################################################

@dataclass(frozen=True)
class BoundaryArc:
    """A Sturm-Liouville boundary line r_0 or r_L.

    Axis kinds and rays are half-lines from the origin, with the ray angle
    measured clockwise from the positive y-axis.  `span` optionally limits
    the radial range.  A param-curve is the polyline through `samples`.
    """

    kind: str = 'positive-y-axis'
    angle: Optional[float] = None
    samples: Tuple[Tuple[float, float], ...] = ()
    quadrant: Optional[str] = None
    span: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in ARC_KINDS:
            raise NodalAtlasError(f"unknown boundary arc kind '{self.kind}'")
        if self.kind == 'ray' and self.angle is None:
            raise NodalAtlasError("a ray needs an angle")
        if self.kind == 'param-curve' and len(self.samples) < 2:
            raise NodalAtlasError("a param-curve needs at least two samples")
        if self.quadrant is not None and self.quadrant not in QUADRANTS:
            raise NodalAtlasError(f"unknown quadrant '{self.quadrant}'")
        object.__setattr__(self, 'samples', tuple((float(x), float(y)) for x, y in self.samples))
        if self.span is not None:
            object.__setattr__(self, 'span', (float(self.span[0]), float(self.span[1])))

    @property
    def is_radial(self) -> bool:
        return self.kind != 'param-curve'

    @property
    def direction(self) -> float:
        """Clockwise angle of a radial arc."""
        if self.kind == 'ray':
            return float(self.angle) % (2.0 * math.pi)
        if self.kind == 'param-curve':
            raise NodalAtlasError("a param-curve has no single direction")
        return AXIS_ANGLES[self.kind]

    def point_at_radius(self, r: float) -> Tuple[float, float]:
        phi = self.direction
        return r * math.sin(phi), r * math.cos(phi)

    def point_at(self, s: float) -> Tuple[float, float]:
        """Point at arclength fraction s in [0, 1] of a param-curve."""
        pts = np.asarray(self.samples)
        seg = np.hypot(*np.diff(pts, axis=0).T)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        target = min(max(s, 0.0), 1.0) * cum[-1]
        return float(np.interp(target, cum, pts[:, 0])), float(np.interp(target, cum, pts[:, 1]))

    def signed_distance(self, x: float, y: float) -> float:
        """Signed transversal coordinate of (x, y) relative to the arc.

        For radial arcs this is the normal distance to the supporting line,
        positive on the clockwise side.  For a param-curve it is the distance
        to the nearest segment, positive to the right of its direction.
        """
        if self.is_radial:
            phi = self.direction
            return x * math.cos(phi) - y * math.sin(phi)
        best = None
        for (ax, ay), (bx, by) in zip(self.samples, self.samples[1:]):
            dx, dy = bx - ax, by - ay
            length2 = dx * dx + dy * dy
            u = 0.0 if length2 == 0.0 else min(max(((x - ax) * dx + (y - ay) * dy) / length2, 0.0), 1.0)
            px, py = ax + u * dx, ay + u * dy
            dist = math.hypot(x - px, y - py)
            if best is None or dist < best[0]:
                cross = dx * (y - ay) - dy * (x - ax)
                best = (dist, -1.0 if cross > 0.0 else 1.0)
        return best[0] * best[1]


######################################################################

class Potentials(NamedTuple):
    G: float
    H: float
    F: float
    hamiltonian: float
    energy: float


@dataclass(frozen=True)
class ProblemSpec:
    """One boundary value problem instance."""

    h: HomeoSpec
    g: NonlinSpec
    lam: float
    weight: StepWeight
    r0: BoundaryArc = field(default_factory=BoundaryArc)
    rL: BoundaryArc = field(default_factory=lambda: BoundaryArc(kind='negative-y-axis'))

    def __post_init__(self):
        object.__setattr__(self, 'lam', float(self.lam))
        if self.h.kind == 'power-q' and self.h.param('q') < 1.0 and self.lam < 0.0:
            logger.warning(f"power-q h with q={self.h.param('q')} and lambda={self.lam} "
                           f"may lose uniqueness; trajectories can reach the origin in finite time")

    def mu(self, i: int) -> float:
        return self.weight.heights[i]

    def is_odd(self) -> bool:
        return self.h.is_odd() and self.g.is_odd()

    def F(self, i: int, x, mu: Optional[float] = None):
        mu = self.mu(i) if mu is None else mu
        return 0.5 * self.lam * x * x + mu * self.g.G(x)

    def F_prime(self, i: int, x, mu: Optional[float] = None):
        mu = self.mu(i) if mu is None else mu
        return self.lam * x + mu * self.g.g(x)

    def potential_drop(self, i: int, b: float, delta: float, mu: Optional[float] = None) -> float:
        """F(b) - F(b - sgn(b)*delta) for the hump i potential, cancellation free."""
        mu = self.mu(i) if mu is None else mu
        ab = abs(b)
        quad = 0.5 * self.lam * delta * (2.0 * ab - delta)
        return quad + mu * self.g.drop(b, delta)

    def hamiltonian(self, i: int, x, y, mu: Optional[float] = None):
        return self.h.H(y) + self.F(i, x, mu)

    def energy(self, x, y):
        """Conserved quantity of the gap system, H(y) + lambda*x^2/2."""
        return self.h.H(y) + 0.5 * self.lam * x * x

    def rhs(self, t: float, z, mu: float):
        x, y = z[0], z[1]
        yc = min(max(y, self.h.lower), self.h.upper)
        return np.array([self.h.raw_h(yc), -self.lam * x - mu * self.g.g(x)])


def eval_potentials(problem: ProblemSpec, i: int, x: float, y: float) -> Potentials:
    G = float(problem.g.G(x))
    H = float(problem.h.H(y))
    F = 0.5 * problem.lam * x * x + problem.mu(i) * G
    return Potentials(G=G, H=H, F=F, hamiltonian=H + F, energy=H + 0.5 * problem.lam * x * x)
