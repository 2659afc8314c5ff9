"""SVG phase portraits and bifurcation diagrams (diagnostic only)."""

import logging
from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .autonomous import BranchPoint, apriori_curve  # noqa: E402
from .model import ProblemSpec  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams['svg.hashsalt'] = 'nodal-atlas'


def _save(fig, path):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"wrote {path}")


def phase_portrait(problem: ProblemSpec, path, annuli: Sequence[Tuple[int, float, float]] = (),
                   energy_levels: Sequence[float] = (), trajectories=(),
                   extent: Optional[float] = None, title: Optional[str] = None):
    """Annulus level sets H_i = c1, c2, gap level lines and trajectories."""
    if extent is None:
        radii = [float(np.max(np.hypot(t.x, t.y))) for t in trajectories]
        extent = 1.2 * max(radii + [1.0])
    ylim = (max(-extent, problem.h.lower), min(extent, problem.h.upper))
    xs = np.linspace(-extent, extent, 401)
    ys = np.linspace(ylim[0], ylim[1], 401)
    X, Y = np.meshgrid(xs, ys)
    Hy = problem.h.raw_H(Y)

    fig, ax = plt.subplots(figsize=(6, 6))
    colors = plt.rcParams['axes.prop_cycle'].by_key()['color']
    for k, (i, c1, c2) in enumerate(annuli):
        Z = Hy + problem.F(i, X)
        ax.contour(X, Y, Z, levels=sorted({c1, c2}), colors=colors[k % len(colors)],
                   linewidths=1.0)
    if energy_levels:
        E = Hy + 0.5 * problem.lam * X * X
        ax.contour(X, Y, E, levels=sorted(set(energy_levels)), colors='gray',
                   linestyles='dashed', linewidths=0.8)
    for t in trajectories:
        ax.plot(t.x, t.y, 'k-', linewidth=0.7)
        ax.plot(t.x[:1], t.y[:1], 'ko', markersize=3)
    ax.axhline(0.0, color='0.7', linewidth=0.5)
    ax.axvline(0.0, color='0.7', linewidth=0.5)
    ax.set_xlabel('x')
    ax.set_ylabel('y')
    if title:
        ax.set_title(title)
    _save(fig, path)


def bifurcation_diagram(branches: Dict[int, Sequence[BranchPoint]], path,
                        p: Optional[float] = None, a_sup_norm: Optional[float] = None,
                        title: Optional[str] = None):
    """lambda against M_plus per branch, with the a priori curve dashed for lambda < 0."""
    fig, ax = plt.subplots(figsize=(6, 4))
    lams = []
    for n, points in sorted(branches.items()):
        points = [pt for pt in points if not pt.saturated]
        if not points:
            continue
        ax.plot([pt.lam for pt in points], [pt.M_plus for pt in points], '-', label=f"n={n}")
        lams.extend(pt.lam for pt in points)
    if p is not None and a_sup_norm is not None and lams and min(lams) < 0.0:
        grid = np.linspace(min(lams), 0.0, 200)[:-1]
        ax.plot(grid, [apriori_curve(lam, a_sup_norm, p) for lam in grid], 'k--', linewidth=0.8)
    ax.set_xlabel('lambda')
    ax.set_ylabel('M+')
    if lams:
        ax.legend()
    if title:
        ax.set_title(title)
    _save(fig, path)
