"""
Run one nodal_atlas experiment described by a YAML config.

    python manage.py nodal_atlas --config runs/example.yaml --out runs/example

Exit status: 0 success, 2 config error, 3 numerical failure, 4 a certificate
the task expected to hold was violated.
"""

import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from django.core.management.base import BaseCommand
from django.utils import timezone

from nodal_atlas import autonomous, certify, conf, plots, quadrature, shoot
from nodal_atlas.exceptions import CertificationViolated, ConfigError, NodalAtlasError
from nodal_atlas.model import HomeoSpec, NonlinSpec, ProblemSpec, StepWeight
from nodal_atlas.serialize import (COLUMNS, AttrDict, RunConfig, config_to_dict, jsonable,
                                   load_config, write_json, write_table)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VIOLATED = 4

TWIST_KEYS = ('tau', 'd', 'e', 'quadrant', 'endpoint')
WINDOW_KEYS = ('d_hat', 'e_hat', 'xi', 'zeta', 'c', 'theta1', 'theta2', 'p')

EXAMPLE_EQUAL_HUMPS = (
    # mu, c1, c2, tau, varsigma
    (20.0, 1.0, 5.0, 5.9, 1.5),
    (130.0, 0.8, 20.0, 1.9, 1.55),
)
EXAMPLE_SADDLE = ((1.5, 14.0),)
# numbered aliases of the worked examples
EXAMPLE_ALIASES = {'4.1': 'equal-humps', '4.2': 'saddle'}


class Command(BaseCommand):
    help = "Run a nodal_atlas task (periods, twist, windows, itineraries, bound, solve, sweep, reproduce-example)"

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='YAML experiment config')
        parser.add_argument('--out', help='output directory (overrides output.dir)')
        parser.add_argument('--tol-quad', type=float, help='quadrature tolerance')
        parser.add_argument('--tol-ode', type=float, help='ODE relative tolerance')
        parser.add_argument('--threads', type=int, default=1, help='worker processes')
        parser.add_argument('--seed', type=int, default=0, help='scan jitter seed, 0 for none')
        parser.add_argument('--record', action='store_true', help='store the run in the ledger')

    def handle(self, *args, **options):
        run = None
        code = EXIT_OK
        try:
            config = load_config(options['config'])
            out_dir = Path(options['out'] or config.out_dir
                           or Path(conf.get('OUTPUT_ROOT')) / config.task)
            for flag, attr in (('tol_quad', 'tol_quad'), ('tol_ode', 'tol_ode')):
                if options.get(flag) is not None:
                    if not options[flag] > 0.0:
                        raise ConfigError(f"--{flag.replace('_', '-')}", "must be positive")
                    setattr(config, attr, options[flag])
            out_dir.mkdir(parents=True, exist_ok=True)
            if options['record']:
                from nodal_atlas.models import ExperimentRun
                run = ExperimentRun.objects.create(task=config.task, output_dir=str(out_dir),
                                                   config=jsonable(config_to_dict(config)))
            logger.info(f"running task '{config.task}' into {out_dir}")
            runner = TaskRunner(config, out_dir, threads=options['threads'], seed=options['seed'])
            summary = runner.run()
            write_json(out_dir / 'summary.json', summary)
        except CertificationViolated as e:
            logger.error(f"certification failed: {e}")
            code, summary = EXIT_VIOLATED, {'status': 'violated', 'error': str(e)}
        except ConfigError as e:
            logger.error(f"config error: {e}")
            code, summary = EXIT_CONFIG, {'status': 'config-error', 'error': str(e)}
        except NodalAtlasError as e:
            logger.error(f"numerical failure ({e.code}): {e}")
            code, summary = EXIT_NUMERICAL, {'status': e.code, 'error': str(e)}

        if run is not None:
            run.status = 'completed' if code == EXIT_OK else 'failed'
            run.exit_code = code
            run.summary = jsonable(summary)
            run.finished = timezone.now()
            run.save()
        if code != EXIT_OK:
            sys.exit(code)
        self.stdout.write(f"{config.task}: results in {out_dir}")


def _grid(params: AttrDict, key: str, range_key: str) -> List[float]:
    if params.get(key) is not None:
        return [float(v) for v in params[key]]
    spec = params.get(range_key)
    if spec is None:
        raise ConfigError(f"task.params.{key}", f"give {key} or {range_key}")
    try:
        return [float(v) for v in np.linspace(float(spec['start']), float(spec['stop']), int(spec['num']))]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"task.params.{range_key}", f"needs start, stop and num ({e})")


class TaskRunner:
    """Dispatches a parsed RunConfig to the library and writes its tables."""

    def __init__(self, config: RunConfig, out_dir: Path, threads: int = 1, seed: int = 0):
        self.config = config
        self.params = config.params
        self.out_dir = Path(out_dir)
        self.threads = threads
        self.seed = seed
        self.tol = config.tol_quad
        self.rtol = config.tol_ode
        self.atol = None if config.tol_ode is None else 1e-2 * config.tol_ode

    def run(self) -> Dict[str, Any]:
        handler = getattr(self, 'task_' + self.config.task.replace('-', '_'))
        try:
            summary = handler()
        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"bad parameters for task '{self.config.task}': {e}")
            raise ConfigError('task.params', str(e))
        summary.setdefault('status', 'ok')
        return {'task': self.config.task, **summary}

    ######################################################################

    def _humps(self, problem: ProblemSpec) -> List[Dict[str, Any]]:
        humps = self.params.get('humps')
        if not humps:
            raise ConfigError('task.params.humps', "missing")
        for k, hump in enumerate(humps):
            for key in ('i', 'c1', 'c2'):
                if key not in hump:
                    raise ConfigError(f"task.params.humps[{k}].{key}", "missing")
            if not 0 <= int(hump['i']) <= problem.weight.m:
                raise ConfigError(f"task.params.humps[{k}].i", f"no hump {hump['i']}")
        return humps

    def _annuli(self, problem: ProblemSpec) -> Dict[int, certify.Annulus]:
        return {int(h['i']): certify.Annulus.build(problem, int(h['i']), float(h['c1']), float(h['c2']))
                for h in self._humps(problem)}

    def _twists(self, problem: ProblemSpec, annuli) -> List[certify.TwistCertificate]:
        out = []
        for k, hump in enumerate(self._humps(problem)):
            if 'alpha' not in hump or 'beta' not in hump:
                raise ConfigError(f"task.params.humps[{k}]", "alpha and beta are required")
            extra = {key: hump[key] for key in TWIST_KEYS if hump.get(key) is not None}
            tau = extra.pop('tau', None)
            out.append(certify.check_twist(problem, annuli[int(hump['i'])], tau, int(hump['alpha']),
                                           int(hump['beta']), hump.get('variant', 'standard'),
                                           tol=self.tol, **extra))
        return out

    def _windows(self, problem: ProblemSpec, annuli) -> List[certify.WindowReport]:
        out = []
        for k, gap in enumerate(self.params.get('gaps') or ()):
            i = int(gap.get('i', k))
            if i not in annuli or i + 1 not in annuli:
                raise ConfigError(f"task.params.gaps[{k}]", f"humps {i} and {i + 1} need annuli")
            extra = {key: gap[key] for key in WINDOW_KEYS if gap.get(key) is not None}
            out.append(certify.check_linear_window(problem, i, gap.get('variant', 'through-y-axis'),
                                                   (annuli[i], annuli[i + 1]), gap.get('varsigma'),
                                                   tol=self.tol, **extra))
        return out

    def _expect(self, reports, what: str):
        if not self.params.get('expect', True):
            return
        for report in reports:
            if report.status == 'violated':
                raise CertificationViolated(f"{what} {report.i}",
                                            f"{report.variant}: '{report.violated}'")

    ######################################################################

    def task_periods(self) -> Dict[str, Any]:
        problem = self.config.require_problem()
        i = int(self.params.get('hump', 0))
        levels = _grid(self.params, 'levels', 'level_range')
        rows = []
        for c in levels:
            q = quadrature.quarter_times(problem, i, c, self.tol)
            rows.append({'c': c, 'T': q.period, 'T_I': q.t_I, 'T_II': q.t_II,
                         'T_III': q.t_III, 'T_IV': q.t_IV, 'error_est': q.error})
        write_table(self.out_dir, 'periods', COLUMNS['periods'], rows)
        if self.params.get('plot') and levels:
            plots.phase_portrait(problem, self.out_dir / 'periods.svg',
                                 annuli=[(i, min(levels), max(levels))])
        return {'hump': i, 'levels': len(rows)}

    def task_twist(self) -> Dict[str, Any]:
        problem = self.config.require_problem()
        certs = self._twists(problem, self._annuli(problem))
        write_json(self.out_dir / 'twist.json', [certify.certificate_summary(c) for c in certs])
        self._expect(certs, 'twist on hump')
        return {'certificates': {str(c.i): c.status for c in certs}}

    def task_windows(self) -> Dict[str, Any]:
        problem = self.config.require_problem()
        annuli = self._annuli(problem)
        compat = []
        if problem.lam > 0.0:
            for i in sorted(annuli):
                if i + 1 in annuli:
                    report = certify.check_compat(problem, annuli[i], annuli[i + 1])
                    compat.append({'i': i, **report._asdict()})
                    if not report.ok and self.params.get('expect', True):
                        raise CertificationViolated(f"compatibility on gap {i}",
                                                    f"x_com={report.x_com!r}, slack={report.slack!r}")
        windows = self._windows(problem, annuli)
        write_json(self.out_dir / 'windows.json',
                   {'compat': compat, 'windows': [certify.certificate_summary(w) for w in windows]})
        self._expect(windows, 'window on gap')
        return {'windows': {str(w.i): w.status for w in windows}, 'compat': len(compat)}

    def task_itineraries(self) -> Dict[str, Any]:
        problem = self.config.problem
        m = self.params.get('m', problem.weight.m if problem else None)
        if m is None:
            raise ConfigError('task.params.m', "missing")
        sign = float(self.params.get('lambda_sign', problem.lam if problem else 0.0))
        found = certify.enumerate_itineraries(int(m), sign, self.params.get('kappa0', 'I'))
        write_json(self.out_dir / 'itineraries.json',
                   [{'label': it.label(), 'kappas': list(it.kappas), 'moves': [list(mv) for mv in it.moves]}
                    for it in found])
        return {'m': int(m), 'count': len(found)}

    def task_bound(self) -> Dict[str, Any]:
        problem = self.config.require_problem()
        annuli = self._annuli(problem)
        certs = self._twists(problem, annuli)
        windows = self._windows(problem, annuli) if self.params.get('gaps') else None
        self._expect(certs, 'twist on hump')
        if windows:
            self._expect(windows, 'window on gap')
        by_hump = {c.i: c for c in certs}
        ordered = [by_hump.get(i) for i in range(problem.weight.m + 1)]
        bound = certify.lower_bound(ordered, problem.lam, self.params.get('boundary_mode', 'single'),
                                    windows, self.params.get('kappa0', 'I'))
        write_json(self.out_dir / 'bound.json',
                   {'total': bound.total, 'classes': bound.classes,
                    'breakdown': [{'itinerary': it.label(), 'count': n} for it, n in bound.breakdown]})
        return {'total': bound.total}

    def task_solve(self) -> Dict[str, Any]:
        problem = self.config.require_problem()
        p = self.params
        c_range = tuple(p['c_range']) if p.get('c_range') is not None else None
        certs = None
        if p.get('humps') and all('alpha' in h for h in p['humps']):
            certs = self._twists(problem, self._annuli(problem))
        solutions = shoot.find_solutions(
            problem, max_winding=p.get('max_winding'), n_samples=p.get('n_samples'),
            c_range=c_range, threads=self.threads, seed=self.seed, energy_cap=p.get('energy_cap'),
            stable_rounds=int(p.get('stable_rounds', 2)),
            max_doublings=int(p.get('max_doublings', shoot.MAX_DOUBLINGS)),
            rtol=self.rtol, atol=self.atol, certificates=certs)
        rows = [shoot.solution_row(k, s) for k, s in enumerate(solutions)]
        write_table(self.out_dir, 'solve', COLUMNS['solve'], rows)
        if p.get('plot'):
            annuli = [(int(h['i']), float(h['c1']), float(h['c2'])) for h in p.get('humps') or ()]
            plots.phase_portrait(problem, self.out_dir / 'solve.svg', annuli=annuli,
                                 trajectories=[s.trajectory for s in solutions])
        consistent = sum(1 for s in solutions if s.signature is not None and s.signature.consistent)
        return {'solutions': len(solutions), 'consistent': consistent}

    def task_sweep(self) -> Dict[str, Any]:
        p = self.params
        ns = p.get('n', 1)
        ns = [int(v) for v in (ns if isinstance(ns, (list, tuple)) else [ns])]
        grid = _grid(p, 'lambda_grid', 'lambda_range')
        try:
            mu, power, length = float(p['mu']), float(p['p']), float(p['L'])
        except KeyError as e:
            raise ConfigError(f"task.params.{e.args[0]}", "missing")
        rows, verdicts, branches = [], {}, {}
        for n in ns:
            sweep = autonomous.branch_sweep(n, grid, mu, power, length, threads=self.threads, tol=self.tol)
            branches[n] = sweep.points
            verdicts[str(n)] = {'verdict': sweep.verdict, 'expected': sweep.expected}
            rows.extend({'n': n, 'lambda': pt.lam, 'M_plus': pt.M_plus, 'x_plus': pt.x_plus,
                         'error_est': pt.error_est} for pt in sweep.points)
        write_table(self.out_dir, 'sweep', COLUMNS['sweep'], rows)
        if p.get('plot'):
            plots.bifurcation_diagram(branches, self.out_dir / 'sweep.svg', p=power, a_sup_norm=mu)
        return {'points': len(rows), 'branches': verdicts}

    def task_reproduce_example(self) -> Dict[str, Any]:
        name = str(self.params.get('name', ''))
        name = EXAMPLE_ALIASES.get(name, name)
        if name == 'equal-humps':
            rows = [example_equal_humps(k + 1, *choice, tol=self.tol)
                    for k, choice in enumerate(EXAMPLE_EQUAL_HUMPS)]
        elif name == 'saddle':
            rows = [example_saddle(*thetas, tol=self.tol) for thetas in EXAMPLE_SADDLE]
        else:
            raise ConfigError('task.params.name', f"expected 'equal-humps' or 'saddle', got {name!r}")
        columns = tuple(rows[0])
        table = 'example_' + name.replace('-', '_')
        write_table(self.out_dir, table, columns, rows)
        return {'example': name, 'rows': len(rows)}


######################################################################

def equal_hump_problem(lam: float, mu: float, tau: float, varsigma: float, p: float = 3.0,
                       m: int = 1) -> ProblemSpec:
    return ProblemSpec(h=HomeoSpec.build('identity'), g=NonlinSpec('power-p', p), lam=lam,
                       weight=StepWeight.equal(mu, tau, varsigma, m))


def example_equal_humps(choice: int, mu: float, c1: float, c2: float, tau: float, varsigma: float,
                        lam: float = 1.0, p: float = 3.0, tol: Optional[float] = None) -> Dict[str, Any]:
    """Compatibility abscissa, level-line transit, orbit abscissae and periods for equal humps."""
    problem = equal_hump_problem(lam, mu, tau, varsigma, p)
    levels = ((c1, c2), (c1, c2))
    report = quadrature.compat_margin(problem, 0, levels)
    transit, transit_err = quadrature.energy_transit(problem, c1, -report.x_com, report.x_com,
                                                     'upper', tol, full_output=True)
    q1 = quadrature.quarter_times(problem, 0, c1, tol)
    q2 = quadrature.quarter_times(problem, 0, c2, tol)
    x1 = quadrature.solve_level_abscissa(problem, 0, c1, 'plus')
    x2 = quadrature.solve_level_abscissa(problem, 0, c2, 'plus')
    return {'choice': choice, 'mu': mu, 'c1': c1, 'c2': c2, 'x_com': report.x_com,
            'transit': transit, 'x_plus_sq_c1': x1 * x1, 'x_plus_sq_c2': x2 * x2,
            'T_c1': q1.period, 'T_c2': q2.period,
            'error_est': max(transit_err, q1.error, q2.error)}


def example_saddle(theta1: float, theta2: float, p: float = 3.0, lam: float = -1.0,
                   tol: Optional[float] = None) -> Dict[str, Any]:
    """Normalized quarter periods and gap thresholds in terms of theta = x/x*."""
    bounds = quadrature.lambda_bounds(theta1, theta2, p, lam)
    t1, err1 = quadrature.script_T1(theta1, p, tol, full_output=True)
    t2, err2 = quadrature.script_T1(theta2, p, tol, full_output=True)
    # Lambda1, Lambda2 and Lambda* are closed form
    return {'theta1': theta1, 'theta2': theta2, 'T1_theta1': t1, 'T1_theta2': t2,
            'Lambda1': bounds.lambda1, 'Lambda2': bounds.lambda2,
            'two_Lambda_star': bounds.lambda_star * math.sqrt(-lam), 'error_est': max(err1, err2)}
