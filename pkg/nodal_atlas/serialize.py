"""
Experiment configs and result tables.

Configs are YAML files with the sections problem, task, output and
tolerances.  Tables are CSV with 17 significant digits and a JSON mirror
using the same field names.
"""

import csv
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import yaml

from .exceptions import ConfigError, NodalAtlasError
from .model import BoundaryArc, HomeoSpec, NonlinSpec, ProblemSpec, StepWeight

logger = logging.getLogger(__name__)

TASKS = ('periods', 'twist', 'windows', 'itineraries', 'bound', 'solve', 'sweep',
         'reproduce-example')

COLUMNS = {
    'sweep': ('n', 'lambda', 'M_plus', 'x_plus', 'error_est'),
    'solve': ('solution_id', 'arc_param', 'x0', 'y0', 'itinerary', 'zeros_x_per_interval',
              'zeros_y_per_interval', 'residual'),
    'periods': ('c', 'T', 'T_I', 'T_II', 'T_III', 'T_IV', 'error_est'),
}


class AttrDict(dict):
    def __init__(self, *args, **kwargs):
        super(AttrDict, self).__init__(*args, **kwargs)
        self.__dict__ = self


@dataclass
class RunConfig:
    task: str
    params: AttrDict
    problem: Optional[ProblemSpec] = None
    out_dir: Optional[str] = None
    tol_quad: Optional[float] = None
    tol_ode: Optional[float] = None

    def require_problem(self) -> ProblemSpec:
        if self.problem is None:
            raise ConfigError('problem', f"task '{self.task}' needs a problem section")
        return self.problem


######################################################################

def arc_to_dict(arc: BoundaryArc) -> Dict[str, Any]:
    return {
        'kind': arc.kind,
        'angle': arc.angle,
        'samples': [[x, y] for x, y in arc.samples],
        'quadrant': arc.quadrant,
        'span': None if arc.span is None else list(arc.span),
    }


def problem_to_dict(problem: ProblemSpec) -> Dict[str, Any]:
    return {
        'h': {
            'kind': problem.h.kind,
            'params': dict(problem.h.params),
            'rho_minus': problem.h.rho_minus,
            'rho_plus': problem.h.rho_plus,
        },
        'g': {'kind': problem.g.kind, 'p': problem.g.p},
        'lambda': problem.lam,
        'weight': {
            'breakpoints': list(problem.weight.breakpoints),
            'heights': list(problem.weight.heights),
        },
        'r0': arc_to_dict(problem.r0),
        'rL': arc_to_dict(problem.rL),
    }


def _section(data: Any, path: str) -> Mapping:
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    return data


def _number(data: Mapping, key: str, path: str, default=None) -> Optional[float]:
    value = data.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")


def arc_from_dict(data: Any, path: str, default_kind: str) -> BoundaryArc:
    if data is None:
        return BoundaryArc(kind=default_kind)
    data = _section(data, path)
    try:
        return BoundaryArc(kind=data.get('kind', default_kind),
                           angle=_number(data, 'angle', path),
                           samples=tuple(tuple(pt) for pt in data.get('samples') or ()),
                           quadrant=data.get('quadrant'),
                           span=None if data.get('span') is None else tuple(data['span']))
    except (NodalAtlasError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e))


def problem_from_dict(data: Any, path: str = 'problem') -> ProblemSpec:
    """Inverse of problem_to_dict; errors name the offending key path."""
    data = _section(data, path)
    h = _section(data.get('h', {'kind': 'identity'}), f"{path}.h")
    g = _section(data.get('g', {'kind': 'power-p', 'p': 3.0}), f"{path}.g")
    weight = _section(data.get('weight'), f"{path}.weight")
    if 'lambda' not in data:
        raise ConfigError(f"{path}.lambda", "missing")

    try:
        params = {k: float(v) for k, v in (h.get('params') or {}).items()}
        if 'rho_minus' in h and 'rho_plus' in h:
            homeo = HomeoSpec(kind=h.get('kind', 'identity'),
                              params=tuple(sorted(params.items())),
                              rho_minus=float(h['rho_minus']), rho_plus=float(h['rho_plus']))
        else:
            extra = {k: float(h[k]) for k in ('rho_minus', 'rho_plus') if h.get(k) is not None}
            homeo = HomeoSpec.build(h.get('kind', 'identity'), **params, **extra)
    except (NodalAtlasError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}.h", str(e))
    try:
        nonlin = NonlinSpec(kind=g.get('kind', 'power-p'), p=float(g.get('p', 3.0)))
    except (NodalAtlasError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}.g", str(e))
    try:
        step = StepWeight(breakpoints=tuple(weight['breakpoints']), heights=tuple(weight['heights']))
    except KeyError as e:
        raise ConfigError(f"{path}.weight.{e.args[0]}", "missing")
    except (NodalAtlasError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}.weight", str(e))

    r0 = arc_from_dict(data.get('r0'), f"{path}.r0", 'positive-y-axis')
    rL = arc_from_dict(data.get('rL'), f"{path}.rL", 'negative-y-axis')
    lam = _number(data, 'lambda', path)
    return ProblemSpec(h=homeo, g=nonlin, lam=lam, weight=step, r0=r0, rL=rL)


######################################################################

def parse_config(data: Any) -> RunConfig:
    data = _section(data, '<root>')
    task = _section(data.get('task'), 'task')
    name = task.get('name')
    if name not in TASKS:
        raise ConfigError('task.name', f"expected one of {', '.join(TASKS)}, got {name!r}")
    params = AttrDict(_section(task.get('params') or {}, 'task.params'))
    problem = problem_from_dict(data['problem']) if data.get('problem') is not None else None
    output = _section(data.get('output') or {}, 'output')
    tolerances = _section(data.get('tolerances') or {}, 'tolerances')
    tol_quad = _number(tolerances, 'quad', 'tolerances')
    tol_ode = _number(tolerances, 'ode', 'tolerances')
    for key, value in (('quad', tol_quad), ('ode', tol_ode)):
        if value is not None and not value > 0.0:
            raise ConfigError(f"tolerances.{key}", f"must be positive, got {value!r}")
    return RunConfig(task=name, params=params, problem=problem, out_dir=output.get('dir'),
                     tol_quad=tol_quad, tol_ode=tol_ode)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        logger.error(f"cannot read config {path}: {e}")
        raise ConfigError('<file>', f"cannot read {path}: {e}")
    except yaml.YAMLError as e:
        logger.error(f"config {path} is not valid YAML: {e}")
        raise ConfigError('<file>', f"{path} is not valid YAML: {e}")
    return parse_config(data)


def config_to_dict(config: RunConfig) -> Dict[str, Any]:
    data: Dict[str, Any] = {'task': {'name': config.task, 'params': dict(config.params)}}
    if config.problem is not None:
        data['problem'] = problem_to_dict(config.problem)
    if config.out_dir is not None:
        data['output'] = {'dir': str(config.out_dir)}
    tolerances = {k: v for k, v in (('quad', config.tol_quad), ('ode', config.tol_ode)) if v is not None}
    if tolerances:
        data['tolerances'] = tolerances
    return data


def dump_config(config: RunConfig, path=None) -> str:
    text = yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)
    if path is not None:
        Path(path).write_text(text, encoding='utf-8')
    return text


######################################################################

def format_number(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return '' if value is None else str(value).lower()
    if isinstance(value, float):
        return '%.17g' % value
    return str(value)


def jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return float('%.17g' % value) if math.isfinite(value) else str(value)
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, 'item') and callable(value.item):
        return jsonable(value.item())
    return value


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    os.makedirs(os.path.dirname(os.fspath(path)) or '.', exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow(columns)
        for row in rows:
            w.writerow([format_number(row.get(c)) for c in columns])


def write_json(path, data: Any) -> None:
    os.makedirs(os.path.dirname(os.fspath(path)) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(jsonable(data), f, indent=2)
        f.write('\n')


def write_table(out_dir, name: str, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> None:
    """CSV table plus its JSON mirror."""
    rows = list(rows)
    write_csv(Path(out_dir) / f"{name}.csv", columns, rows)
    write_json(Path(out_dir) / f"{name}.json", [{c: row.get(c) for c in columns} for row in rows])
