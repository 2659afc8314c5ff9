"""Numerical defaults, read from settings.NODAL_ATLAS when Django is configured."""

from django.conf import settings

DEFAULTS = {
    'QUAD_TOL': 1e-10,
    'ODE_RTOL': 1e-10,
    'ODE_ATOL': 1e-12,
    'EVENT_TOL': 1e-12,
    'DOMAIN_MARGIN': 1e-9,
    'SCAN_SAMPLES': 4096,
    'SLACK_FACTOR': 10.0,
    'OUTPUT_ROOT': 'runs',
}


def get(name: str):
    if settings.configured:
        return getattr(settings, 'NODAL_ATLAS', {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]
