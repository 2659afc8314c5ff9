"""
Django settings for the nodal_atlas_django project.

The project only hosts the nodal_atlas app: its management command, the
run ledger model and the numerical defaults under NODAL_ATLAS.  Every
NODAL_ATLAS key can be overridden by an environment variable named
NODAL_ATLAS_<KEY>.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'nodal-atlas-local-only-3v$k9q!2x')

DEBUG = os.environ.get('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'nodal_atlas',
]


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'


# Numerical defaults

def _env(key, default, cast):
    value = os.environ.get(f'NODAL_ATLAS_{key}')
    return default if value is None else cast(value)


NODAL_ATLAS = {
    'QUAD_TOL': _env('QUAD_TOL', 1e-10, float),
    'ODE_RTOL': _env('ODE_RTOL', 1e-10, float),
    'ODE_ATOL': _env('ODE_ATOL', 1e-12, float),
    'EVENT_TOL': _env('EVENT_TOL', 1e-12, float),
    'DOMAIN_MARGIN': _env('DOMAIN_MARGIN', 1e-9, float),
    'SCAN_SAMPLES': _env('SCAN_SAMPLES', 4096, int),
    'SLACK_FACTOR': _env('SLACK_FACTOR', 10.0, float),
    'OUTPUT_ROOT': _env('OUTPUT_ROOT', BASE_DIR / 'runs', Path),
}


# Logging configuration
# NODAL_ATLAS_LOG=error|warn|info|debug, unknown values fall back to warn

LOG_LEVELS = {'error': 'ERROR', 'warn': 'WARNING', 'info': 'INFO', 'debug': 'DEBUG'}
LOG_LEVEL = LOG_LEVELS.get(os.environ.get('NODAL_ATLAS_LOG', 'warn').lower(), 'WARNING')

(BASE_DIR / 'logs').mkdir(exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
        'file': {
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': BASE_DIR / 'logs' / 'nodal_atlas.log',
            'maxBytes': 1024 * 1024 * 10,  # 10 MB
            'backupCount': 5,
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': os.environ.get('DJANGO_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        },
        'nodal_atlas': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
}
