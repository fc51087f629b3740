# config.py
import os
import sys
from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))
dotenv_path = os.path.join(basedir, '.env')
if os.path.exists(dotenv_path):
    load_dotenv(dotenv_path)


def _env_float(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == '':
        return default
    try:
        return float(raw)
    except ValueError:
        print(f"WARNING: {name}={raw!r} is not a number, using {default}", file=sys.stderr)
        return default


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"WARNING: {name}={raw!r} is not an integer, using {default}", file=sys.stderr)
        return default


def _env_window(name):
    """Parses 'lo,hi' into a (lo, hi) delta window; unset means no window."""
    raw = os.environ.get(name)
    if not raw:
        return None
    try:
        lo, hi = (float(part) for part in raw.split(','))
    except ValueError:
        print(f"WARNING: {name}={raw!r} is not of the form 'lo,hi', ignoring", file=sys.stderr)
        return None
    return (lo, hi)


class Config:
    """Base configuration."""
    # Relative tolerance for metric axioms (largest of the three distances).
    METRIC_TOLERANCE = _env_float('LAB_METRIC_TOLERANCE', 1e-12)
    VIOLATION_CAP = _env_int('LAB_VIOLATION_CAP', 50)
    # Exact branch-and-bound up to this many points, greedy above.
    EXACT_PACKING_LIMIT = _env_int('LAB_EXACT_PACKING_LIMIT', 25)

    # Geometric weight ratio r of the weighted sequence space, w_k = (1-r) r^(k-1).
    WEIGHT_BASE = _env_float('LAB_WEIGHT_BASE', 0.5)

    BISECTION_TOLERANCE = _env_float('LAB_BISECTION_TOLERANCE', 1e-9)
    CERT_SLACK = _env_float('LAB_CERT_SLACK', 1e-12)
    CONTRACT_TOLERANCE = _env_float('LAB_CONTRACT_TOLERANCE', 1e-12)
    ORACLE_MAX_STEP = _env_int('LAB_ORACLE_MAX_STEP', 2 ** 20)
    SLOPE_WINDOW = _env_window('LAB_SLOPE_WINDOW')

    REPORT_SCHEMA_VERSION = _env_int('LAB_REPORT_SCHEMA_VERSION', 1)
    LOG_LEVEL = os.environ.get('LAB_LOG_LEVEL', 'INFO')

    # Origins allowed to call the JSON API (notebooks, dashboards)
    CORS_ORIGINS = os.environ.get('LAB_CORS_ORIGINS', '*')


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    LOG_LEVEL = os.environ.get('LAB_LOG_LEVEL', 'DEBUG')


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    # Tests pin the documented defaults regardless of the environment
    METRIC_TOLERANCE = 1e-12
    VIOLATION_CAP = 50
    EXACT_PACKING_LIMIT = 25
    WEIGHT_BASE = 0.5
    BISECTION_TOLERANCE = 1e-9
    CERT_SLACK = 1e-12
    CONTRACT_TOLERANCE = 1e-12
    SLOPE_WINDOW = None
    LOG_LEVEL = 'WARNING'


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False
    if Config.CORS_ORIGINS == '*':
        print("WARNING: LAB_CORS_ORIGINS is '*' in production.", file=sys.stderr)


# Dictionary to access config classes by name
config_by_name = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}

FLASK_ENV = os.environ.get('FLASK_ENV', 'default')
CurrentConfig = config_by_name.get(FLASK_ENV, DevelopmentConfig)
