# app/models.py
"""Run configuration and report documents shared by the CLI and the JSON API."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import get_setting
from .errors import ParameterError
from .lip_core import check_deltas

COMMANDS = ('validate', 'norm', 'snowflake', 'profile', 'mcshane', 'deleeuw',
            'embed', 'approx', 'threeball', 'lproj')
# Commands with a tabular result that can be written as CSV
CSV_COMMANDS = ('profile', 'mcshane', 'deleeuw', 'embed', 'approx', 'threeball')
FORMATS = ('json', 'csv')
SCENARIOS = ('sequence', 'deleeuw')
BUILTIN_FUNCTIONS = ('power', 'zero', 'random')
# Commands that work on the snowflaked space and need an exponent
ALPHA_REQUIRED = ('snowflake', 'approx')

_FLOAT_FIELDS = ('alpha', 'beta', 'eps', 'weight_base')
_INT_FIELDS = ('n', 'points', 'seed', 'r')


@dataclass
class RunConfig:
    """One batch run: a command plus its inputs and numeric parameters."""
    command: str
    input: str | None = None
    function: str | None = None
    alpha: float | None = None
    beta: float | None = None
    eps: float | None = None
    n: int | None = None
    points: int | None = None
    deltas: tuple[float, ...] | None = None
    seed: int = 0
    out: str | None = None
    fmt: str = 'json'
    r: int | None = None
    weight_base: float | None = None
    scenario: str = 'sequence'
    cloud_norm: str | None = None

    @classmethod
    def from_dict(cls, command, doc):
        """Builds a config from a JSON body; unknown keys are rejected."""
        doc = dict(doc or {})
        if 'format' in doc:
            doc['fmt'] = doc.pop('format')
        known = {f.name for f in fields(cls)} - {'command'}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ParameterError(f"unknown run parameters: {unknown}")
        try:
            for name in _FLOAT_FIELDS:
                if doc.get(name) is not None:
                    doc[name] = float(doc[name])
            for name in _INT_FIELDS:
                if doc.get(name) is not None:
                    doc[name] = int(doc[name])
            if doc.get('deltas') is not None:
                doc['deltas'] = tuple(float(d) for d in doc['deltas'])
        except (TypeError, ValueError) as e:
            raise ParameterError(f"malformed run parameter: {e}") from e
        return cls(command=command, **doc)

    def validate(self):
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}, expected one of {COMMANDS}")
        if self.fmt not in FORMATS:
            raise ParameterError(f"format must be one of {FORMATS}, got {self.fmt!r}")
        if self.fmt == 'csv' and self.command not in CSV_COMMANDS:
            raise ParameterError(f"command {self.command!r} has no CSV output")
        if self.scenario not in SCENARIOS:
            raise ParameterError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.command in ALPHA_REQUIRED and self.alpha is None:
            raise ParameterError(f"command {self.command!r} needs --alpha")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.command == 'approx' and self.alpha == 1:
            raise ParameterError("approximation needs alpha < 1")
        if self.beta is not None and not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.eps is not None and not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if self.n is not None and self.n < 1:
            raise ParameterError(f"n must be at least 1, got {self.n}")
        if self.points is not None and self.points < 2:
            raise ParameterError(f"points must be at least 2, got {self.points}")
        if self.deltas is not None:
            check_deltas(self.deltas)
        if self.weight_base is not None and not 0 < self.weight_base < 1:
            raise ParameterError(f"weight base must lie in (0, 1), got {self.weight_base}")
        if self.r is not None and self.eps is not None and not self.r > 1.0 / self.eps:
            raise ParameterError(f"r={self.r} must exceed 1/eps={1.0 / self.eps}")
        return self

    def to_dict(self):
        doc = asdict(self)
        if doc['deltas'] is not None:
            doc['deltas'] = list(doc['deltas'])
        return doc


@dataclass(frozen=True)
class Check:
    """A named pass/fail entry of the report's machine-readable block."""
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {'name': self.name, 'passed': bool(self.passed), 'detail': self.detail}


def _plain(value):
    """numpy scalars and arrays to JSON-native values."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict
    checks: list
    table: tuple | None = None
    schema_version: int | None = None

    def __post_init__(self):
        if self.schema_version is None:
            self.schema_version = get_setting('REPORT_SCHEMA_VERSION')

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def to_dict(self):
        return {
            'schema_version': self.schema_version,
            'command': self.command,
            'config': self.config,
            'results': self.results,
            'checks': [check.to_dict() for check in self.checks],
            'passed': self.passed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_plain) + '\n'
