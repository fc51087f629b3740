# app/loaders.py
"""Reading spaces and functions from CSV/JSON files, writing profiles and tables."""
from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path

import numpy as np

from .errors import InputFormatError, ParameterError
from .lip_core import LipFunction
from .metric_core import PointedMetricSpace, point_cloud_space

logger = logging.getLogger(__name__)

CLOUD_NORMS = {'1': 1, '2': 2, 'inf': np.inf}


def format_float(x):
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), '.17g')


def _read_text(path):
    path = Path(path)
    try:
        return path.read_text(encoding='utf-8')
    except OSError as e:
        raise InputFormatError(f"cannot read {path}: {e}") from e


def _floats(cells, where):
    try:
        return [float(c) for c in cells]
    except ValueError as e:
        raise InputFormatError(f"non-numeric entry in {where}: {e}") from e


def _sidecar_base(path, names):
    """Base point name from the sidecar '<stem>.base' file; first point when absent."""
    sidecar = Path(path).with_suffix('.base')
    if not sidecar.exists():
        logger.warning(f"no base-point sidecar {sidecar.name}; using first point {names[0]!r}")
        return 0
    name = sidecar.read_text(encoding='utf-8').strip()
    if name not in names:
        raise InputFormatError(f"sidecar base point {name!r} is not among the points")
    return names.index(name)


def load_space_json(path):
    try:
        doc = json.loads(_read_text(path))
        names = [str(p) for p in doc['points']]
        dist = np.array(doc['dist'], dtype=float)
        base_name = str(doc['base'])
    except (KeyError, TypeError, ValueError) as e:
        raise InputFormatError(f"{path}: expected fields points, dist, base ({e})") from e
    if base_name not in names:
        raise InputFormatError(f"{path}: base {base_name!r} is not among the points")
    return PointedMetricSpace(dist=dist, base=names.index(base_name), labels=tuple(names))


def load_space_csv(path):
    """Distance matrix with a header row of point names and each row led by its name."""
    rows = [row for row in csv.reader(io.StringIO(_read_text(path))) if row]
    if len(rows) < 2:
        raise InputFormatError(f"{path}: need a header row and at least one data row")
    names = [c.strip() for c in rows[0][1:]]
    body = rows[1:]
    if len(body) != len(names):
        raise InputFormatError(f"{path}: {len(names)} named columns but {len(body)} rows")
    dist = []
    for k, row in enumerate(body):
        if row[0].strip() != names[k]:
            raise InputFormatError(f"{path}: row {k + 1} is {row[0]!r}, expected {names[k]!r}")
        dist.append(_floats(row[1:], f"{path} row {k + 1}"))
    return PointedMetricSpace(dist=np.array(dist), base=_sidecar_base(path, names),
                              labels=tuple(names))


def load_point_cloud(path, p):
    """Rows 'label, x1, ..., xk' (header row first) under the l^p norm, p in {1, 2, inf}."""
    if isinstance(p, str):
        if p not in CLOUD_NORMS:
            raise ParameterError(f"point-cloud norm must be one of {sorted(CLOUD_NORMS)}, got {p!r}")
        p = CLOUD_NORMS[p]
    rows = [row for row in csv.reader(io.StringIO(_read_text(path))) if row]
    if len(rows) < 2:
        raise InputFormatError(f"{path}: need a header row and at least one point")
    names = [row[0].strip() for row in rows[1:]]
    coords = np.array([_floats(row[1:], f"{path} point {row[0]!r}") for row in rows[1:]])
    return point_cloud_space(coords, p=p, base=_sidecar_base(path, names), labels=tuple(names))


def load_space(path, cloud_norm=None):
    suffix = Path(path).suffix.lower()
    if suffix == '.json':
        return load_space_json(path)
    if suffix == '.csv':
        if cloud_norm is not None:
            return load_point_cloud(path, cloud_norm)
        return load_space_csv(path)
    raise InputFormatError(f"unsupported space file {path}; expected .json or .csv")


def load_function(path, space):
    """Function values by point label, from CSV rows (label, value) or JSON."""
    suffix = Path(path).suffix.lower()
    text = _read_text(path)
    if suffix == '.json':
        try:
            doc = json.loads(text)
        except ValueError as e:
            raise InputFormatError(f"{path}: invalid JSON ({e})") from e
        if isinstance(doc, dict) and 'values' in doc:
            doc = doc['values']
        if isinstance(doc, list):
            if len(doc) != space.n:
                raise InputFormatError(f"{path}: {len(doc)} values for {space.n} points")
            return LipFunction(space, _floats(doc, str(path)))
        if not isinstance(doc, dict):
            raise InputFormatError(f"{path}: expected a list or a label->value object")
        pairs = list(doc.items())
    elif suffix == '.csv':
        rows = [row for row in csv.reader(io.StringIO(text)) if row]
        if rows and rows[0][0].strip().lower() in ('label', 'point'):
            rows = rows[1:]
        pairs = [(row[0].strip(), row[1]) for row in rows]
    else:
        raise InputFormatError(f"unsupported function file {path}; expected .json or .csv")

    values = np.full(space.n, np.nan)
    for label, value in pairs:
        values[space.index_of(label)] = _floats([value], f"{path} point {label!r}")[0]
    missing = [space.label(i) for i in np.nonzero(np.isnan(values))[0]]
    if missing:
        raise InputFormatError(f"{path}: no value for points {missing[:5]}")
    return LipFunction(space, values)


def write_csv(rows, header, fh):
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(c) if isinstance(c, float) else c for c in row])
