# app/lip_core.py
"""Lipschitz functions on finite pointed metric spaces."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import get_setting
from .errors import DimensionError, ParameterError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LipFunction:
    """Real values on the points of `space`, vanishing at the base point."""
    space: object
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.space.n,):
            raise DimensionError(f"expected {self.space.n} values, got shape {values.shape}")
        if values[self.space.base] != 0:
            raise ParameterError(
                f"function must vanish at the base point, got {values[self.space.base]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_coordinates(cls, space, fn):
        """Builds F - F(p) from a callable on the point coordinates."""
        if space.coords is None:
            raise ParameterError("space has no coordinates to evaluate a formula on")
        coords = space.coords[:, 0] if space.coords.shape[1] == 1 else space.coords
        raw = np.asarray(fn(coords), dtype=float)
        return cls(space, raw - raw[space.base])

    @classmethod
    def zero(cls, space):
        return cls(space, np.zeros(space.n))

    def on(self, space):
        """Same values on another space over the same points (e.g. a snowflake)."""
        return LipFunction(space, self.values)

    def _check_same_space(self, other):
        if other.space is self.space:
            return
        mine, theirs = self.space, other.space
        if theirs.n != mine.n or theirs.base != mine.base or not np.array_equal(theirs.dist, mine.dist):
            raise DimensionError("functions live on different spaces")

    def __add__(self, other):
        self._check_same_space(other)
        return LipFunction(self.space, self.values + other.values)

    def __sub__(self, other):
        self._check_same_space(other)
        return LipFunction(self.space, self.values - other.values)

    def __mul__(self, scalar):
        return LipFunction(self.space, float(scalar) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def random_lip_function(space, rng, norm=1.0):
    """Random function vanishing at the base point, scaled to the given Lipschitz norm."""
    raw = rng.uniform(-1.0, 1.0, size=space.n)
    F = LipFunction(space, raw - raw[space.base])
    current = lip_norm(F)
    if current == 0:
        return F
    return F * (norm / current)


def _upper_pairs(space):
    return np.triu_indices(space.n, k=1)


def _quotients(F):
    """Absolute difference quotients and distances over unordered pairs i < j."""
    i, j = _upper_pairs(F.space)
    d = F.space.dist[i, j]
    return np.abs(F.values[i] - F.values[j]) / d, d, i, j


def lip_norm(F):
    """sup_{s != t} |F(s) - F(t)| / d(s, t), exact over all unordered pairs."""
    if F.space.n < 2:
        return 0.0
    q, _, _, _ = _quotients(F)
    return float(q.max())


def lip_norm_witness(F):
    """The pair (s, t) attaining the Lipschitz constant, or None on a one-point space."""
    if F.space.n < 2:
        return None
    q, _, i, j = _quotients(F)
    k = int(np.argmax(q))
    return int(i[k]), int(j[k])


def sup_norm(F):
    return float(np.abs(F.values).max())


def scale_lip_constant(F, delta):
    """Lipschitz constant restricted to pairs at distance below delta (0 if there are none)."""
    if not delta > 0:
        raise ParameterError(f"scale must be positive, got {delta}")
    if F.space.n < 2:
        return 0.0
    q, d, _, _ = _quotients(F)
    small = q[d < delta]
    return float(small.max()) if small.size else 0.0


@dataclass(frozen=True)
class ScaleProfile:
    deltas: tuple[float, ...]
    constants: tuple[float, ...]
    slope: float | None

    @property
    def slope_defined(self):
        return self.slope is not None

    def rows(self):
        return list(zip(self.deltas, self.constants))

    def to_dict(self):
        return {
            'deltas': list(self.deltas),
            'constants': list(self.constants),
            'slope': self.slope,
            'slope_defined': self.slope_defined,
        }


def check_deltas(deltas):
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or deltas.size == 0:
        raise ParameterError("need a non-empty list of scales")
    if np.any(deltas <= 0):
        raise ParameterError("scales must be positive")
    if np.any(np.diff(deltas) >= 0):
        raise ParameterError("scales must be strictly decreasing")
    return deltas


def running_scale_constants(quotients, distances, deltas):
    """sup of `quotients` over distances < delta, for every delta, in one sorted sweep."""
    deltas = np.asarray(deltas, dtype=float)
    if quotients.size == 0:
        return np.zeros(deltas.size)
    order = np.argsort(distances, kind='stable')
    sorted_d = distances[order]
    running = np.maximum.accumulate(quotients[order])
    counts = np.searchsorted(sorted_d, deltas, side='left')
    return np.where(counts > 0, running[np.maximum(counts - 1, 0)], 0.0)


def fit_log_slope(deltas, constants, window=None):
    """Least-squares slope of log(constant) against log(delta) over positive constants."""
    deltas = np.asarray(deltas, dtype=float)
    constants = np.asarray(constants, dtype=float)
    keep = constants > 0
    if window is not None:
        lo, hi = window
        keep &= (deltas >= lo) & (deltas <= hi)
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(deltas[keep]), np.log(constants[keep]), 1)
    return float(slope)


def scale_profile(F, deltas, window=None):
    """Scale-local Lipschitz constants along decreasing deltas plus their log-log slope."""
    deltas = check_deltas(deltas)
    window = get_setting('SLOPE_WINDOW', window)
    if F.space.n < 2:
        constants = np.zeros(deltas.size)
    else:
        q, d, _, _ = _quotients(F)
        constants = running_scale_constants(q, d, deltas)
    slope = fit_log_slope(deltas, constants, window)
    if slope is None:
        logger.debug("scale profile has fewer than two positive constants; slope undefined")
    return ScaleProfile(
        deltas=tuple(float(x) for x in deltas),
        constants=tuple(float(c) for c in constants),
        slope=slope,
    )


def partial_lip_constant(g, dist):
    """Lipschitz constant of a partial function {index: value} and its worst pair."""
    idx = np.fromiter(g.keys(), dtype=int)
    vals = np.fromiter(g.values(), dtype=float)
    if idx.size < 2:
        return 0.0, None
    a, b = np.triu_indices(idx.size, k=1)
    q = np.abs(vals[a] - vals[b]) / dist[idx[a], idx[b]]
    k = int(np.argmax(q))
    return float(q[k]), (int(idx[a[k]]), int(idx[b[k]]))


MCSHANE_MODES = ('min', 'max', 'mid')


def mcshane_extend(g, L, space, mode='min', slack=None):
    """Extends the partial function g = {index: value} to all of `space` with constant L.

    mode 'min' is the McShane formula min_q g(q) + L d(x, q), 'max' the Whitney
    formula max_q g(q) - L d(x, q), 'mid' their average. Values on the domain of
    g are reproduced exactly. L=None uses the tight constant of g.
    """
    if not g:
        raise ParameterError("cannot extend a function with empty domain")
    if mode not in MCSHANE_MODES:
        raise ParameterError(f"unknown extension mode {mode!r}, expected one of {MCSHANE_MODES}")
    slack = get_setting('CERT_SLACK', slack)
    tight, pair = partial_lip_constant(g, space.dist)
    if L is None:
        L = tight
    if L < 0:
        raise ParameterError(f"Lipschitz bound must be nonnegative, got {L}")
    if tight > L * (1 + slack):
        raise PreconditionError(
            f"Lipschitz constant {tight!r} of the data exceeds the bound {L!r}",
            pair=pair, constant=tight, bound=L,
        )
    idx = np.fromiter(g.keys(), dtype=int)
    vals = np.fromiter(g.values(), dtype=float)
    # L may sit below the data's constant by up to the slack
    cones = max(L, tight) * space.dist[:, idx]
    if mode == 'min':
        G = (vals[None, :] + cones).min(axis=1)
    elif mode == 'max':
        G = (vals[None, :] - cones).max(axis=1)
    else:
        G = 0.5 * ((vals[None, :] + cones).min(axis=1) + (vals[None, :] - cones).max(axis=1))
    G[idx] = vals
    return G
