# app/metric_core.py
"""Finite pointed metric spaces: validation, snowflaking, grids and packings."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import get_setting
from .errors import DimensionError, MetricError, ParameterError

logger = logging.getLogger(__name__)

_CLOUD_METRICS = {1: 'cityblock', 2: 'euclidean', np.inf: 'chebyshev'}


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PointedMetricSpace:
    """A finite metric space with a distinguished base point.

    `coords` is kept when the space comes from coordinates (interval grids, point
    clouds) so that functions can be defined by formulas on the points.
    """
    dist: np.ndarray
    base: int = 0
    labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = None

    def __post_init__(self):
        dist = _frozen(self.dist)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise DimensionError(f"distance matrix must be square, got shape {dist.shape}")
        n = dist.shape[0]
        if n < 1:
            raise DimensionError("a metric space needs at least one point")
        if not 0 <= self.base < n:
            raise ParameterError(f"base index {self.base} outside 0..{n - 1}")
        if self.labels is not None and len(self.labels) != n:
            raise DimensionError(f"{len(self.labels)} labels for {n} points")
        object.__setattr__(self, 'dist', dist)
        object.__setattr__(self, 'base', int(self.base))
        if self.labels is not None:
            object.__setattr__(self, 'labels', tuple(str(label) for label in self.labels))
        if self.coords is not None:
            coords = _frozen(self.coords)
            if coords.ndim == 1:
                coords = _frozen(coords[:, None])
            if coords.shape[0] != n:
                raise DimensionError(f"{coords.shape[0]} coordinate rows for {n} points")
            object.__setattr__(self, 'coords', coords)

    @property
    def n(self):
        return self.dist.shape[0]

    @property
    def diameter(self):
        return float(self.dist.max())

    @property
    def min_positive_distance(self):
        """Smallest off-diagonal distance; +inf for a one-point space."""
        if self.n < 2:
            return float('inf')
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    def label(self, i):
        return self.labels[i] if self.labels is not None else str(i)

    def index_of(self, label):
        if self.labels is None:
            try:
                index = int(label)
            except ValueError:
                raise ParameterError(f"unknown point label {label!r}") from None
            if not 0 <= index < self.n:
                raise ParameterError(f"point index {index} outside 0..{self.n - 1}")
            return index
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise ParameterError(f"unknown point label {label!r}") from None

    def to_dict(self):
        return {
            'points': [self.label(i) for i in range(self.n)],
            'dist': self.dist.tolist(),
            'base': self.label(self.base),
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    i: int
    j: int
    k: int
    defect: float

    def to_dict(self):
        return {'kind': self.kind, 'i': self.i, 'j': self.j, 'k': self.k, 'defect': self.defect}


@dataclass(frozen=True)
class MetricValidationReport:
    violations: list[Violation] = field(default_factory=list)
    truncated: bool = False

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {
            'ok': self.ok,
            'truncated': self.truncated,
            'violations': [v.to_dict() for v in self.violations],
        }


class _WorstViolations:
    """Keeps the `cap` largest defects seen so far and counts everything."""

    def __init__(self, cap):
        self.cap = cap
        self.total = 0
        self._seq = 0
        self._heap = []

    def add(self, violation):
        self.total += 1
        self._seq += 1
        if self.cap <= 0:
            return
        # ties keep the violation found first
        item = (violation.defect, -self._seq, violation)
        if len(self._heap) < self.cap:
            heapq.heappush(self._heap, item)
        elif item[:2] > self._heap[0][:2]:
            heapq.heapreplace(self._heap, item)

    def skip(self, count):
        self.total += count

    def report(self):
        worst = [v for _, _, v in sorted(self._heap, key=lambda e: (-e[0], -e[1]))]
        truncated = self.total > self.cap
        if truncated:
            logger.warning(f"{self.total} metric violations, reporting the worst {self.cap}")
        return MetricValidationReport(violations=worst, truncated=truncated)


def validate_metric(dist, tolerance=None, cap=None):
    """Checks every metric axiom of a square matrix and reports the worst failures.

    Symmetry and the triangle inequality are compared with a tolerance relative to
    the largest distance involved; the diagonal must be exactly zero and
    off-diagonal entries strictly positive. At most `cap` violations are kept in
    memory.
    """
    tolerance = get_setting('METRIC_TOLERANCE', tolerance)
    cap = get_setting('VIOLATION_CAP', cap)
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    found = _WorstViolations(cap)

    bad = ~np.isfinite(d)
    if bad.any():
        for i, j in zip(*np.nonzero(bad)):
            found.add(Violation('non_finite', int(i), int(j), int(j), float('inf')))
        return found.report()

    for i in np.nonzero(np.diag(d) != 0)[0]:
        found.add(Violation('diagonal', int(i), int(i), int(i), abs(float(d[i, i]))))

    off = ~np.eye(n, dtype=bool)
    for i, j in zip(*np.nonzero(off & (d <= 0))):
        found.add(Violation('non_positive', int(i), int(j), int(j), float(-d[i, j])))

    asym = np.abs(d - d.T)
    scale = np.maximum(np.abs(d), np.abs(d.T))
    for i, j in zip(*np.nonzero(np.triu(asym > tolerance * scale, k=1))):
        found.add(Violation('asymmetry', int(i), int(j), int(j), float(asym[i, j])))

    # One intermediate point at a time keeps memory at O(n^2)
    for j in range(n):
        via = d[:, j][:, None] + d[j, :][None, :]
        defect = d - via
        largest = np.maximum(d, np.maximum(d[:, j][:, None], d[j, :][None, :]))
        mask = defect > tolerance * largest
        mask[j, :] = False
        mask[:, j] = False
        np.fill_diagonal(mask, False)
        ii, kk = np.nonzero(mask)
        if ii.size > cap:
            keep = max(cap, 0)
            found.skip(ii.size - keep)
            if keep == 0:
                continue
            top = np.sort(np.argpartition(-defect[ii, kk], keep - 1)[:keep])
            ii, kk = ii[top], kk[top]
        for i, k in zip(ii, kk):
            found.add(Violation('triangle', int(i), j, int(k), float(defect[i, k])))

    return found.report()


def require_metric(dist, tolerance=None):
    report = validate_metric(dist, tolerance=tolerance)
    if not report.ok:
        worst = report.violations[0]
        raise MetricError(
            f"not a metric: {worst.kind} at ({worst.i}, {worst.j}, {worst.k})",
            violations=[v.to_dict() for v in report.violations[:5]],
        )
    return report


def snowflake(space, alpha):
    """Re-metrizes `space` with d**alpha (0 < alpha <= 1)."""
    if not 0 < alpha <= 1:
        raise ParameterError(f"snowflake exponent must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return space
    return PointedMetricSpace(
        dist=space.dist ** alpha, base=space.base, labels=space.labels, coords=space.coords
    )


def interval_space(n, alpha=1.0):
    """Uniform n-point grid t_k = k/(n-1) of [0, 1] with metric |s-t|**alpha, based at 0."""
    if n < 2:
        raise ParameterError(f"interval grid needs at least 2 points, got {n}")
    if not 0 < alpha <= 1:
        raise ParameterError(f"Hoelder exponent must lie in (0, 1], got {alpha}")
    k = np.arange(n)
    t = k / (n - 1)
    # integer index gaps keep grid distances such as 0.25 exact
    dist = np.abs(k[:, None] - k[None, :]) / (n - 1)
    if alpha != 1:
        dist = dist ** alpha
    return PointedMetricSpace(dist=dist, base=0, coords=t)


def point_cloud_space(coords, p=2, base=0, labels=None):
    """Space of points in R^k under the l1, l2 or l-infinity norm."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if p not in _CLOUD_METRICS:
        raise ParameterError(f"point clouds support p in {{1, 2, inf}}, got {p}")
    dist = cdist(coords, coords, metric=_CLOUD_METRICS[p])
    np.fill_diagonal(dist, 0.0)
    return PointedMetricSpace(dist=dist, base=base, labels=labels, coords=coords)


def subspace(space, indices):
    """Induced subspace on `indices` (in that order); the base point must be kept."""
    indices = [int(i) for i in indices]
    if space.base not in indices:
        raise ParameterError("a pointed subspace must contain the base point")
    if len(set(indices)) != len(indices):
        raise ParameterError("subspace indices must be distinct")
    idx = np.asarray(indices)
    return PointedMetricSpace(
        dist=space.dist[np.ix_(idx, idx)],
        base=indices.index(space.base),
        labels=None if space.labels is None else tuple(space.labels[i] for i in indices),
        coords=None if space.coords is None else space.coords[idx],
    )


def default_enumeration(space):
    """Base point first, then the remaining points in input order."""
    return [space.base] + [i for i in range(space.n) if i != space.base]


def farthest_point_enumeration(space):
    """Greedy farthest-point order starting at the base point (ties to lowest index).

    On a dyadic grid of [0, 1] this is the breadth-first dyadic order 0, 1, 1/2,
    1/4, 3/4, 1/8, ..., a refining dense sequence.
    """
    order = [space.base]
    gap = space.dist[space.base].copy()
    gap[space.base] = -1.0
    for _ in range(space.n - 1):
        nxt = int(np.argmax(gap))
        order.append(nxt)
        gap = np.minimum(gap, space.dist[nxt])
        gap[order] = -1.0
    return order


@dataclass(frozen=True)
class SeparatedSet:
    indices: tuple[int, ...]
    exact: bool

    def __len__(self):
        return len(self.indices)

    def to_dict(self):
        return {'indices': list(self.indices), 'size': len(self.indices), 'exact': self.exact}


def max_separated_set(space, delta, exact_limit=None):
    """Largest subset with pairwise distances >= delta.

    Exact (branch and bound on the conflict graph) for spaces of at most
    `exact_limit` points; above that a greedy set is returned with `exact=False`,
    which is only a lower bound on the packing number.
    """
    if not delta > 0:
        raise ParameterError(f"separation must be positive, got {delta}")
    exact_limit = get_setting('EXACT_PACKING_LIMIT', exact_limit)
    n = space.n
    conflict = (space.dist < delta) & ~np.eye(n, dtype=bool)
    if n <= exact_limit:
        chosen = _branch_and_bound(conflict)
        return SeparatedSet(indices=tuple(sorted(chosen)), exact=True)
    logger.warning(f"{n} points exceed the exact packing limit {exact_limit}; using greedy")
    return SeparatedSet(indices=tuple(sorted(_greedy_independent(conflict))), exact=False)


def _greedy_independent(conflict):
    degree = conflict.sum(axis=1)
    chosen = []
    blocked = np.zeros(conflict.shape[0], dtype=bool)
    for v in np.argsort(degree, kind='stable'):
        if not blocked[v]:
            chosen.append(int(v))
            blocked |= conflict[v]
            blocked[v] = True
    return chosen


def _branch_and_bound(conflict):
    """Maximum independent set with bitmask branching and a size bound."""
    n = conflict.shape[0]
    adj = [sum(1 << int(u) for u in np.nonzero(conflict[v])[0]) for v in range(n)]
    best = 0
    for v in _greedy_independent(conflict):
        best |= 1 << v

    def expand(chosen, candidates):
        nonlocal best
        if candidates == 0:
            if chosen.bit_count() > best.bit_count():
                best = chosen
            return
        if chosen.bit_count() + candidates.bit_count() <= best.bit_count():
            return
        # Branch on the candidate with most conflicts inside the candidate set
        pivot, pivot_degree = -1, -1
        rest = candidates
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            degree = (adj[v] & candidates).bit_count()
            if degree > pivot_degree:
                pivot, pivot_degree = v, degree
            rest ^= low
        bit = 1 << pivot
        if pivot_degree == 0:
            # No conflicts left: take everything
            expand(chosen | candidates, 0)
            return
        expand(chosen | bit, candidates & ~adj[pivot] & ~bit)
        expand(chosen, candidates & ~bit)

    expand(0, (1 << n) - 1)
    return [v for v in range(n) if best >> v & 1]
