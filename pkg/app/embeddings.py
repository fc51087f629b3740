# app/embeddings.py
"""The de Leeuw pair embedding and the weighted-sequence embedding of Lip_0(M)."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import get_setting
from .errors import DimensionError, ParameterError
from .lip_core import check_deltas, running_scale_constants, sup_norm
from .metric_core import default_enumeration, max_separated_set, subspace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PairSpace:
    """All ordered off-diagonal pairs (i, j), i != j, in row-major order."""
    space: object
    pairs: np.ndarray
    pair_dist: np.ndarray

    @classmethod
    def of(cls, space):
        i, j = np.nonzero(~np.eye(space.n, dtype=bool))
        pairs = np.stack([i, j], axis=1)
        pairs.setflags(write=False)
        pair_dist = space.dist[i, j].copy()
        pair_dist.setflags(write=False)
        return cls(space=space, pairs=pairs, pair_dist=pair_dist)

    def __len__(self):
        return self.pairs.shape[0]

    def index(self, i, j):
        """Position of the ordered pair (i, j)."""
        if i == j:
            raise ParameterError("diagonal pairs are not part of the pair space")
        n = self.space.n
        return i * (n - 1) + (j if j < i else j - 1)

    def swap_permutation(self):
        """Positions of (j, i) for each pair (i, j)."""
        n = self.space.n
        i, j = self.pairs[:, 0], self.pairs[:, 1]
        return j * (n - 1) + np.where(i < j, i, i - 1)

    def compact(self, delta):
        """Mask of K_delta = pairs at distance >= delta."""
        return self.pair_dist >= delta


@dataclass(frozen=True, eq=False)
class PairFunction:
    pair_space: PairSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.pair_space),):
            raise DimensionError(f"expected {len(self.pair_space)} pair values, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def sup_norm(self):
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def swapped(self):
        return PairFunction(self.pair_space, self.values[self.pair_space.swap_permutation()])

    def __add__(self, other):
        return PairFunction(self.pair_space, self.values + other.values)

    def __sub__(self, other):
        return PairFunction(self.pair_space, self.values - other.values)

    def __mul__(self, scalar):
        return PairFunction(self.pair_space, float(scalar) * self.values)

    __rmul__ = __mul__

    def rows(self):
        """(i, j, d, value) rows for export."""
        ps = self.pair_space
        return [
            (int(i), int(j), float(d), float(v))
            for (i, j), d, v in zip(ps.pairs, ps.pair_dist, self.values)
        ]


def deleeuw_map(F, pair_space=None):
    """(Phi F)(s, t) = (F(s) - F(t)) / d(s, t) on ordered pairs.

    Signed, hence linear; its sup norm is the Lipschitz norm of F.
    """
    ps = pair_space if pair_space is not None else PairSpace.of(F.space)
    i, j = ps.pairs[:, 0], ps.pairs[:, 1]
    return PairFunction(ps, (F.values[i] - F.values[j]) / ps.pair_dist)


def c0_profile(f, deltas):
    """sup |f| over pairs at distance below delta, for each delta (0 when none)."""
    deltas = check_deltas(deltas)
    return running_scale_constants(np.abs(f.values), f.pair_space.pair_dist, deltas)


def compact_deviation(f, F, delta):
    """Deviation of the de Leeuw images on K_delta and the bound (2/delta)||f - F||_inf."""
    if not delta > 0:
        raise ParameterError(f"scale must be positive, got {delta}")
    ps = PairSpace.of(F.space)
    gap = np.abs(deleeuw_map(f, ps).values - deleeuw_map(F, ps).values)
    on_k = gap[ps.compact(delta)]
    deviation = float(on_k.max()) if on_k.size else 0.0
    return deviation, 2.0 / delta * sup_norm(f - F)


# --- Weighted sequence space ---

def _weights(size, weight_base):
    if not 0 < weight_base < 1:
        raise ParameterError(f"weight base must lie in (0, 1), got {weight_base}")
    k = np.arange(size)
    return (1.0 - weight_base) * weight_base ** k


@dataclass(frozen=True, eq=False)
class WeightedSeqVector:
    """Finite section of the weighted l2 space with weights (1-r) r^(k-1), k = 1..N."""
    entries: np.ndarray
    weight_base: float = 0.5

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        _weights(1, self.weight_base)

    @property
    def weights(self):
        return _weights(self.entries.size, self.weight_base)

    def norm(self):
        return float(np.sqrt(np.sum(self.entries ** 2 * self.weights)))

    def __sub__(self, other):
        if other.entries.shape != self.entries.shape or other.weight_base != self.weight_base:
            raise DimensionError("weighted vectors differ in length or weights")
        return WeightedSeqVector(self.entries - other.entries, self.weight_base)

    def to_list(self):
        return self.entries.tolist()


@dataclass(frozen=True)
class DiffQuotientFunctional:
    """x -> (x_n - x_m) / d(p_n, p_m) for positions n != m of an enumeration."""
    n: int
    m: int
    distance: float

    def __post_init__(self):
        if self.n == self.m:
            raise ParameterError("difference quotient needs two distinct positions")
        if not self.distance > 0:
            raise ParameterError("difference quotient needs a positive distance")

    @property
    def scale(self):
        return 1.0 / self.distance

    def __call__(self, x):
        return (x.entries[self.n] - x.entries[self.m]) / self.distance


def check_enumeration(space, enumeration):
    if enumeration is None:
        return default_enumeration(space)
    enumeration = [int(p) for p in enumeration]
    if sorted(enumeration) != list(range(space.n)):
        raise ParameterError("enumeration must be a permutation of the points")
    if enumeration[0] != space.base:
        raise ParameterError("enumeration must start at the base point")
    return enumeration


def functionals(space, enumeration=None):
    enumeration = check_enumeration(space, enumeration)
    for n, pn in enumerate(enumeration):
        for m, pm in enumerate(enumeration):
            if n != m:
                yield DiffQuotientFunctional(n, m, float(space.dist[pn, pm]))


def sequence_embed(F, enumeration=None, weight_base=None):
    """x_F = (F(p_1), ..., F(p_N)) along an enumeration starting at the base point."""
    weight_base = get_setting('WEIGHT_BASE', weight_base)
    enumeration = check_enumeration(F.space, enumeration)
    return WeightedSeqVector(F.values[enumeration], weight_base)


def functional_sup(F, enumeration=None):
    """sup over all l_{n,m} of |l_{n,m}(x_F)|; equals the Lipschitz norm of F."""
    enumeration = check_enumeration(F.space, enumeration)
    if F.space.n < 2:
        return 0.0
    x = F.values[enumeration]
    order = np.asarray(enumeration)
    d = F.space.dist[np.ix_(order, order)]
    a, b = np.triu_indices(len(order), k=1)
    return float((np.abs(x[a] - x[b]) / d[a, b]).max())


def sequence_gap(f, F, enumeration=None, weight_base=None):
    """(||x_f - x_F||_X, ||f - F||_inf); the first never exceeds the second."""
    gap = sequence_embed(f, enumeration, weight_base) - sequence_embed(F, enumeration, weight_base)
    return gap.norm(), sup_norm(f - F)


@dataclass(frozen=True)
class MembershipBound:
    delta: float
    exceptional_pairs: int
    packing_size: int
    packing_bound: int
    packing_exact: bool

    @property
    def infinite(self):
        return self.delta == float('inf')

    @property
    def packing_consistent(self):
        if self.exceptional_pairs == 0:
            return self.packing_size == 0
        return 2 <= self.packing_size <= self.packing_bound or not self.packing_exact

    def to_dict(self):
        return {
            'delta': None if self.infinite else self.delta,
            'infinite': self.infinite,
            'exceptional_pairs': self.exceptional_pairs,
            'packing_size': self.packing_size,
            'packing_bound': self.packing_bound,
            'packing_exact': self.packing_exact,
            'packing_consistent': self.packing_consistent,
        }


def offending_min_distance(values, distances, eps, slack=0.0):
    """Smallest distance among entries with |value| >= eps (relative slack) and their count."""
    offending = np.abs(values) >= eps * (1 - slack)
    count = int(offending.sum())
    if count == 0:
        return float('inf'), 0, offending
    return float(distances[offending].min()), count, offending


def c0_membership_bound(F, eps, exact_limit=None, slack=None):
    """Largest delta with every ordered pair of quotient >= eps at distance >= delta.

    Also packs the endpoints of those pairs at separation delta and compares the
    result with the packing number of the whole space.
    """
    if not eps > 0:
        raise ParameterError(f"epsilon must be positive, got {eps}")
    slack = get_setting('CERT_SLACK', slack)
    phi = deleeuw_map(F)
    ps = phi.pair_space
    delta, count, offending = offending_min_distance(phi.values, ps.pair_dist, eps, slack)
    if count == 0:
        return MembershipBound(delta, 0, 0, 0, True)
    endpoints = sorted(set(ps.pairs[offending].ravel().tolist()) | {F.space.base})
    sub = subspace(F.space, endpoints)
    inner = max_separated_set(sub, delta, exact_limit)
    outer = max_separated_set(F.space, delta, exact_limit)
    inner_size = len(inner)
    return MembershipBound(
        delta=delta,
        exceptional_pairs=count,
        packing_size=inner_size,
        packing_bound=len(outer),
        packing_exact=inner.exact and outer.exact,
    )
