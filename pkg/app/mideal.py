# app/mideal.py
"""L-projections, the 3-ball property and its constructive witness in sup-norm models."""
from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import get_setting
from .approx import little_lip_approximant, truncation_oracle
from .embeddings import PairSpace, deleeuw_map, offending_min_distance
from .errors import (
    DimensionError,
    InfeasibleError,
    InvariantError,
    OracleContractError,
    ParameterError,
    PreconditionError,
)
from .lip_core import random_lip_function

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SupModel:
    """Finitely many sites with the sup norm; E0 = functions vanishing off `support`."""
    sites: int
    support: np.ndarray

    def __post_init__(self):
        support = np.array(self.support, dtype=bool)
        if support.shape != (self.sites,):
            raise DimensionError(f"support mask of shape {support.shape} for {self.sites} sites")
        support.setflags(write=False)
        object.__setattr__(self, 'support', support)

    @classmethod
    def prefix(cls, sites, support_size):
        """c0 inside l-infinity, truncated: E0 lives on the first `support_size` sites."""
        if not 0 < support_size <= sites:
            raise ParameterError(f"support size must lie in 1..{sites}, got {support_size}")
        return cls(sites, np.arange(sites) < support_size)

    @classmethod
    def full(cls, sites):
        return cls(sites, np.ones(sites, dtype=bool))

    @property
    def e0_support(self):
        return np.nonzero(self.support)[0].tolist()

    @property
    def is_proper(self):
        return bool(self.support.any() and not self.support.all())

    def in_e0(self, v, tolerance=0.0):
        return bool(np.all(np.abs(np.asarray(v)[~self.support]) <= tolerance))

    def to_dict(self):
        return {'sites': self.sites, 'e0_support': self.e0_support}


def norm(v, mask=None):
    """Sup norm of v, optionally restricted to a site mask (0 on an empty mask)."""
    v = np.abs(np.asarray(v, dtype=float))
    if mask is not None:
        v = v[np.asarray(mask, dtype=bool)]
    return float(v.max()) if v.size else 0.0


# --- L-projection identity ---

@dataclass(frozen=True)
class LProjectionCheck:
    lhs: float
    rhs: float
    ok: bool

    def to_dict(self):
        return {'lhs': self.lhs, 'rhs': self.rhs, 'ok': self.ok}


def _as_mask(index_set, size):
    index_set = np.asarray(index_set)
    if index_set.dtype == bool:
        if index_set.shape != (size,):
            raise DimensionError(f"mask of shape {index_set.shape} for {size} sites")
        return index_set
    mask = np.zeros(size, dtype=bool)
    idx = index_set.astype(int)
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise ParameterError(f"site index outside 0..{size - 1}")
    mask[idx] = True
    return mask


def l_projection_check(xstar, support, tolerance=None):
    """||x*||_1 against ||P x*||_1 + ||x* - P x*||_1 with P the restriction to `support`."""
    tolerance = get_setting('CERT_SLACK', tolerance)
    x = np.asarray(xstar, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParameterError("dual vector must be finite")
    mask = _as_mask(support, x.size)
    lhs = math.fsum(np.abs(x))
    rhs = math.fsum(np.abs(x[mask])) + math.fsum(np.abs(x[~mask]))
    return LProjectionCheck(lhs, rhs, abs(lhs - rhs) <= tolerance * max(1.0, lhs))


# --- 3-ball property: exact optimum ---

@dataclass(frozen=True, eq=False)
class ThreeBallOptimum:
    value: float
    y: np.ndarray

    def to_dict(self):
        return {'value': self.value, 'y': self.y.tolist()}


def _stack(f, gs):
    f = np.asarray(f, dtype=float)
    gs = np.asarray(gs, dtype=float)
    if gs.shape != (3, f.size):
        raise DimensionError(f"need three vectors of length {f.size}, got shape {gs.shape}")
    return f, gs


def check_admissible(f, gs, model, tolerance=None):
    tolerance = get_setting('CONTRACT_TOLERANCE', tolerance)
    f, gs = _stack(f, gs)
    if f.size != model.sites:
        raise DimensionError(f"vectors have {f.size} entries for {model.sites} sites")
    if norm(f) > 1 + tolerance:
        raise PreconditionError(f"||f|| = {norm(f)!r} exceeds 1")
    for i, g in enumerate(gs, start=1):
        if norm(g) > 1 + tolerance:
            raise PreconditionError(f"||g{i}|| = {norm(g)!r} exceeds 1")
        if not model.in_e0(g):
            raise PreconditionError(f"g{i} does not vanish off the E0 support")
    return f, gs


def three_ball_oracle(f, g1, g2, g3, model):
    """Exact min over y in E0 of max_i ||f + g_i - y||.

    On support sites y is the Chebyshev center of the three values f + g_i,
    off the support y is 0.
    """
    f, gs = check_admissible(f, [g1, g2, g3], model)
    v = f[None, :] + gs
    hi, lo = v.max(axis=0), v.min(axis=0)
    y = np.where(model.support, 0.5 * (hi + lo), 0.0)
    return ThreeBallOptimum(float(np.abs(v - y[None, :]).max()), y)


def grid_search_oracle(f, g1, g2, g3, model, step=0.05, bound=2.0, chunk=200_000):
    """Brute-force minimum over y on the product grid {-bound, ..., bound}^support."""
    f, gs = check_admissible(f, [g1, g2, g3], model)
    levels = np.round(np.arange(-bound, bound + step / 2, step), 12)
    sites = np.nonzero(model.support)[0]
    v = f[None, :] + gs
    off = np.abs(v[:, ~model.support]).max() if (~model.support).any() else 0.0
    if sites.size == 0:
        return ThreeBallOptimum(float(off), np.zeros(model.sites))
    on = v[:, sites]
    base = levels.size
    total = base ** sites.size
    best_value, best_y = math.inf, None
    powers = base ** np.arange(sites.size)
    for start in range(0, total, chunk):
        k = np.arange(start, min(start + chunk, total))
        digits = (k[:, None] // powers[None, :]) % base
        ys = levels[digits]
        values = np.abs(on[None, :, :] - ys[:, None, :]).max(axis=(1, 2))
        i = int(np.argmin(values))
        if values[i] < best_value:
            best_value, best_y = float(values[i]), ys[i]
    y = np.zeros(model.sites)
    y[sites] = best_y
    return ThreeBallOptimum(max(best_value, float(off)), y)


def subspace_three_ball_oracle(f, g1, g2, g3, basis):
    """Exact min over y in span(basis columns) of max_i ||f + g_i - y||, by linear programming."""
    f = np.asarray(f, dtype=float)
    gs = np.asarray([g1, g2, g3], dtype=float)
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    sites, m = B.shape
    if f.size != sites or gs.shape != (3, sites):
        raise DimensionError("vectors and basis disagree on the number of sites")
    v = (f[None, :] + gs).ravel()
    Bs = np.tile(B, (3, 1))
    ones = np.ones((3 * sites, 1))
    # variables [c, t]: minimize t with |v - B c| <= t componentwise
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.vstack([np.hstack([-Bs, -ones]), np.hstack([Bs, -ones])])
    b_ub = np.concatenate([-v, v])
    bounds = [(None, None)] * m + [(0, None)]
    result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method='highs')
    if not result.success:
        raise InfeasibleError(f"linear program failed: {result.message}")
    coeffs = result.x[:m]
    y = B @ coeffs
    value = float(np.abs(f[None, :] + gs - y[None, :]).max())
    return ThreeBallOptimum(value, y)


# --- Density oracles ---

class DensityOracle(abc.ABC):
    """Approximates members of B_E by members of B_E0 on a compact set of sites.

    `approximate(f, K, eps)` returns h in the E0 ball with ||f - h|| <= eps on K;
    `enlarge(h, K, eps)` returns K' containing K with ||h|| <= eps off K'.
    Site sets are boolean masks.
    """

    def __init__(self, model):
        self.model = model

    @abc.abstractmethod
    def approximate(self, f, K, eps):
        ...

    @abc.abstractmethod
    def enlarge(self, h, K, eps):
        ...


def _prefix_closure(mask):
    closed = np.zeros_like(mask)
    hits = np.nonzero(mask)[0]
    if hits.size:
        closed[:hits.max() + 1] = True
    return closed


class TruncationOracle(DensityOracle):
    """Sequence model: truncate to the smallest prefix containing K."""

    def approximate(self, f, K, eps):
        return truncation_oracle(f, np.asarray(K, dtype=bool), eps)

    def enlarge(self, h, K, eps):
        return _prefix_closure(np.asarray(K, dtype=bool) | (np.abs(h) > eps))


class DeLeeuwOracle(DensityOracle):
    """Pair model: f = Phi F, approximated by Phi f_n with f_n from the little-Lipschitz
    pipeline, doubling n until the deviation on K is at most eps. Compact sets are
    K_delta = pairs at distance >= delta.
    """

    def __init__(self, F, alpha, enumeration=None, max_step=None):
        self.F = F
        self.alpha = alpha
        self.enumeration = enumeration
        self.max_step = get_setting('ORACLE_MAX_STEP', max_step)
        self.pair_space = PairSpace.of(F.space)
        self.target = deleeuw_map(F, self.pair_space).values
        self._steps = {}
        super().__init__(SupModel.full(len(self.pair_space)))

    def _image(self, n):
        if n not in self._steps:
            step = little_lip_approximant(self.F, self.alpha, n, self.enumeration)
            self._steps[n] = deleeuw_map(step.f_n, self.pair_space).values
        return self._steps[n]

    def approximate(self, f, K, eps):
        if not np.array_equal(np.asarray(f, dtype=float), self.target):
            raise ParameterError("this oracle approximates only the de Leeuw image of its F")
        K = np.asarray(K, dtype=bool)
        n = 1
        while n <= self.max_step:
            h = self._image(n)
            if norm(h - self.target, K) <= eps:
                logger.debug(f"de Leeuw oracle: step n={n} within {eps} on {int(K.sum())} pairs")
                return h
            n *= 2
        raise InfeasibleError(f"no approximant within {eps} up to step {self.max_step}")

    def enlarge(self, h, K, eps):
        delta, count, _ = offending_min_distance(h, self.pair_space.pair_dist, eps)
        K = np.asarray(K, dtype=bool)
        if count == 0:
            return K.copy()
        return K | self.pair_space.compact(delta)


# --- Constructive witness ---

@dataclass(frozen=True, eq=False)
class ThreeBallWitness:
    eps: float
    r: int
    f: np.ndarray
    gs: np.ndarray
    h_list: np.ndarray
    K_chain: np.ndarray
    g: np.ndarray
    achieved: float

    @property
    def bound(self):
        return 1.0 + 3.0 * self.eps

    def to_dict(self):
        return {
            'eps': self.eps,
            'r': self.r,
            'achieved': self.achieved,
            'bound': self.bound,
            'g': self.g.tolist(),
            'h_list': self.h_list.tolist(),
            'K_chain': [np.nonzero(K)[0].tolist() for K in self.K_chain],
        }


def default_averaging_count(eps):
    return math.floor(1.0 / eps) + 1


def _contract(condition, message, **call):
    if not condition:
        raise OracleContractError(message, call=call)


def three_ball_witness(f, g1, g2, g3, eps, oracle, model=None, r=None, tolerance=None):
    """Builds g in B_E0 with max_i ||f + g_i - g|| <= 1 + 3 eps by averaging r approximants.

    K_0 makes every g_i small off it; h_j approximates f on K_{j-1} and K_j makes
    h_j small off it (K_j built for j <= r - 1); g is the mean of h_1..h_r.
    """
    tolerance = get_setting('CONTRACT_TOLERANCE', tolerance)
    model = model if model is not None else oracle.model
    if not eps > 0:
        raise ParameterError(f"epsilon must be positive, got {eps}")
    r = default_averaging_count(eps) if r is None else int(r)
    if not r > 1.0 / eps:
        raise ParameterError(f"averaging count r={r} must exceed 1/eps={1.0 / eps}")
    f, gs = check_admissible(f, [g1, g2, g3], model, tolerance)

    K = np.zeros(model.sites, dtype=bool)
    for i, gi in enumerate(gs, start=1):
        bigger = np.asarray(oracle.enlarge(gi, K, eps), dtype=bool)
        _contract(np.all(bigger >= K), "enlarge dropped sites", procedure='enlarge', target=f'g{i}')
        _contract(norm(gi, ~bigger) <= eps + tolerance,
                  f"g{i} exceeds eps off the enlarged set", procedure='enlarge', target=f'g{i}')
        K = bigger
    chain = [K]
    hs = []
    for j in range(1, r + 1):
        K_prev = chain[-1]
        h = np.asarray(oracle.approximate(f, K_prev, eps), dtype=float)
        _contract(h.shape == f.shape, "approximant has the wrong shape", procedure='approximate', step=j)
        _contract(norm(h) <= 1 + tolerance, f"||h_{j}|| = {norm(h)!r} exceeds 1",
                  procedure='approximate', step=j)
        _contract(model.in_e0(h, tolerance), f"h_{j} is not in E0", procedure='approximate', step=j)
        _contract(norm(f - h, K_prev) <= eps + tolerance,
                  f"h_{j} misses f by more than eps on K_{j - 1}", procedure='approximate', step=j)
        hs.append(h)
        if j <= r - 1:
            K_next = np.asarray(oracle.enlarge(h, K_prev, eps), dtype=bool)
            _contract(np.all(K_next >= K_prev), "enlarge dropped sites", procedure='enlarge', step=j)
            _contract(norm(h, ~K_next) <= eps + tolerance,
                      f"h_{j} exceeds eps off K_{j}", procedure='enlarge', step=j)
            chain.append(K_next)

    h_list = np.array(hs)
    g = h_list.mean(axis=0)
    achieved = float(np.abs(f[None, :] + gs - g[None, :]).max())
    witness = ThreeBallWitness(
        eps=float(eps), r=r, f=f, gs=gs, h_list=h_list, K_chain=np.array(chain), g=g,
        achieved=achieved,
    )
    _verify_witness(witness, tolerance)
    logger.info(f"3-ball witness: r={r}, achieved {achieved!r} against bound {witness.bound!r}")
    return witness


def _verify_witness(w, tolerance):
    for u, K in enumerate(w.K_chain):
        for j in range(1, w.r + 1):
            h = w.h_list[j - 1]
            if j > u and norm(w.f - h, K) > w.eps + tolerance:
                raise InvariantError(f"||f - h_{j}|| on K_{u} exceeds eps", u=u, j=j)
            if j <= u and norm(h, ~K) > w.eps + tolerance:
                raise InvariantError(f"||h_{j}|| off K_{u} exceeds eps", u=u, j=j)
    if w.achieved > w.bound + tolerance:
        raise InvariantError(f"achieved {w.achieved!r} exceeds {w.bound!r}")


# --- Region report ---

@dataclass(frozen=True)
class RegionBound:
    region: str
    sites: int
    empirical: float
    theoretical: float

    @property
    def ok(self):
        return self.empirical <= self.theoretical + 1e-12

    def to_dict(self):
        return {
            'region': self.region,
            'sites': self.sites,
            'empirical': self.empirical,
            'theoretical': self.theoretical,
            'ok': self.ok,
        }


def region_report(w):
    """Empirical max of max_i |f + g_i - g| on K_0, on K_{r-1} minus K_0, and off K_{r-1},
    against the caps 1 + eps, 1 + 2 eps and 1 + 3 eps.

    The middle region is also broken into its layers K_u minus K_{u-1} with the
    sharper cap (u + 1)/r + ((r - 1)/r + 1) eps.
    """
    residual = np.abs(w.f[None, :] + w.gs - w.g[None, :]).max(axis=0)
    K0, last = w.K_chain[0], w.K_chain[-1]
    regions = [
        ('K0', K0, 1 + w.eps),
        ('middle', last & ~K0, 1 + 2 * w.eps),
        ('tail', ~last, 1 + 3 * w.eps),
    ]
    report = [RegionBound(name, int(mask.sum()), norm(residual, mask), cap)
              for name, mask, cap in regions]
    for u in range(1, len(w.K_chain)):
        layer = w.K_chain[u] & ~w.K_chain[u - 1]
        cap = (u + 1) / w.r + ((w.r - 1) / w.r + 1) * w.eps
        report.append(RegionBound(f'layer_{u}', int(layer.sum()), norm(residual, layer), cap))
        logger.debug(f"region layer_{u}: {int(layer.sum())} sites, cap {cap!r}")
    return report


# --- Scenarios ---

def sequence_scenario(rng, sites=64, support_size=None, constant_f=True):
    """c0 inside l-infinity at finite size: f in B_E, three g_i in the E0 ball."""
    support_size = support_size if support_size is not None else max(1, (3 * sites) // 4)
    model = SupModel.prefix(sites, support_size)
    f = np.ones(sites) if constant_f else rng.uniform(-1.0, 1.0, sites)
    gs = rng.uniform(-1.0, 1.0, size=(3, sites)) * model.support[None, :]
    return model, f, gs, TruncationOracle(model)


def deleeuw_scenario(rng, space_alpha, alpha, steps=(2, 3, 5)):
    """Pair model: f = Phi F with F in the Lip_0(M^alpha) ball, g_i = Phi f_i with f_i
    little-Lipschitz approximants of random functions."""
    F = random_lip_function(space_alpha, rng, norm=rng.uniform(0.5, 1.0))
    oracle = DeLeeuwOracle(F, alpha)
    gs = []
    for n in steps:
        Fi = random_lip_function(space_alpha, rng, norm=1.0)
        fi = little_lip_approximant(Fi, alpha, n).f_n
        gs.append(deleeuw_map(fi, oracle.pair_space).values)
    return oracle.model, oracle.target, np.array(gs), oracle
