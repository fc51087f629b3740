# app/approx.py
"""Little-Lipschitz approximants of Hoelder functions, and the truncation oracle."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import get_setting
from .errors import InfeasibleError, ParameterError, PreconditionError
from .lip_core import (
    LipFunction,
    lip_norm,
    lip_norm_witness,
    mcshane_extend,
    partial_lip_constant,
)
from .metric_core import PointedMetricSpace, farthest_point_enumeration
from .embeddings import check_enumeration

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Certificate:
    """The inequalities behind ||f_n|| <= 1 under d^alpha, each with its value."""
    target: float
    g_norm_beta: float
    g_norm_ok: bool
    diam_factor: float
    diam_ok: bool
    f_norm_beta: float
    chain_value: float
    chain_ok: bool
    f_norm_alpha: float
    f_norm_alpha_ok: bool

    @property
    def ok(self):
        return self.g_norm_ok and self.diam_ok and self.chain_ok and self.f_norm_alpha_ok

    def to_dict(self):
        return {
            'target': self.target,
            'g_norm_beta': self.g_norm_beta,
            'g_norm_ok': self.g_norm_ok,
            'diam_factor': self.diam_factor,
            'diam_ok': self.diam_ok,
            'f_norm_beta': self.f_norm_beta,
            'chain_value': self.chain_value,
            'chain_ok': self.chain_ok,
            'f_norm_alpha': self.f_norm_alpha,
            'f_norm_alpha_ok': self.f_norm_alpha_ok,
            'ok': self.ok,
        }


@dataclass(frozen=True, eq=False)
class ApproxStep:
    n: int
    alpha: float
    beta_n: float
    anchors: tuple[int, ...]
    g_n: np.ndarray
    G_n: np.ndarray
    f_n: LipFunction
    scale: float
    cert: Certificate

    def to_dict(self):
        return {
            'n': self.n,
            'alpha': self.alpha,
            'beta_n': self.beta_n,
            'anchors': list(self.anchors),
            'g_n': self.g_n.tolist(),
            'G_n': self.G_n.tolist(),
            'f_n': self.f_n.values.tolist(),
            'scale': self.scale,
            'cert': self.cert.to_dict(),
        }


def base_metric(space, alpha):
    """Recovers the metric d from a space carrying d^alpha."""
    if not 0 < alpha < 1:
        raise ParameterError(f"snowflake exponent must lie in (0, 1), got {alpha}")
    return PointedMetricSpace(
        dist=space.dist ** (1.0 / alpha), base=space.base, labels=space.labels, coords=space.coords
    )


def _holder_norm(g, dist, beta):
    """Lipschitz constant of the partial function g under dist**beta."""
    norm, _ = partial_lip_constant(g, dist ** beta)
    return norm


def holder_bump_exponent(g, alpha, n, space, tolerance=None, slack=None):
    """Largest beta in (alpha, 1) on a bisection grid with

        ||g||_{Lip(P_n, d^beta)} <= 1 + 1/n   and   (diam M)^(beta - alpha) <= 1 + 1/n.

    `space` carries the unsnowflaked metric d. The full predicate is evaluated at
    every trial, so no monotonicity in beta is assumed beyond bracketing.
    """
    tolerance = get_setting('BISECTION_TOLERANCE', tolerance)
    slack = get_setting('CERT_SLACK', slack)
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise ParameterError(f"step index must be at least 1, got {n}")
    target = 1.0 + 1.0 / n
    diam = space.diameter

    def feasible(beta):
        return (_holder_norm(g, space.dist, beta) <= target
                and diam ** (beta - alpha) <= target)

    if _holder_norm(g, space.dist, alpha) > 1 + slack:
        raise PreconditionError("partial function exceeds norm 1 under d^alpha",
                                pair=partial_lip_constant(g, space.dist ** alpha)[1])
    lo, hi = alpha, 1.0 - tolerance
    if feasible(hi):
        return hi
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    if lo <= alpha + tolerance:
        raise InfeasibleError(f"no exponent above {alpha} + {tolerance} satisfies both bounds",
                              alpha=alpha, n=n)
    if not feasible(lo):
        raise InfeasibleError(f"bisection ended at an infeasible exponent {lo}", alpha=alpha, n=n)
    return lo


def little_lip_approximant(F, alpha, n, enumeration=None, normalize=True,
                           tolerance=None, slack=None):
    """One step of the approximation of F in Lip_0(M^alpha) by little-Lipschitz functions.

    F lives on the snowflaked space M^alpha. The pipeline restricts F to the first
    n points of the enumeration, raises the exponent to beta_n, extends with the
    same constant under d^beta_n and rescales by (1 + 1/n)^-2. Steps beyond the
    number of points reuse all points as P_n.
    """
    slack = get_setting('CERT_SLACK', slack)
    if n < 1:
        raise ParameterError(f"step index must be at least 1, got {n}")
    space_alpha = F.space
    if enumeration is None:
        enumeration = farthest_point_enumeration(space_alpha)
    enumeration = check_enumeration(space_alpha, enumeration)
    metric = base_metric(space_alpha, alpha)

    scale = 1.0
    norm = lip_norm(F)
    if norm > 1 + slack:
        if not normalize:
            raise PreconditionError(
                f"||F|| = {norm!r} exceeds 1 under d^alpha", pair=lip_norm_witness(F), norm=norm)
        scale = norm
        logger.info(f"normalizing F by its Lipschitz norm {scale!r}")
        F = F * (1.0 / scale)

    if n > space_alpha.n:
        logger.debug(f"step {n} exceeds {space_alpha.n} points; P_n is the whole space")
    anchors = tuple(enumeration[:min(n, space_alpha.n)])
    g = {p: float(F.values[p]) for p in anchors}

    beta = holder_bump_exponent(g, alpha, n, metric, slack=slack, tolerance=tolerance)
    dist_beta = metric.dist ** beta
    space_beta = PointedMetricSpace(dist=dist_beta, base=metric.base)
    g_norm_beta, _ = partial_lip_constant(g, dist_beta)
    G = mcshane_extend(g, g_norm_beta, space_beta, slack=slack)

    rescale = (1.0 + 1.0 / n) ** 2
    f_n = LipFunction(space_alpha, G / rescale)

    target = 1.0 + 1.0 / n
    diam_factor = metric.diameter ** (beta - alpha)
    f_norm_beta = lip_norm(f_n.on(space_beta))
    chain_value = f_norm_beta * diam_factor
    f_norm_alpha = lip_norm(f_n)
    cert = Certificate(
        target=target,
        g_norm_beta=g_norm_beta,
        g_norm_ok=g_norm_beta <= target * (1 + slack),
        diam_factor=diam_factor,
        diam_ok=diam_factor <= target * (1 + slack),
        f_norm_beta=f_norm_beta,
        chain_value=chain_value,
        chain_ok=chain_value <= 1 + slack,
        f_norm_alpha=f_norm_alpha,
        f_norm_alpha_ok=f_norm_alpha <= 1 + slack,
    )
    logger.debug(f"step n={n}: beta_n={beta!r}, ||f_n||_alpha={f_norm_alpha!r}")

    if scale != 1.0:
        f_n = f_n * scale
        G = G * scale
        g_vals = np.array([g[p] for p in anchors]) * scale
    else:
        g_vals = np.array([g[p] for p in anchors])
    return ApproxStep(
        n=n, alpha=alpha, beta_n=beta, anchors=anchors, g_n=g_vals, G_n=G,
        f_n=f_n, scale=scale, cert=cert,
    )


def approximation_sequence(F, alpha, steps, enumeration=None, **kwargs):
    """The approximants f_n for each n in `steps`."""
    if enumeration is None:
        enumeration = farthest_point_enumeration(F.space)
    return [little_lip_approximant(F, alpha, n, enumeration, **kwargs) for n in steps]


def truncation_oracle(f, K, eps=None):
    """h = f on the smallest prefix containing K, zero after it.

    `eps` is accepted for the oracle signature; the truncation is exact on K.
    """
    f = np.asarray(f, dtype=float)
    if f.size and np.abs(f).max() > 1:
        raise PreconditionError(f"sequence has sup norm {np.abs(f).max()!r} > 1")
    K = np.asarray(K)
    K = np.nonzero(K)[0] if K.dtype == bool else K.astype(int)
    h = np.zeros_like(f)
    if K.size:
        if K.min() < 0 or K.max() >= f.size:
            raise ParameterError(f"index set reaches outside 0..{f.size - 1}")
        end = int(K.max()) + 1
        h[:end] = f[:end]
    return h
