# tests/test_acceptance.py
"""Seeded end-to-end properties over random corpora of spaces, functions and scenarios."""
import itertools

import numpy as np
import pytest

from app.approx import approximation_sequence
from app.embeddings import deleeuw_map, functional_sup, sequence_gap
from app.lip_core import (
    LipFunction,
    lip_norm,
    mcshane_extend,
    partial_lip_constant,
    random_lip_function,
    scale_profile,
    sup_norm,
)
from app.metric_core import (
    interval_space,
    max_separated_set,
    point_cloud_space,
    snowflake,
    validate_metric,
)
from app.mideal import (
    deleeuw_scenario,
    l_projection_check,
    region_report,
    sequence_scenario,
    three_ball_oracle,
    three_ball_witness,
)

SEED = 7


def random_space(rng, min_points=3, max_points=40):
    n = int(rng.integers(min_points, max_points + 1))
    k = int(rng.integers(1, 4))
    p = [1, 2, np.inf][int(rng.integers(3))]
    space = point_cloud_space(rng.uniform(-1.0, 1.0, (n, k)), p=p,
                              base=int(rng.integers(n)))
    if rng.random() < 0.5:
        space = snowflake(space, float(rng.uniform(0.3, 1.0)))
    assert validate_metric(space.dist).ok
    return space


@pytest.fixture(scope='module')
def corpus():
    rng = np.random.default_rng(SEED)
    functions = []
    for _ in range(20):
        space = random_space(rng)
        for _ in range(10):
            scale = float(10.0 ** rng.uniform(-3, 3))
            functions.append(random_lip_function(space, rng, norm=scale))
    return functions


def relative_gap(a, b):
    return abs(a - b) / max(1.0, abs(b))


class TestIsometries:

    def test_deleeuw_isometry(self, corpus):
        for F in corpus:
            assert relative_gap(deleeuw_map(F).sup_norm(), lip_norm(F)) <= 1e-12

    def test_functional_identity(self, corpus):
        for F in corpus:
            assert relative_gap(functional_sup(F), lip_norm(F)) <= 1e-12

    def test_embedding_contracts_sup_distance(self):
        rng = np.random.default_rng(SEED + 1)
        for _ in range(500):
            space = random_space(rng, max_points=15)
            f = random_lip_function(space, rng)
            F = random_lip_function(space, rng, norm=float(rng.uniform(0.1, 2.0)))
            gap, distance = sequence_gap(f, F, weight_base=float(rng.uniform(0.01, 0.99)))
            assert distance == sup_norm(f - F)
            assert gap <= distance * (1 + 1e-12)


class TestExtensions:

    def test_mcshane_preserves_data_and_constant(self):
        rng = np.random.default_rng(SEED + 2)
        for _ in range(100):
            space = random_space(rng)
            others = np.setdiff1d(np.arange(space.n), [space.base])
            size = int(rng.integers(1, space.n))
            domain = rng.choice(others, size=size, replace=False)
            # the base point carries 0 so the extension is again a Lip_0 function
            g = {space.base: 0.0}
            g.update({int(q): float(v) for q, v in zip(domain, rng.normal(size=size))})
            L, _ = partial_lip_constant(g, space.dist)
            G = mcshane_extend(g, None, space)
            np.testing.assert_array_equal(G[list(g)], list(g.values()))
            norm = lip_norm(LipFunction(space, G))
            assert L * (1 - 1e-12) <= norm <= L * (1 + 1e-12)


class TestApproximationPipeline:

    def test_power_function_on_square_root_grid(self):
        alpha = 0.5
        F = LipFunction.from_coordinates(interval_space(257, alpha), lambda t: t ** 0.75)
        for step in approximation_sequence(F, alpha, [2, 4, 8, 16]):
            assert lip_norm(step.f_n) <= 1 + 1e-12
            anchors = list(step.anchors)
            deviation = np.abs(step.f_n.values[anchors] - F.values[anchors]).max()
            expected = (1 - (1 + 1 / step.n) ** -2) * np.abs(F.values[anchors]).max()
            assert deviation == pytest.approx(expected, rel=1e-12, abs=1e-15)
            assert step.cert.ok

    def test_scale_decay_exponent(self):
        alpha, beta = 0.5, 1.0
        F = LipFunction.from_coordinates(interval_space(1001, alpha), lambda t: t ** beta)
        profile = scale_profile(F, np.geomspace(0.5, 0.05, 10))
        assert profile.slope == pytest.approx((beta - alpha) / alpha, abs=0.1)


class TestThreeBallProperty:

    @pytest.mark.parametrize('eps', [0.5, 0.25, 0.1])
    def test_sequence_model(self, eps):
        rng = np.random.default_rng(SEED + 3)
        for _ in range(50):
            sites = int(rng.integers(8, 65))
            model, f, gs, oracle = sequence_scenario(rng, sites=sites,
                                                     constant_f=bool(rng.random() < 0.5))
            witness = three_ball_witness(f, *gs, eps, oracle, model)
            assert witness.achieved <= 1 + 3 * eps + 1e-12
            assert all(region.ok for region in region_report(witness))
            optimum = three_ball_oracle(f, *gs, model).value
            assert optimum <= witness.achieved + 1e-12
            assert optimum <= 1 + eps + 1e-12

    @pytest.mark.parametrize('eps', [0.5, 0.25, 0.1])
    def test_deleeuw_model(self, eps):
        rng = np.random.default_rng(SEED + 4)
        alpha = 0.5
        for _ in range(10):
            space = interval_space(int(rng.integers(4, 8)), alpha)
            model, f, gs, oracle = deleeuw_scenario(rng, space, alpha)
            witness = three_ball_witness(f, *gs, eps, oracle, model)
            assert witness.achieved <= 1 + 3 * eps + 1e-12
            assert all(region.ok for region in region_report(witness))
            assert three_ball_oracle(f, *gs, model).value <= witness.achieved + 1e-12

    def test_l_projection_identity(self):
        rng = np.random.default_rng(SEED + 5)
        for _ in range(1000):
            size = int(rng.integers(1, 40))
            outcome = l_projection_check(rng.normal(size=size), rng.random(size) < 0.5)
            assert outcome.ok


def brute_force_packing(space, delta):
    """Largest separated subset by checking every bitmask of points at once."""
    masks = np.arange(1 << space.n, dtype=np.int64)
    member = [((masks >> i) & 1).astype(bool) for i in range(space.n)]
    allowed = np.ones(masks.size, dtype=bool)
    for i, j in zip(*np.nonzero(np.triu(space.dist < delta, k=1))):
        allowed &= ~(member[i] & member[j])
    return int(np.bitwise_count(masks[allowed]).max())


class TestPacking:

    def test_branch_and_bound_matches_brute_force(self):
        rng = np.random.default_rng(SEED + 6)
        for _ in range(50):
            space = random_space(rng, min_points=2, max_points=20)
            off = space.dist[~np.eye(space.n, dtype=bool)]
            delta = float(rng.uniform(off.min(), off.max()))
            result = max_separated_set(space, delta)
            assert result.exact
            assert len(result) == brute_force_packing(space, delta)
            chosen = list(result.indices)
            assert all(space.dist[i, j] >= delta for i, j in itertools.combinations(chosen, 2))
