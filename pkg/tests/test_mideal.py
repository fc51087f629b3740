# tests/test_mideal.py
import numpy as np
import pytest

from app.errors import DimensionError, OracleContractError, ParameterError, PreconditionError
from app.lip_core import random_lip_function
from app.metric_core import interval_space
from app.mideal import (
    DeLeeuwOracle,
    DensityOracle,
    SupModel,
    TruncationOracle,
    default_averaging_count,
    deleeuw_scenario,
    grid_search_oracle,
    l_projection_check,
    region_report,
    sequence_scenario,
    subspace_three_ball_oracle,
    three_ball_oracle,
    three_ball_witness,
)


class TestSupModel:

    def test_prefix_model(self):
        model = SupModel.prefix(6, 4)
        assert model.e0_support == [0, 1, 2, 3]
        assert model.is_proper
        assert model.in_e0([1, 0.5, 0, 0, 0, 0])
        assert not model.in_e0([0, 0, 0, 0, 0.1, 0])

    def test_full_model_is_not_proper(self):
        assert not SupModel.full(3).is_proper

    def test_support_size_range(self):
        with pytest.raises(ParameterError):
            SupModel.prefix(4, 0)
        with pytest.raises(DimensionError):
            SupModel(3, [True, False])


class TestLProjection:

    def test_worked_example(self):
        result = l_projection_check([1, -2, 3], [0, 1])
        assert (result.lhs, result.rhs, result.ok) == (6.0, 6.0, True)

    def test_zero_vector(self):
        result = l_projection_check(np.zeros(5), np.zeros(5, dtype=bool))
        assert (result.lhs, result.rhs) == (0.0, 0.0)

    def test_random_vectors(self, rng):
        for _ in range(1000):
            size = int(rng.integers(1, 30))
            xstar = rng.normal(size=size) * 10.0 ** rng.integers(-5, 5)
            support = rng.random(size) < 0.5
            assert l_projection_check(xstar, support).ok

    def test_rejects_non_finite(self):
        with pytest.raises(ParameterError):
            l_projection_check([1.0, np.nan], [0])


class TestThreeBallOracle:

    def test_zero_perturbations(self):
        model = SupModel.prefix(5, 3)
        f = np.array([0.3, -0.5, 1.0, 0.8, -0.2])
        zero = np.zeros(5)
        optimum = three_ball_oracle(f, zero, zero, zero, model)
        np.testing.assert_allclose(optimum.y, [0.3, -0.5, 1.0, 0.0, 0.0])
        assert optimum.value == pytest.approx(0.8)

    def test_zero_f_is_chebyshev_center(self):
        model = SupModel.full(2)
        g1, g2, g3 = np.array([1.0, 0.2]), np.array([-1.0, 0.4]), np.array([0.0, 0.0])
        optimum = three_ball_oracle(np.zeros(2), g1, g2, g3, model)
        np.testing.assert_allclose(optimum.y, [0.0, 0.2])
        assert optimum.value == pytest.approx(1.0)

    def test_sign_patterns_match_grid_search(self):
        model = SupModel.prefix(6, 4)
        f = np.ones(6)
        g1 = np.array([1, -1, 1, -1, 0, 0], dtype=float)
        g2 = np.array([-1, -1, 1, 1, 0, 0], dtype=float)
        g3 = np.array([1, 1, -1, -1, 0, 0], dtype=float)
        exact = three_ball_oracle(f, g1, g2, g3, model)
        assert exact.value == pytest.approx(1.0)
        brute = grid_search_oracle(f, g1, g2, g3, model, step=0.1)
        assert brute.value == pytest.approx(exact.value, abs=0.1)
        assert brute.value >= exact.value - 1e-12

    def test_matches_grid_search_on_small_instances(self, rng):
        for _ in range(10):
            sites = int(rng.integers(2, 5))
            model = SupModel.prefix(sites, int(rng.integers(1, min(3, sites) + 1)))
            f = rng.uniform(-1, 1, sites)
            gs = rng.uniform(-1, 1, (3, sites)) * model.support
            exact = three_ball_oracle(f, *gs, model)
            brute = grid_search_oracle(f, *gs, model, step=0.05)
            assert exact.value <= brute.value + 1e-12
            assert brute.value - exact.value <= 0.05

    def test_preconditions(self):
        model = SupModel.prefix(3, 2)
        zero = np.zeros(3)
        with pytest.raises(PreconditionError):
            three_ball_oracle(np.array([0, 0, 1.5]), zero, zero, zero, model)
        with pytest.raises(PreconditionError):
            three_ball_oracle(zero, np.array([0, 0, 0.5]), zero, zero, model)
        with pytest.raises(DimensionError):
            three_ball_oracle(np.zeros(4), zero, zero, zero, model)

    def test_constants_are_not_an_m_ideal(self):
        # E0 = span{(1, 1)} inside l-infinity of two sites
        f = np.array([1.0, -1.0])
        g1, g2, g3 = np.array([1.0, 1.0]), np.array([-1.0, -1.0]), np.zeros(2)
        optimum = subspace_three_ball_oracle(f, g1, g2, g3, np.array([1.0, 1.0]))
        assert optimum.value == pytest.approx(2.0, abs=1e-7)
        assert optimum.value > 1 + 0.25

    def test_subspace_oracle_agrees_with_coordinate_oracle(self, rng):
        model = SupModel.prefix(5, 3)
        f = rng.uniform(-1, 1, 5)
        gs = rng.uniform(-1, 1, (3, 5)) * model.support
        basis = np.eye(5)[:, :3]
        exact = three_ball_oracle(f, *gs, model)
        lp = subspace_three_ball_oracle(f, *gs, basis)
        assert lp.value == pytest.approx(exact.value, abs=1e-7)


class TestThreeBallWitness:

    def test_sequence_scenario_bound(self, rng):
        model, f, gs, oracle = sequence_scenario(rng)
        witness = three_ball_witness(f, *gs, 0.25, oracle, model)
        assert witness.r == 5
        assert witness.achieved <= 1.75 + 1e-12
        np.testing.assert_allclose(witness.g, witness.h_list.mean(axis=0))
        optimum = three_ball_oracle(f, *gs, model)
        assert optimum.value <= witness.achieved + 1e-12

    def test_zero_perturbations(self, rng):
        model = SupModel.prefix(64, 48)
        f = np.ones(64)
        zero = np.zeros(64)
        witness = three_ball_witness(f, zero, zero, zero, 0.1, TruncationOracle(model))
        assert witness.achieved <= 1.1 + 1e-12
        regions = {r.region: r for r in region_report(witness)}
        assert regions['middle'].empirical <= 1.2

    def test_region_report_partitions_the_sites(self):
        model = SupModel.prefix(8, 6)
        zero = np.zeros(8)
        witness = three_ball_witness(np.ones(8), zero, zero, zero, 0.5, TruncationOracle(model))
        report = region_report(witness)
        assert [r.region for r in report[:3]] == ['K0', 'middle', 'tail']
        assert sum(r.sites for r in report[:3]) == 8
        assert [r.theoretical for r in report[:3]] == [1.5, 2.0, 2.5]
        assert all(r.ok for r in report)

    def test_k_chain_is_nested(self, rng):
        model, f, gs, oracle = sequence_scenario(rng, sites=40, constant_f=False)
        witness = three_ball_witness(f, *gs, 0.1, oracle)
        assert len(witness.K_chain) == witness.r
        for smaller, larger in zip(witness.K_chain, witness.K_chain[1:]):
            assert np.all(larger >= smaller)

    def test_r_must_exceed_inverse_eps(self, rng):
        model, f, gs, oracle = sequence_scenario(rng, sites=10)
        with pytest.raises(ParameterError):
            three_ball_witness(f, *gs, 0.25, oracle, r=4)
        assert default_averaging_count(0.25) == 5
        assert default_averaging_count(0.3) == 4

    def test_larger_r_is_allowed(self, rng):
        model, f, gs, oracle = sequence_scenario(rng, sites=32)
        witness = three_ball_witness(f, *gs, 0.25, oracle, r=12)
        assert witness.r == 12
        assert witness.achieved <= witness.bound + 1e-12

    def test_broken_oracle_is_reported(self, rng):
        class Overshooting(DensityOracle):
            def approximate(self, f, K, eps):
                return 2.0 * np.asarray(f) * self.model.support

            def enlarge(self, h, K, eps):
                return np.ones(self.model.sites, dtype=bool)

        model, f, gs, _ = sequence_scenario(rng, sites=16)
        with pytest.raises(OracleContractError) as info:
            three_ball_witness(f, *gs, 0.5, Overshooting(model))
        assert info.value.call['procedure'] == 'approximate'
        assert info.value.call['step'] == 1

    def test_region_report_caps(self, rng):
        for eps in (0.5, 0.25, 0.1):
            model, f, gs, oracle = sequence_scenario(rng, sites=48, constant_f=False)
            witness = three_ball_witness(f, *gs, eps, oracle)
            report = region_report(witness)
            assert [r.region for r in report[:3]] == ['K0', 'middle', 'tail']
            assert [r.theoretical for r in report[:3]] == pytest.approx(
                [1 + eps, 1 + 2 * eps, 1 + 3 * eps])
            assert all(r.ok for r in report)

    def test_serialization(self, rng):
        model, f, gs, oracle = sequence_scenario(rng, sites=12)
        doc = three_ball_witness(f, *gs, 0.5, oracle).to_dict()
        assert doc['bound'] == 2.5
        assert len(doc['h_list']) == doc['r'] == 3
        assert len(doc['K_chain']) == 3


class TestDeLeeuwModel:

    def test_deleeuw_scenario_bound(self, rng):
        alpha = 0.5
        space = interval_space(7, alpha)
        model, f, gs, oracle = deleeuw_scenario(rng, space, alpha)
        witness = three_ball_witness(f, *gs, 0.25, oracle, model)
        assert witness.achieved <= 1.75 + 1e-12
        assert three_ball_oracle(f, *gs, model).value <= witness.achieved + 1e-12
        assert all(r.ok for r in region_report(witness))

    def test_oracle_contract(self, rng):
        space = interval_space(6, 0.5)
        F = random_lip_function(space, rng, norm=0.8)
        oracle = DeLeeuwOracle(F, 0.5)
        K = oracle.pair_space.compact(0.6)
        h = oracle.approximate(oracle.target, K, 0.1)
        assert np.abs(h - oracle.target)[K].max() <= 0.1
        bigger = oracle.enlarge(h, K, 0.1)
        assert np.all(bigger >= K)
        assert np.all(np.abs(h[~bigger]) < 0.1)
        with pytest.raises(ParameterError):
            oracle.approximate(np.zeros_like(oracle.target), K, 0.1)
