# tests/test_approx.py
import math

import numpy as np
import pytest

from app.approx import (
    approximation_sequence,
    base_metric,
    holder_bump_exponent,
    little_lip_approximant,
    truncation_oracle,
)
from app.errors import InfeasibleError, ParameterError, PreconditionError
from app.lip_core import LipFunction, lip_norm, scale_profile
from app.metric_core import PointedMetricSpace, farthest_point_enumeration, interval_space


def power(space, beta):
    return LipFunction.from_coordinates(space, lambda t: t ** beta)


def two_points(distance):
    return PointedMetricSpace(dist=np.array([[0.0, distance], [distance, 0.0]]))


class TestBumpExponent:

    def test_unit_distance_pair_reaches_the_grid_limit(self):
        beta = holder_bump_exponent({0: 0.0, 1: 1.0}, 0.5, 2, interval_space(2))
        assert beta == pytest.approx(1.0 - 1e-9, abs=1e-12)

    def test_large_diameter_is_not_binding(self):
        beta = holder_bump_exponent({0: 0.0, 1: 1.0}, 0.5, 1, two_points(2.0))
        assert beta >= 1.0 - 2e-9

    def test_zero_data(self):
        beta = holder_bump_exponent({0: 0.0, 1: 0.0, 2: 0.0}, 0.3, 5, interval_space(3))
        assert beta == pytest.approx(1.0 - 1e-9, abs=1e-12)

    def test_norm_inequality_binds_on_short_pairs(self):
        alpha = 0.5
        g = {0: 0.0, 1: 0.01 ** alpha}
        beta = holder_bump_exponent(g, alpha, 1, two_points(0.01))
        assert beta == pytest.approx(alpha + math.log(2) / math.log(100), abs=2e-9)
        # both inequalities hold at the returned exponent
        assert g[1] / 0.01 ** beta <= 2.0

    def test_precondition_names_the_pair(self):
        with pytest.raises(PreconditionError) as info:
            holder_bump_exponent({0: 0.0, 1: 2.0}, 0.5, 1, interval_space(2))
        assert info.value.pair == (0, 1)

    @pytest.mark.parametrize('alpha, n', [(0.0, 1), (1.0, 1), (0.5, 0)])
    def test_parameter_ranges(self, alpha, n):
        with pytest.raises(ParameterError):
            holder_bump_exponent({0: 0.0}, alpha, n, interval_space(2))

    def test_infeasible_when_no_room_above_alpha(self):
        # diameter so large that (diam)^(beta - alpha) <= 1 + 1/n leaves no grid point
        with pytest.raises(InfeasibleError):
            holder_bump_exponent({0: 0.0, 1: 0.0}, 0.5, 10 ** 6, two_points(1e300),
                                 tolerance=1e-3)


class TestLittleLipApproximant:

    def test_anchor_deviation_matches_the_rescaling(self):
        F = power(interval_space(33, 0.5), 0.75)
        step = little_lip_approximant(F, 0.5, 4)
        anchors = list(step.anchors)
        assert anchors == [0, 32, 16, 8]
        deviation = np.abs(step.f_n.values[anchors] - F.values[anchors]).max()
        assert deviation == pytest.approx(0.36 * np.abs(F.values[anchors]).max(), rel=1e-12)
        assert step.cert.ok

    def test_zero_function(self):
        step = little_lip_approximant(LipFunction.zero(interval_space(9, 0.5)), 0.5, 3)
        assert not step.f_n.values.any()
        assert step.cert.ok

    def test_invariants(self, rng):
        space = interval_space(65, 0.4)
        for n in (1, 2, 5, 17, 100):
            F = LipFunction(space, np.r_[0.0, rng.normal(size=64)])
            F = F * (1.0 / lip_norm(F))
            step = little_lip_approximant(F, 0.4, n)
            assert 0.4 < step.beta_n < 1
            assert lip_norm(step.f_n) <= 1 + 1e-12
            anchors = list(step.anchors)
            np.testing.assert_allclose(step.f_n.values[anchors],
                                       F.values[anchors] / (1 + 1 / n) ** 2, rtol=1e-12, atol=1e-15)
            cert = step.cert
            assert cert.g_norm_ok and cert.diam_ok and cert.chain_ok and cert.f_norm_alpha_ok

    def test_steps_beyond_the_point_count_use_every_point(self):
        F = power(interval_space(5, 0.5), 1.0)
        step = little_lip_approximant(F, 0.5, 10)
        assert sorted(step.anchors) == [0, 1, 2, 3, 4]
        np.testing.assert_allclose(step.f_n.values, F.values / 1.21, rtol=1e-12)

    def test_normalization_is_undone_on_output(self):
        F = power(interval_space(9, 0.5), 1.0) * 3.0
        step = little_lip_approximant(F, 0.5, 4)
        assert step.scale == pytest.approx(3.0)
        anchors = list(step.anchors)
        np.testing.assert_allclose(step.f_n.values[anchors], F.values[anchors] / 1.5625,
                                   rtol=1e-12)
        assert step.cert.ok
        with pytest.raises(PreconditionError):
            little_lip_approximant(F, 0.5, 4, normalize=False)

    def test_pointwise_convergence(self):
        F = power(interval_space(33, 0.5), 0.75)
        steps = approximation_sequence(F, 0.5, [2, 4, 8, 16, 64])
        errors = [abs(step.f_n.values[32] - F.values[32]) for step in steps]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        for step, error in zip(steps, errors):
            assert error == pytest.approx((1 - (1 + 1 / step.n) ** -2) * F.values[32], rel=1e-12)

    def test_approximant_decays_at_small_scales(self):
        alpha = 0.5
        F = power(interval_space(1025, alpha), 0.75)
        step = little_lip_approximant(F, alpha, 4)
        profile = scale_profile(step.f_n, np.geomspace(0.3, 0.05, 8))
        assert profile.slope >= (step.beta_n - alpha) / alpha - 0.15

    def test_enumeration_must_start_at_base(self):
        F = power(interval_space(5, 0.5), 1.0)
        with pytest.raises(ParameterError):
            little_lip_approximant(F, 0.5, 2, enumeration=[1, 0, 2, 3, 4])

    def test_serialization(self):
        step = little_lip_approximant(power(interval_space(9, 0.5), 1.0), 0.5, 2)
        doc = step.to_dict()
        assert doc['n'] == 2
        assert doc['cert']['ok'] is True
        assert len(doc['f_n']) == 9

    def test_base_metric_round_trip(self):
        space = interval_space(9, 0.5)
        np.testing.assert_allclose(base_metric(space, 0.5).dist, interval_space(9).dist,
                                   atol=1e-15)
        with pytest.raises(ParameterError):
            base_metric(space, 1.0)

    def test_dyadic_anchor_order(self):
        order = farthest_point_enumeration(interval_space(17, 0.5))
        assert order[:5] == [0, 16, 8, 4, 12]


class TestTruncationOracle:

    def test_prefix_truncation(self):
        h = truncation_oracle(np.ones(8), [0, 1, 2])
        np.testing.assert_array_equal(h, [1, 1, 1, 0, 0, 0, 0, 0])

    def test_full_index_set(self, rng):
        f = rng.uniform(-1, 1, 10)
        np.testing.assert_array_equal(truncation_oracle(f, np.ones(10, dtype=bool)), f)

    def test_exact_on_k(self, rng):
        f = rng.uniform(-1, 1, 20)
        K = np.array([3, 11, 7])
        h = truncation_oracle(f, K, eps=0.1)
        np.testing.assert_array_equal(h[K], f[K])
        assert not h[12:].any()

    def test_empty_index_set(self):
        assert not truncation_oracle(np.ones(4), []).any()

    def test_rejects_large_sequences(self):
        with pytest.raises(PreconditionError):
            truncation_oracle(np.array([0.5, 1.5]), [0])

    def test_rejects_indices_outside(self):
        with pytest.raises(ParameterError):
            truncation_oracle(np.ones(3), [5])
