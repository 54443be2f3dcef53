"""Tests for default initialization, the W₁ rescale and forced balancedness."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ShapeError, TooShallow
from initialization import (
    balance_report,
    build_network,
    default_uniform_init,
    defect_matrices,
    expected_gram_norm_sq,
    expected_layer_gram_norm_sq,
    force_balanced,
    monte_carlo_gram_norm_sq,
    w1_rescale_factor,
)
from linalg import make_rng, svd
from network import GenericFeedforward, LinearStack, ReluHead, end_to_end_jacobian


class TestDefaultInit:

    def test_shapes_follow_widths(self, rng):
        stack = default_uniform_init([20, 64, 64, 1], rng)
        assert [w.shape for w in stack.weights] == [(64, 20), (64, 64), (1, 64)]

    def test_accepts_layer_shapes(self, rng):
        stack = default_uniform_init([(4, 3), (2, 4)], rng)
        assert stack.widths == [3, 4, 2]

    def test_entries_bounded_and_centred(self):
        w = default_uniform_init([20, 5000], make_rng(3)).weights[0]
        bound = 1.0 / math.sqrt(20)
        assert np.all(np.abs(w) <= bound)
        stderr = bound / math.sqrt(3) / math.sqrt(w.size)
        assert abs(w.mean()) <= 3 * stderr
        assert w.var() == pytest.approx(bound ** 2 / 3, rel=0.02)

    def test_bad_widths(self, rng):
        with pytest.raises(ShapeError):
            default_uniform_init([3], rng)
        with pytest.raises(ShapeError):
            default_uniform_init([3, 0], rng)


class TestGramMoments:

    def test_two_by_one_closed_form(self):
        assert expected_gram_norm_sq(2, 1) == pytest.approx(28.0 / 45.0)

    @pytest.mark.parametrize("m,n", [(2, 1), (3, 2), (64, 20)])
    def test_monte_carlo_agrees(self, m, n):
        mean, stderr = monte_carlo_gram_norm_sq(m, n, 100_000, make_rng(m * 100 + n))
        assert abs(mean - expected_gram_norm_sq(m, n)) <= 3 * stderr

    def test_layer_moment_scales_by_fan_in(self):
        assert expected_layer_gram_norm_sq(20, 64) == pytest.approx(expected_gram_norm_sq(64, 20) / 400)


class TestRescaleFactor:

    @pytest.mark.parametrize("d", [1, 5, 64])
    def test_equal_widths_give_one(self, d):
        assert w1_rescale_factor(d, d, d) == 1.0
        assert w1_rescale_factor(d, d, d, moment_matched=True) == 1.0

    def test_default_architecture(self):
        assert w1_rescale_factor(20, 64, 64) == pytest.approx(0.69035, abs=1e-5)

    def test_moment_matched_equalizes_gram_moments(self):
        factor = w1_rescale_factor(20, 64, 64, moment_matched=True)
        assert factor ** 4 * expected_layer_gram_norm_sq(20, 64) == pytest.approx(
            expected_layer_gram_norm_sq(64, 64), rel=1e-12)

    def test_moment_matched_monte_carlo(self):
        d1, d2, d3 = 3, 5, 5
        factor = w1_rescale_factor(d1, d2, d3, moment_matched=True)
        rng = make_rng(11)
        first, _ = monte_carlo_gram_norm_sq(d2, d1, 100_000, rng, scale=factor / math.sqrt(d1))
        second, _ = monte_carlo_gram_norm_sq(d3, d2, 100_000, rng, scale=1.0 / math.sqrt(d2))
        assert first == pytest.approx(second, rel=0.02)

    def test_rejects_zero_width(self):
        with pytest.raises(ShapeError):
            w1_rescale_factor(0, 1, 1)


class TestForceBalanced:

    def test_default_architecture_is_balanced(self):
        rng = make_rng(5)
        stack = force_balanced(default_uniform_init([20, 64, 64, 64, 64, 21], rng), rng)
        report = balance_report(stack)
        assert len(report.defects) == 4
        assert report.c_max <= 1e-10
        assert report.is_balanced()

    def test_first_layer_is_rescaled_copy(self):
        rng = make_rng(6)
        original = default_uniform_init([4, 8, 8, 6], rng)
        balanced = force_balanced(original, rng)
        factor = w1_rescale_factor(4, 8, 8)
        np.testing.assert_allclose(balanced.weights[0], factor * original.weights[0])
        np.testing.assert_allclose(svd(balanced.weights[0]).singular_values,
                                   factor * svd(original.weights[0]).singular_values, rtol=1e-10)

    def test_jacobian_spectrum_is_power_of_first_layer(self):
        rng = make_rng(7)
        stack = force_balanced(default_uniform_init([5, 9, 7, 6, 8], rng), rng)
        sigma = svd(stack.weights[0]).singular_values
        jac_sigma = svd(end_to_end_jacobian(stack)).singular_values
        np.testing.assert_allclose(jac_sigma, sigma ** stack.depth, rtol=1e-6)

    def test_single_layer_unchanged(self, rng):
        stack = default_uniform_init([3, 4], rng)
        np.testing.assert_array_equal(force_balanced(stack, rng).weights[0], stack.weights[0])

    def test_bias_carried_over(self, rng):
        stack = LinearStack(default_uniform_init([3, 4, 5], rng).weights, np.arange(5.0))
        np.testing.assert_array_equal(force_balanced(stack, rng).bias1, np.arange(5.0))

    def test_narrow_layer_rejected(self, rng):
        with pytest.raises(ShapeError):
            force_balanced(default_uniform_init([20, 10, 30], rng), rng)

    @settings(max_examples=25)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1),
           st.integers(min_value=1, max_value=8),
           st.lists(st.integers(min_value=0, max_value=24), min_size=2, max_size=6))
    def test_any_wide_enough_stack_balances(self, seed, d1, extra):
        rng = make_rng(seed)
        widths = [d1] + [d1 + e for e in extra]
        stack = force_balanced(default_uniform_init(widths, rng), rng)
        assert balance_report(stack).c_max <= 1e-10


class TestBalanceReport:

    def test_hand_example(self):
        report = balance_report(LinearStack([np.eye(2), 2 * np.eye(2)]))
        assert report.defects == pytest.approx([3 * math.sqrt(2)])
        assert not report.is_balanced()

    def test_defect_matrix_example(self):
        (c,) = defect_matrices(LinearStack([np.eye(2), 2 * np.eye(2)]))
        np.testing.assert_allclose(c, -3 * np.eye(2))

    def test_single_layer_too_shallow(self):
        with pytest.raises(TooShallow):
            balance_report(LinearStack([np.eye(2)]))

    def test_default_init_is_unbalanced(self, rng):
        assert balance_report(default_uniform_init([20, 64, 64, 64], rng)).c_max > 0.1


class TestBuildNetwork:

    def test_relu_variant(self, rng):
        net = build_network([4, 6, 6], "relu", rng)
        assert isinstance(net.head, ReluHead)
        assert net.stack.bias1.shape == (6,)
        assert net.head.a.shape == (6,)

    def test_generic_variant(self, rng):
        net = build_network([4, 6, 5], "generic", rng)
        assert isinstance(net.head, GenericFeedforward)
        assert [c.shape for c in net.head.biases] == [(6,), (5,)]
        assert net.stack.bias1 is None

    def test_linear_variant(self, rng):
        net = build_network([4, 6, 3], "none", rng, bias=False)
        assert net.head is None
        assert net.stack.bias1 is None
        assert set(net.named_parameters()) == {"W1", "W2"}

    def test_balanced_flag(self, rng):
        net = build_network([4, 6, 6, 5], "relu", rng, balanced=True)
        assert balance_report(net.stack).is_balanced()

    def test_unknown_head(self, rng):
        with pytest.raises(ValueError):
            build_network([2, 2], "tanh", rng)

    def test_reproducible(self):
        a = build_network([3, 5, 5], "relu", make_rng(9), balanced=True)
        b = build_network([3, 5, 5], "relu", make_rng(9), balanced=True)
        for name, value in a.named_parameters().items():
            np.testing.assert_array_equal(value, b.named_parameters()[name])
