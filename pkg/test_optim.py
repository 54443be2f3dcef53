"""Tests for the optimizers, the schedule and the training loop."""

import numpy as np
import pytest

from datasets import Dataset
from errors import ConfigInvalid, DivergenceDetected
from initialization import balance_report, build_network
from linalg import make_rng
from network import LinearStack, Network, mse_loss, neural_feature_matrix
from optim import OptimizerConfig, Schedule, TrainState, run_epoch, step, train
from targets import make_multiindex_target, network_dataset, sample_multiindex


def quadratic_problem():
    """A single weight w with loss w²."""
    net = Network(LinearStack([np.array([[1.0]])]))
    return net, Dataset(np.array([[1.0]]), np.array([[0.0]]))


def weight(state):
    return float(state.net.stack.weights[0][0, 0])


def linear_regression(rng, widths=(3, 5, 5, 2), n=64, balanced=False):
    target = make_multiindex_target(widths[0], 2, "identity", "vector", rng, output_dim=widths[-1])
    data = sample_multiindex(target, n, 0.0, rng)
    return build_network(list(widths), "none", rng, balanced=balanced), data


class TestConfig:

    @pytest.mark.parametrize("kwargs", [
        {"kind": "rmsprop"},
        {"learning_rate": 0.0},
        {"weight_decay": -1.0},
        {"momentum": 1.0},
        {"adam_betas": (0.9, 1.0)},
        {"batch_size": 0},
    ])
    def test_invalid_optimizer(self, kwargs):
        with pytest.raises(ConfigInvalid):
            OptimizerConfig(**kwargs)

    def test_invalid_schedule(self):
        with pytest.raises(ConfigInvalid):
            Schedule(main_epochs=0)
        with pytest.raises(ConfigInvalid):
            Schedule(record_every=0)


class TestSchedule:

    def test_learning_rate_drop(self):
        sched = Schedule()
        assert sched.total_epochs == 5100
        assert sched.learning_rate(5000, 1e-3) == 1e-3
        assert sched.learning_rate(5001, 1e-3) == pytest.approx(1e-4)

    def test_record_points(self):
        sched = Schedule(main_epochs=10, extra_epochs=5, record_every=4)
        assert [e for e in range(16) if sched.records(e)] == [0, 4, 8, 12, 15]


class TestStep:

    def test_zero_gradient_is_fixed_point(self, rng):
        net = build_network([3, 4, 4], "relu", rng)
        data = network_dataset(net, 16, rng)
        after = step(TrainState.fresh(net), OptimizerConfig(learning_rate=0.1), data)
        for name, value in net.named_parameters().items():
            np.testing.assert_array_equal(after.net.named_parameters()[name], value)

    def test_pure_decay_is_exact(self, rng):
        net = build_network([3, 4, 4], "relu", rng)
        data = network_dataset(net, 16, rng)
        lr, wd = 0.1, 0.5
        after = step(TrainState.fresh(net), OptimizerConfig(learning_rate=lr, weight_decay=wd), data).net
        np.testing.assert_array_equal(after.stack.weights[0], (1.0 - lr * wd) * net.stack.weights[0])
        np.testing.assert_array_equal(after.stack.weights[1], (1.0 - lr * wd) * net.stack.weights[1])
        np.testing.assert_array_equal(after.head.a, (1.0 - lr * wd) * net.head.a)
        np.testing.assert_array_equal(after.stack.bias1, net.stack.bias1)
        assert after.head.b2 == net.head.b2

    def test_gradient_descent_on_quadratic(self):
        net, data = quadratic_problem()
        after = step(TrainState.fresh(net), OptimizerConfig(learning_rate=0.1), data)
        assert weight(after) == pytest.approx(0.8)

    def test_heavy_ball_momentum(self):
        net, data = quadratic_problem()
        cfg = OptimizerConfig(learning_rate=0.1, momentum=0.9)
        state = step(TrainState.fresh(net), cfg, data)
        assert weight(state) == pytest.approx(0.8)
        state = step(state, cfg, data)
        assert weight(state) == pytest.approx(0.46)

    def test_adam_first_step_is_sign_step(self):
        net, data = quadratic_problem()
        after = step(TrainState.fresh(net), OptimizerConfig(kind="adam", learning_rate=0.1), data)
        assert weight(after) == pytest.approx(0.9, abs=1e-8)
        assert after.step_count == 1

    def test_learning_rate_override(self):
        net, data = quadratic_problem()
        after = step(TrainState.fresh(net), OptimizerConfig(learning_rate=0.1), data, learning_rate=0.25)
        assert weight(after) == pytest.approx(0.5)

    def test_input_state_untouched(self):
        net, data = quadratic_problem()
        state = TrainState.fresh(net)
        step(state, OptimizerConfig(learning_rate=0.1), data)
        assert weight(state) == 1.0

    def test_overflow_raises_divergence(self):
        net = Network(LinearStack([np.array([[1e300]])]))
        data = Dataset(np.array([[1e10]]), np.array([[0.0]]))
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceDetected):
                step(TrainState.fresh(net), OptimizerConfig(learning_rate=1.0), data)


class TestEpoch:

    def test_minibatches_keep_short_last_batch(self, rng):
        net, data = linear_regression(rng, n=10)
        state = TrainState.fresh(net, make_rng(0))
        after = run_epoch(state, OptimizerConfig(kind="sgd", batch_size=4), data, 1e-3)
        assert after.step_count == 3
        assert after.epoch == 1
        assert after.t == pytest.approx(1e-3)

    def test_full_batch_takes_one_step(self, rng):
        net, data = linear_regression(rng, n=10)
        after = run_epoch(TrainState.fresh(net), OptimizerConfig(kind="gd"), data, 1e-3)
        assert after.step_count == 1


class TestTrain:

    def test_continuous_time_and_record_epochs(self, rng):
        net, data = linear_regression(rng)
        sched = Schedule(main_epochs=10, drop_factor=10.0, extra_epochs=5, record_every=4)
        _, trace = train(net, data, OptimizerConfig(learning_rate=0.01), sched)
        assert trace.epochs == [0, 4, 8, 12, 15]
        assert trace.t[-1] == pytest.approx(10 * 0.01 + 5 * 0.001)
        assert len(trace.defects) == 2
        assert all(len(series) == 5 for series in trace.defects)

    def test_interpolating_start_stays_put(self, rng):
        net = build_network([3, 6, 6], "relu", rng)
        data = network_dataset(net, 32, rng)
        final, trace = train(net, data, OptimizerConfig(learning_rate=0.05),
                             Schedule(main_epochs=20, extra_epochs=0, record_every=5))
        assert all(loss <= 1e-12 for loss in trace.loss)
        np.testing.assert_array_equal(final.stack.weights[0], net.stack.weights[0])

    def test_gradient_descent_loss_is_monotone(self, rng):
        net, data = linear_regression(rng)
        _, trace = train(net, data, OptimizerConfig(learning_rate=1e-2),
                         Schedule(main_epochs=300, extra_epochs=0, record_every=1))
        losses = np.array(trace.loss)
        assert np.all(np.diff(losses) <= 1e-12)
        assert losses[-1] < losses[0]

    def test_seeded_sgd_is_deterministic(self, rng):
        net, data = linear_regression(rng)
        cfg = OptimizerConfig(kind="sgd", learning_rate=1e-2, momentum=0.9, batch_size=16)
        sched = Schedule(main_epochs=20, extra_epochs=2, record_every=5)
        first, trace_a = train(net, data, cfg, sched, seed=3)
        second, trace_b = train(net, data, cfg, sched, seed=3)
        for name, value in first.named_parameters().items():
            np.testing.assert_array_equal(value, second.named_parameters()[name])
        assert trace_a.loss == trace_b.loss

    def test_different_seeds_shuffle_differently(self, rng):
        net, data = linear_regression(rng)
        cfg = OptimizerConfig(kind="sgd", learning_rate=1e-2, batch_size=16)
        sched = Schedule(main_epochs=5, extra_epochs=0, record_every=5)
        first, _ = train(net, data, cfg, sched, seed=1)
        second, _ = train(net, data, cfg, sched, seed=2)
        assert not np.array_equal(first.stack.weights[0], second.stack.weights[0])

    def test_monitors_fire_on_record_epochs(self, rng):
        net, data = linear_regression(rng)
        seen = []
        train(net, data, OptimizerConfig(), Schedule(main_epochs=6, extra_epochs=0, record_every=3),
              monitors=[lambda epoch, t, current, loss: seen.append((epoch, loss))])
        assert [epoch for epoch, _ in seen] == [0, 3, 6]

    def test_alpha_table_recorded(self, rng):
        net, data = linear_regression(rng)
        _, trace = train(net, data, OptimizerConfig(), Schedule(main_epochs=4, extra_epochs=0, record_every=2),
                         alpha_tildes=[0.5, 1.0, 1.5])
        assert len(trace.alpha_table) == 3
        assert len(trace.alpha_rows()) == 9

    def test_gradient_flow_conserves_balancedness(self, rng):
        net, data = linear_regression(rng, widths=(4, 8, 8, 8, 6), n=128, balanced=True)
        final, _ = train(net, data, OptimizerConfig(learning_rate=1e-3),
                         Schedule(main_epochs=500, extra_epochs=0, record_every=100))
        scale = np.sqrt(sum(np.sum(w * w) for w in net.stack.weights))
        assert balance_report(final.stack).c_max <= 1e-3 * scale

    def test_huge_learning_rate_diverges(self, rng):
        net, data = linear_regression(rng)
        with pytest.raises(DivergenceDetected) as info:
            train(net, data, OptimizerConfig(learning_rate=1e3),
                  Schedule(main_epochs=500, extra_epochs=0, record_every=1000))
        trace = info.value.trace
        assert trace is not None
        assert trace.failed
        assert trace.failed_at == info.value.epoch
        assert trace.epochs[-1] == info.value.epoch
        assert np.isnan(trace.loss[-1])
        assert np.isfinite(trace.loss[0])

    def test_smaller_steps_track_the_gradient_flow(self):
        rng = make_rng(17)
        net, data = linear_regression(rng, widths=(4, 6, 6, 5), n=32)
        horizon = 0.5

        def feature_after(lr):
            epochs = int(round(horizon / lr))
            final, _ = train(net, data, OptimizerConfig(learning_rate=lr),
                             Schedule(main_epochs=epochs, extra_epochs=0, record_every=epochs))
            return neural_feature_matrix(final.stack)

        reference = feature_after(1.25e-4)
        coarse = np.linalg.norm(feature_after(1e-3) - reference)
        fine = np.linalg.norm(feature_after(5e-4) - reference)
        assert coarse > 0
        assert coarse / fine >= 1.5
        assert mse_loss(net, data) > 0
