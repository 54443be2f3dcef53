#!/usr/bin/env python3
"""
Training Loop
Full-batch gradient descent, mini-batch SGD (both with optional heavy-ball
momentum) and Adam, all with coupled weight decay, run over a two-phase
learning-rate schedule with periodic recording.

Continuous time advances by the learning rate once per epoch, so during the
main phase t = epoch·η.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from datasets import Dataset
from errors import ConfigInvalid, DivergenceDetected, NonFiniteEntries, ShapeMismatch
from linalg import make_rng
from network import Network, is_decayed, mse_loss, parameter_gradients
from nfa import AlignmentTrace, Monitor, TraceRecorder

OPTIMIZER_KINDS = ("gd", "sgd", "adam")


@dataclass
class OptimizerConfig:
    kind: str = "gd"
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    momentum: float = 0.0
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    batch_size: int = 64

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigInvalid(f"optimizer kind must be one of {OPTIMIZER_KINDS}, got {self.kind!r}")
        if not self.learning_rate > 0:
            raise ConfigInvalid("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ConfigInvalid("weight_decay must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ConfigInvalid("momentum must lie in [0, 1)")
        self.adam_betas = tuple(float(b) for b in self.adam_betas)
        if len(self.adam_betas) != 2 or not all(0 <= b < 1 for b in self.adam_betas):
            raise ConfigInvalid("adam_betas must be two values in [0, 1)")
        if not self.adam_eps > 0:
            raise ConfigInvalid("adam_eps must be positive")
        if self.batch_size < 1:
            raise ConfigInvalid("batch_size must be at least 1")


@dataclass
class Schedule:
    """main_epochs at η, then extra_epochs at η/drop_factor."""
    main_epochs: int = 5000
    drop_factor: float = 10.0
    extra_epochs: int = 100
    record_every: int = 50

    def __post_init__(self):
        if self.main_epochs < 1:
            raise ConfigInvalid("main_epochs must be at least 1")
        if not self.drop_factor > 0:
            raise ConfigInvalid("drop_factor must be positive")
        if self.extra_epochs < 0:
            raise ConfigInvalid("extra_epochs must be non-negative")
        if self.record_every < 1:
            raise ConfigInvalid("record_every must be at least 1")

    @property
    def total_epochs(self) -> int:
        return self.main_epochs + self.extra_epochs

    def learning_rate(self, epoch: int, base: float) -> float:
        """Rate used for the updates of epoch `epoch` (1-based)."""
        return base if epoch <= self.main_epochs else base / self.drop_factor

    def records(self, epoch: int) -> bool:
        return epoch % self.record_every == 0 or epoch == self.total_epochs


def _zeros_like(params: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in params.items()}


@dataclass
class TrainState:
    net: Network
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    epoch: int = 0
    step_count: int = 0
    t: float = 0.0
    rng: Optional[np.random.Generator] = None

    @classmethod
    def fresh(cls, net: Network, rng: Optional[np.random.Generator] = None) -> "TrainState":
        params = net.named_parameters()
        return cls(net, _zeros_like(params), _zeros_like(params), _zeros_like(params), rng=rng)


def step(state: TrainState, cfg: OptimizerConfig, batch: Dataset,
         learning_rate: Optional[float] = None) -> TrainState:
    """One update on `batch`; the weight-decay term λW joins the gradient."""
    lr = cfg.learning_rate if learning_rate is None else learning_rate
    wd = cfg.weight_decay
    params = state.net.named_parameters()
    grads = parameter_gradients(state.net, batch)
    velocity, adam_m, adam_v = dict(state.velocity), dict(state.adam_m), dict(state.adam_v)
    count = state.step_count + 1

    new_params = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        decay = wd if is_decayed(name) else 0.0
        if cfg.kind == "adam":
            beta1, beta2 = cfg.adam_betas
            g = g + decay * p
            adam_m[name] = beta1 * state.adam_m[name] + (1.0 - beta1) * g
            adam_v[name] = beta2 * state.adam_v[name] + (1.0 - beta2) * g * g
            m_hat = adam_m[name] / (1.0 - beta1 ** count)
            v_hat = adam_v[name] / (1.0 - beta2 ** count)
            new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        elif cfg.momentum > 0:
            velocity[name] = cfg.momentum * state.velocity[name] + g + decay * p
            new_params[name] = p - lr * velocity[name]
        else:
            new_params[name] = (1.0 - lr * decay) * p - lr * g

    for name, p in new_params.items():
        if not np.all(np.isfinite(p)):
            raise DivergenceDetected(f"parameter {name} became non-finite", epoch=state.epoch)
    return replace(state, net=state.net.with_parameters(new_params), velocity=velocity,
                   adam_m=adam_m, adam_v=adam_v, step_count=count)


def _batches(data: Dataset, cfg: OptimizerConfig, rng: np.random.Generator):
    if cfg.kind == "gd":
        yield data
        return
    order = rng.permutation(len(data))
    for start in range(0, len(data), cfg.batch_size):
        yield data.subset(order[start:start + cfg.batch_size])


def run_epoch(state: TrainState, cfg: OptimizerConfig, data: Dataset, learning_rate: float) -> TrainState:
    """Visit every sample once; sgd and adam draw a fresh permutation and keep the short last batch."""
    for batch in _batches(data, cfg, state.rng):
        state = step(state, cfg, batch, learning_rate)
    return replace(state, epoch=state.epoch + 1, t=state.t + learning_rate)


def train(net: Network, data: Dataset, cfg: OptimizerConfig, sched: Schedule,
          monitors: Sequence[Monitor] = (), seed: Optional[int] = None,
          rng: Optional[np.random.Generator] = None,
          alpha_tildes: Optional[Sequence[float]] = None) -> Tuple[Network, AlignmentTrace]:
    """Run the schedule and return the final network with its alignment trace.

    The trace is recorded at epoch 0, every record_every epochs and at the
    final epoch; extra monitors fire at the same epochs with
    (epoch, t, net, loss). A non-finite loss or parameter stops training with
    DivergenceDetected carrying the trace, closed by a nan row.
    """
    recorder = TraceRecorder(net.depth, alpha_tildes)
    hooks = [recorder] + list(monitors)
    state = TrainState.fresh(net, rng if rng is not None else make_rng(seed))

    def record(current: TrainState, loss: float) -> None:
        for hook in hooks:
            hook(current.epoch, current.t, current.net, loss)

    def fail(current: TrainState, epoch: int, message: str):
        recorder.trace.mark_nan(epoch, current.t)
        return DivergenceDetected(message, trace=recorder.trace, epoch=epoch)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        record(state, mse_loss(state.net, data))
        for epoch in range(1, sched.total_epochs + 1):
            lr = sched.learning_rate(epoch, cfg.learning_rate)
            try:
                state = run_epoch(state, cfg, data, lr)
                loss = mse_loss(state.net, data)
                if not np.isfinite(loss):
                    raise DivergenceDetected("loss became non-finite", epoch=epoch)
                if sched.records(epoch):
                    record(state, loss)
            except (DivergenceDetected, NonFiniteEntries) as exc:
                raise fail(state, epoch, f"training diverged at epoch {epoch}: {exc}") from exc
    return state.net, recorder.trace
