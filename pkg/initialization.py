#!/usr/bin/env python3
"""
Weight Initialization
Default uniform initialization, the W₁ rescaling, forced balancedness between
adjacent linear layers, and balancedness measurement.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from errors import ShapeError, TooShallow
from linalg import haar_columns, svd
from network import GenericFeedforward, LinearStack, Network, ReluHead

BALANCE_TOL = 1e-10


@dataclass
class BalanceReport:
    """Per-pair defects ‖W_lW_lᵀ − W_{l+1}ᵀW_{l+1}‖_F and their maximum."""
    defects: List[float]
    c_max: float

    def is_balanced(self, tol: float = BALANCE_TOL) -> bool:
        return self.c_max <= tol


def _widths(shapes: Sequence) -> List[int]:
    """Accept either a width list [d, d₂, …] or (rows, cols) layer shapes."""
    shapes = list(shapes)
    if shapes and isinstance(shapes[0], (tuple, list)):
        widths = [int(shapes[0][1])]
        for rows, cols in shapes:
            if int(cols) != widths[-1]:
                raise ShapeError(f"layer shapes do not conform at {(rows, cols)}")
            widths.append(int(rows))
    else:
        widths = [int(w) for w in shapes]
    if len(widths) < 2:
        raise ShapeError("need an input width and at least one layer")
    if min(widths) < 1:
        raise ShapeError(f"widths must be positive, got {widths}")
    return widths


def uniform_fan_in(shape, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def default_uniform_init(shapes: Sequence, rng: np.random.Generator) -> LinearStack:
    """Entries of layer l drawn from U(−1/√d_l, 1/√d_l), d_l the in-degree."""
    widths = _widths(shapes)
    weights = [uniform_fan_in((d_out, d_in), d_in, rng)
               for d_in, d_out in zip(widths[:-1], widths[1:])]
    return LinearStack(weights)


def w1_rescale_factor(d1: int, d2: int, d3: int, moment_matched: bool = False) -> float:
    """√(d₁d₃(5d₂+5d₃−1) / (d₂²(5d₁+5d₂−1))).

    With moment_matched=True the fourth root of the same ratio is returned,
    which is the factor that equalizes E‖W̃₁W̃₁ᵀ‖²_F and E‖W₂ᵀW₂‖²_F.
    """
    if min(d1, d2, d3) < 1:
        raise ShapeError("layer widths must be positive")
    ratio = (d1 * d3 * (5 * d2 + 5 * d3 - 1)) / (d2 * d2 * (5 * d1 + 5 * d2 - 1))
    return float(ratio ** 0.25) if moment_matched else float(np.sqrt(ratio))


def force_balanced(stack: LinearStack, rng: np.random.Generator,
                   moment_matched: bool = False) -> LinearStack:
    """Rebuild layers 2..L so every adjacent pair is balanced.

    W̃₁ is the rescaled input layer with reduced SVD U₁ΣV₁ᵀ; each following
    layer is U_lΣU_{l−1}ᵀ with U_l the leading d₁ columns of a Haar matrix.
    The bias after the stack is carried over untouched.
    """
    weights = stack.weights
    if stack.depth == 1:
        return LinearStack([weights[0].copy()], stack.bias1)

    widths = stack.widths
    d1 = widths[0]
    if min(widths[1:]) < d1:
        raise ShapeError(f"balanced init needs every layer width >= d1={d1}, got {widths}")

    factor = w1_rescale_factor(widths[0], widths[1], widths[2], moment_matched)
    w1 = factor * weights[0]
    decomposition = svd(w1)
    sigma = np.diag(decomposition.singular_values)
    balanced = [w1]
    previous = decomposition.u
    for l in range(2, stack.depth + 1):
        current = haar_columns(widths[l], d1, rng)
        balanced.append(current @ sigma @ previous.T)
        previous = current
    return LinearStack(balanced, stack.bias1)


def defect_matrices(stack: LinearStack) -> List[np.ndarray]:
    """C_l = W_lW_lᵀ − W_{l+1}ᵀW_{l+1} for l = 1..L−1."""
    weights = stack.weights
    return [lower @ lower.T - upper.T @ upper for lower, upper in zip(weights, weights[1:])]


def balance_report(stack: LinearStack) -> BalanceReport:
    if stack.depth < 2:
        raise TooShallow("balancedness needs at least two layers")
    defects = [float(np.linalg.norm(c, "fro")) for c in defect_matrices(stack)]
    return BalanceReport(defects, max(defects))


def build_network(widths: Sequence[int], head: str, rng: np.random.Generator,
                  balanced: bool = False, bias: bool = True) -> Network:
    """A freshly initialized network of one of the three variants.

    Biases and head parameters use the same fan-in uniform scheme as the
    weights. Balancing only touches the linear layers; the head is untouched.
    """
    widths = _widths(widths)
    stack = default_uniform_init(widths, rng)
    if balanced:
        stack = force_balanced(stack, rng)
    width_out = widths[-1]

    if head == "generic":
        biases = [uniform_fan_in(d_out, d_in, rng) for d_in, d_out in zip(widths[:-1], widths[1:])]
        if not bias:
            biases = [np.zeros_like(c) for c in biases]
        a = uniform_fan_in(width_out, width_out, rng)
        b2 = float(uniform_fan_in((), width_out, rng)) if bias else 0.0
        return Network(stack, GenericFeedforward(biases, a, b2))

    bias1 = uniform_fan_in(width_out, widths[-2], rng) if bias else None
    stack = LinearStack(stack.weights, bias1)
    if head == "relu":
        a = uniform_fan_in(width_out, width_out, rng)
        b2 = float(uniform_fan_in((), width_out, rng)) if bias else 0.0
        return Network(stack, ReluHead(a, b2))
    if head == "none":
        return Network(stack)
    raise ValueError(f"unknown head kind {head!r}")


def expected_gram_norm_sq(m: int, n: int) -> float:
    """E‖AᵀA‖²_F for A ∈ R^{m×n} with i.i.d. U(−1, 1) entries: mn(1/5 + (m+n−2)/9)."""
    return m * n * (1.0 / 5.0 + (m + n - 2) / 9.0)


def expected_layer_gram_norm_sq(d_in: int, d_out: int) -> float:
    """E‖W_lᵀW_l‖²_F under the default uniform init of a d_out×d_in layer."""
    return expected_gram_norm_sq(d_out, d_in) / (d_in * d_in)


def monte_carlo_gram_norm_sq(m: int, n: int, samples: int, rng: np.random.Generator,
                             scale: float = 1.0, chunk: int = 2000) -> Tuple[float, float]:
    """Sample mean and standard error of ‖AᵀA‖²_F for A with U(−scale, scale) entries."""
    values = []
    remaining = samples
    while remaining > 0:
        size = min(chunk, remaining)
        a = rng.uniform(-scale, scale, size=(size, m, n))
        gram = np.matmul(a.transpose(0, 2, 1), a)
        values.append(np.sum(gram * gram, axis=(1, 2)))
        remaining -= size
    values = np.concatenate(values)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))
