#!/usr/bin/env python3
"""
Network Models
Deep linear stacks W_L···W₁ with an optional ReLU head or a generic
ReLU feedforward variant, with analytic backpropagation, input gradients,
end-to-end Jacobians and AGOP matrices.

Parameter names used throughout: W1..WL (weights), b1 (bias after the linear
stack), a and b2 (ReLU head / readout), c1..cL (per-layer biases of the
generic feedforward variant).
"""

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Union

import numpy as np

from datasets import Dataset
from errors import EmptyDataset, NonScalarOutput, ShapeError, ShapeMismatch
from fileio import atomic_write_text
from linalg import as_matrix, as_vector

CHECKPOINT_FORMAT = "nfa-lab-network"
CHECKPOINT_VERSION = 1


@dataclass
class LinearStack:
    """Ordered weights W₁..W_L (W₁ first) and an optional bias b₁ after W_L."""
    weights: List[np.ndarray]
    bias1: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.weights) < 1:
            raise ShapeError("a linear stack needs at least one layer")
        self.weights = [as_matrix(w) for w in self.weights]
        for lower, upper in zip(self.weights, self.weights[1:]):
            if upper.shape[1] != lower.shape[0]:
                raise ShapeError(
                    f"layer shapes {lower.shape} -> {upper.shape} do not conform")
        if self.bias1 is not None:
            self.bias1 = as_vector(self.bias1)
            if self.bias1.shape[0] != self.output_dim:
                raise ShapeError(
                    f"bias1 has length {self.bias1.shape[0]}, expected {self.output_dim}")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def widths(self) -> List[int]:
        return [self.input_dim] + [w.shape[0] for w in self.weights]


@dataclass
class ReluHead:
    """a·[f̃(x)]₊ + b₂."""
    a: np.ndarray
    b2: float = 0.0

    def __post_init__(self):
        self.a = as_vector(self.a)
        self.b2 = float(self.b2)


@dataclass
class GenericFeedforward:
    """ReLU after every layer: h_l = [W_l h_{l-1} + c_l]₊, output a·h_L + b₂."""
    biases: List[np.ndarray]
    a: np.ndarray
    b2: float = 0.0

    def __post_init__(self):
        self.biases = [as_vector(c) for c in self.biases]
        self.a = as_vector(self.a)
        self.b2 = float(self.b2)


Head = Union[None, ReluHead, GenericFeedforward]


@dataclass
class Network:
    stack: LinearStack
    head: Head = None

    def __post_init__(self):
        out = self.stack.output_dim
        if isinstance(self.head, ReluHead):
            if self.head.a.shape[0] != out:
                raise ShapeError(f"head vector has length {self.head.a.shape[0]}, expected {out}")
        elif isinstance(self.head, GenericFeedforward):
            if self.stack.bias1 is not None:
                raise ShapeError("the generic feedforward variant carries its biases in the head")
            if len(self.head.biases) != self.stack.depth:
                raise ShapeError("one bias per layer is required")
            for w, c in zip(self.stack.weights, self.head.biases):
                if c.shape[0] != w.shape[0]:
                    raise ShapeError(f"bias of length {c.shape[0]} for layer {w.shape}")
            if self.head.a.shape[0] != out:
                raise ShapeError(f"readout has length {self.head.a.shape[0]}, expected {out}")
        elif self.head is not None:
            raise TypeError(f"unsupported head {type(self.head).__name__}")

    @property
    def depth(self) -> int:
        return self.stack.depth

    @property
    def input_dim(self) -> int:
        return self.stack.input_dim

    @property
    def scalar_output(self) -> bool:
        return self.head is not None

    @property
    def head_kind(self) -> str:
        if isinstance(self.head, ReluHead):
            return "relu"
        if isinstance(self.head, GenericFeedforward):
            return "generic"
        return "none"

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {f"W{l + 1}": w for l, w in enumerate(self.stack.weights)}
        if self.stack.bias1 is not None:
            params["b1"] = self.stack.bias1
        if isinstance(self.head, GenericFeedforward):
            for l, c in enumerate(self.head.biases):
                params[f"c{l + 1}"] = c
        if self.head is not None:
            params["a"] = self.head.a
            params["b2"] = np.array(self.head.b2)
        return params

    def with_parameters(self, params: Dict[str, np.ndarray]) -> "Network":
        weights = [params[f"W{l + 1}"] for l in range(self.depth)]
        stack = LinearStack(weights, params.get("b1"))
        if isinstance(self.head, ReluHead):
            return Network(stack, ReluHead(params["a"], float(params["b2"])))
        if isinstance(self.head, GenericFeedforward):
            biases = [params[f"c{l + 1}"] for l in range(self.depth)]
            return Network(stack, GenericFeedforward(biases, params["a"], float(params["b2"])))
        return Network(stack)

    def input_gradients(self, xs) -> np.ndarray:
        """Per-sample input gradients: (N, d), or (N, k, d) Jacobians for head None."""
        xs = _as_batch(self, xs)
        if self.head is None:
            jac = end_to_end_jacobian(self.stack)
            return np.broadcast_to(jac, (xs.shape[0],) + jac.shape).copy()
        hs, zs, _ = _propagate(self, xs)
        _, d_input = _backpropagate(self, hs, zs, np.ones(xs.shape[0]))
        return d_input


def is_decayed(name: str) -> bool:
    """Weight decay covers the weight matrices and the head vector, not biases."""
    return name.startswith("W") or name == "a"


@dataclass
class GradientSet:
    """Gradients keyed by parameter name, shape-congruent with the network."""
    grads: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]

    def items(self):
        return self.grads.items()

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(g * g) for g in self.grads.values())))


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _as_batch(net: Network, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if xs.shape[1] != net.input_dim:
        raise ShapeMismatch(f"inputs have dimension {xs.shape[1]}, network expects {net.input_dim}")
    return xs


def _propagate(net: Network, xs: np.ndarray):
    """Forward pass keeping layer inputs `hs` and ReLU preactivations `zs`."""
    weights = net.stack.weights
    hs = [xs]
    zs = []
    if isinstance(net.head, GenericFeedforward):
        h = xs
        for w, c in zip(weights, net.head.biases):
            z = h @ w.T + c
            zs.append(z)
            h = _relu(z)
            hs.append(h)
        return hs, zs, h @ net.head.a + net.head.b2

    h = xs
    for w in weights:
        h = h @ w.T
        hs.append(h)
    z = h if net.stack.bias1 is None else h + net.stack.bias1
    if isinstance(net.head, ReluHead):
        zs.append(z)
        return hs, zs, _relu(z) @ net.head.a + net.head.b2
    return hs, zs, z


def _backpropagate(net: Network, hs, zs, d_out: np.ndarray):
    """Push dLoss/dOutput back through the network.

    Returns the parameter gradients and the gradient with respect to the inputs.
    """
    weights = net.stack.weights
    L = len(weights)
    grads: Dict[str, np.ndarray] = {}

    if isinstance(net.head, GenericFeedforward):
        grads["a"] = hs[-1].T @ d_out
        grads["b2"] = np.array(np.sum(d_out))
        delta = d_out[:, None] * net.head.a[None, :] * (zs[-1] > 0)
        for l in range(L, 0, -1):
            grads[f"W{l}"] = delta.T @ hs[l - 1]
            grads[f"c{l}"] = delta.sum(axis=0)
            delta = delta @ weights[l - 1]
            if l > 1:
                delta = delta * (zs[l - 2] > 0)
        return grads, delta

    if isinstance(net.head, ReluHead):
        z = zs[-1]
        grads["a"] = _relu(z).T @ d_out
        grads["b2"] = np.array(np.sum(d_out))
        delta = d_out[:, None] * net.head.a[None, :] * (z > 0)
    else:
        delta = d_out
    if net.stack.bias1 is not None:
        grads["b1"] = delta.sum(axis=0)
    for l in range(L, 0, -1):
        grads[f"W{l}"] = delta.T @ hs[l - 1]
        delta = delta @ weights[l - 1]
    return grads, delta


def forward_batch(net: Network, xs) -> np.ndarray:
    """Outputs for each row of xs: shape (N,) for scalar heads, (N, k) otherwise."""
    _, _, out = _propagate(net, _as_batch(net, xs))
    return out


def forward(net: Network, x) -> Union[float, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ShapeMismatch(f"input of shape {x.shape}, network expects ({net.input_dim},)")
    out = forward_batch(net, x[None, :])
    return float(out[0]) if net.scalar_output else out[0]


def end_to_end_jacobian(stack: LinearStack) -> np.ndarray:
    """W_L···W₁, the constant Jacobian of the linear part."""
    return reduce(lambda acc, w: w @ acc, stack.weights[1:], stack.weights[0])


def agop_linear(stack: LinearStack) -> np.ndarray:
    jac = end_to_end_jacobian(stack)
    agop = jac.T @ jac
    return 0.5 * (agop + agop.T)


def neural_feature_matrix(stack: LinearStack) -> np.ndarray:
    w1 = stack.weights[0]
    return w1.T @ w1


def input_gradient(net: Network, x) -> np.ndarray:
    if not net.scalar_output:
        raise NonScalarOutput("input gradients need a scalar-output head")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ShapeMismatch(f"input of shape {x.shape}, network expects ({net.input_dim},)")
    return net.input_gradients(x[None, :])[0]


def agop_empirical(f, xs) -> np.ndarray:
    """(1/N) Σ ∇f(x_i)∇f(x_i)ᵀ.

    `f` is anything exposing `input_gradients(xs)` (networks, targets) or a
    callable returning the gradients directly. Vector-valued models return
    (N, k, d) Jacobians whose per-output outer products are summed.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if xs.shape[0] == 0 or xs.size == 0:
        raise EmptyDataset("the AGOP needs at least one input")
    grads = f.input_gradients(xs) if hasattr(f, "input_gradients") else f(xs)
    grads = np.asarray(grads, dtype=np.float64)
    n = xs.shape[0]
    if grads.ndim == 2:
        agop = grads.T @ grads / n
    else:
        agop = np.einsum("nki,nkj->ij", grads, grads) / n
    return 0.5 * (agop + agop.T)


def _residuals(net: Network, data: Dataset) -> np.ndarray:
    out = forward_batch(net, data.inputs)
    if out.shape != data.targets.shape:
        raise ShapeMismatch(f"outputs of shape {out.shape} vs targets of shape {data.targets.shape}")
    return out - data.targets


def mse_loss(net: Network, data: Dataset) -> float:
    """(1/N) Σ ‖f(x_i) − y_i‖²."""
    res = _residuals(net, data)
    return float(np.sum(res * res) / len(data))


def parameter_gradients(net: Network, batch: Dataset) -> GradientSet:
    """Exact gradient of the batch-averaged squared error for every parameter."""
    xs = _as_batch(net, batch.inputs)
    hs, zs, out = _propagate(net, xs)
    if out.shape != batch.targets.shape:
        raise ShapeMismatch(f"outputs of shape {out.shape} vs targets of shape {batch.targets.shape}")
    d_out = 2.0 * (out - batch.targets) / len(batch)
    grads, _ = _backpropagate(net, hs, zs, d_out)
    return GradientSet(grads)


def network_to_dict(net: Network) -> Dict:
    def matrix_entry(m):
        return {"rows": m.shape[0], "cols": m.shape[1], "entries": m.ravel().tolist()}

    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "head": net.head_kind,
        "layers": [matrix_entry(w) for w in net.stack.weights],
        "bias1": None if net.stack.bias1 is None else net.stack.bias1.tolist(),
    }
    if net.head is not None:
        doc["a"] = net.head.a.tolist()
        doc["b2"] = net.head.b2
    if isinstance(net.head, GenericFeedforward):
        doc["biases"] = [c.tolist() for c in net.head.biases]
    return doc


def network_from_dict(doc: Dict) -> Network:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a network checkpoint: format={doc.get('format')!r}")
    weights = [np.array(layer["entries"], dtype=np.float64).reshape(layer["rows"], layer["cols"])
               for layer in doc["layers"]]
    stack = LinearStack(weights, doc.get("bias1"))
    kind = doc.get("head", "none")
    if kind == "relu":
        return Network(stack, ReluHead(doc["a"], doc["b2"]))
    if kind == "generic":
        return Network(stack, GenericFeedforward(doc["biases"], doc["a"], doc["b2"]))
    return Network(stack)


def save_checkpoint(net: Network, path: str) -> None:
    atomic_write_text(path, json.dumps(network_to_dict(net), indent=1) + "\n")


def load_checkpoint(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as handle:
        return network_from_dict(json.load(handle))
