#!/usr/bin/env python3
"""
Synthetic Targets
Low-rank multi-index targets f*(x) = aᵀg(Ax + b) (or the vector g(Ax + b)),
dataset sampling on the cube [−1/2, 1/2]^d, the two counterexamples showing
what AGOP alignment does and does not imply, and low-rank structure checks.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from datasets import Dataset
from errors import ShapeError, ZeroMatrix
from linalg import as_matrix, as_vector, cosine_similarity, svd
from network import LinearStack, Network, ReluHead, agop_empirical, forward_batch

LINKS = ("relu", "gauss", "identity")
OUTPUTS = ("scalar", "vector")
CUBE_HALF_WIDTH = 0.5
RANK_TOL = 1e-8
COUNTEREXAMPLE_SAMPLES = 10 ** 6


def _link(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "gauss":
        return np.exp(-z * z)
    return z


def _link_derivative(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "gauss":
        return -2.0 * z * np.exp(-z * z)
    return np.ones_like(z)


@dataclass
class MultiIndexTarget:
    """f*(x) = aᵀg(Ax + b) + offset (scalar) or g(Ax + b) (vector).

    The link g acts elementwise. `rank` is the rank of A, so f* only varies
    along the row space T of A.
    """
    a_matrix: np.ndarray
    bias: np.ndarray
    link: str = "relu"
    output: str = "scalar"
    head: Optional[np.ndarray] = None
    offset: float = 0.0
    rank: Optional[int] = None

    def __post_init__(self):
        self.a_matrix = as_matrix(self.a_matrix)
        self.bias = as_vector(self.bias)
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}, got {self.link!r}")
        if self.output not in OUTPUTS:
            raise ValueError(f"output must be one of {OUTPUTS}, got {self.output!r}")
        rows, d = self.a_matrix.shape
        if self.bias.shape[0] != rows:
            raise ShapeError(f"bias has length {self.bias.shape[0]}, expected {rows}")
        if self.output == "scalar":
            if self.head is None:
                raise ShapeError("a scalar target needs a head vector")
            self.head = as_vector(self.head)
            if self.head.shape[0] != rows:
                raise ShapeError(f"head has length {self.head.shape[0]}, expected {rows}")
        if self.rank is None:
            self.rank = row_space_basis(self.a_matrix).shape[1]
        if self.rank > d:
            raise ShapeError(f"rank {self.rank} exceeds the input dimension {d}")

    @property
    def input_dim(self) -> int:
        return self.a_matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return 1 if self.output == "scalar" else self.a_matrix.shape[0]

    def _preactivations(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        if xs.shape[1] != self.input_dim:
            raise ShapeError(f"inputs have dimension {xs.shape[1]}, target expects {self.input_dim}")
        return xs @ self.a_matrix.T + self.bias

    def evaluate(self, xs) -> np.ndarray:
        """Outputs for a batch: (N,) for scalar targets, (N, k) for vector ones."""
        g = _link(self.link, self._preactivations(xs))
        if self.output == "scalar":
            return g @ self.head + self.offset
        return g

    def input_gradients(self, xs) -> np.ndarray:
        """(N, d) gradients, or (N, k, d) Jacobians for vector targets."""
        slope = _link_derivative(self.link, self._preactivations(xs))
        if self.output == "scalar":
            return (slope * self.head) @ self.a_matrix
        return slope[:, :, None] * self.a_matrix[None, :, :]

    def describe(self) -> Dict:
        doc = {
            "kind": "multiindex",
            "link": self.link,
            "output": self.output,
            "rank": self.rank,
            "a_matrix": self.a_matrix.tolist(),
            "bias": self.bias.tolist(),
            "offset": self.offset,
        }
        if self.head is not None:
            doc["head"] = self.head.tolist()
        return doc


def row_space_basis(a_matrix: np.ndarray) -> np.ndarray:
    """Orthonormal d×r basis of the row space of A."""
    decomposition = svd(a_matrix)
    sigma = decomposition.singular_values
    if sigma.size == 0 or sigma[0] == 0.0:
        return np.zeros((a_matrix.shape[1], 0))
    keep = sigma > RANK_TOL * sigma[0]
    return decomposition.v[:, keep]


def _low_rank_uniform(rows: int, cols: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    if rank == min(rows, cols):
        return rng.uniform(-1.0, 1.0, size=(rows, cols))
    return rng.uniform(-1.0, 1.0, size=(rows, rank)) @ rng.uniform(-1.0, 1.0, size=(rank, cols))


def make_multiindex_target(d: int, rank: int, link: str, output: str,
                           rng: np.random.Generator, output_dim: Optional[int] = None) -> MultiIndexTarget:
    """Random rank-r target with U(−1, 1) coefficients and ‖A‖₂ = 1.

    Scalar targets use an r×d matrix A; vector targets an output_dim×d
    matrix of rank r (default output_dim = d + 1).
    """
    if not 1 <= rank <= d:
        raise ShapeError(f"rank must lie in [1, {d}], got {rank}")
    rows = rank if output == "scalar" else (output_dim or d + 1)
    if rows < rank:
        raise ShapeError(f"output_dim {rows} is smaller than the rank {rank}")
    a_matrix = _low_rank_uniform(rows, d, rank, rng)
    a_matrix = a_matrix / svd(a_matrix).singular_values[0]
    bias = rng.uniform(-1.0, 1.0, size=rows)
    head = rng.uniform(-1.0, 1.0, size=rows) if output == "scalar" else None
    return MultiIndexTarget(a_matrix, bias, link, output, head, rank=rank)


def sample_cube(n: int, d: int, rng: np.random.Generator,
                half_width: float = CUBE_HALF_WIDTH) -> np.ndarray:
    return rng.uniform(-half_width, half_width, size=(n, d))


def _with_noise(clean: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0:
        return clean
    return clean + sigma * rng.standard_normal(clean.shape)


def sample_multiindex(target: MultiIndexTarget, n: int, sigma: float,
                      rng: np.random.Generator, seed: Optional[int] = None) -> Dataset:
    """x_i ~ U([−1/2, 1/2]^d), y_i = f*(x_i) + σ·N(0, 1) per output coordinate."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    xs = sample_cube(n, target.input_dim, rng)
    ys = _with_noise(target.evaluate(xs), sigma, rng)
    return Dataset(xs, ys, sigma, seed, target.describe())


def network_dataset(net: Network, n: int, rng: np.random.Generator, sigma: float = 0.0,
                    seed: Optional[int] = None) -> Dataset:
    """Cube inputs labelled by `net` itself."""
    xs = sample_cube(n, net.input_dim, rng)
    ys = _with_noise(forward_batch(net, xs), sigma, rng)
    return Dataset(xs, ys, sigma, seed, {"kind": "network", "head": net.head_kind, "depth": net.depth})


def target_agop(target, xs) -> np.ndarray:
    return agop_empirical(target, xs)


def singular_value_profile(w1) -> np.ndarray:
    """σ_i/σ₁ in descending order."""
    sigma = svd(w1).singular_values
    if sigma.size == 0 or sigma[0] == 0.0:
        raise ZeroMatrix("the singular-value profile of a zero matrix is undefined")
    return sigma / sigma[0]


@dataclass
class SubspaceReport:
    invariance_error: float
    gradient_leak: float
    complement_quadratic: float
    complement_dim: int

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.invariance_error, self.gradient_leak, self.complement_quadratic) <= tol


def subspace_checks(target: MultiIndexTarget, probes: int, rng: np.random.Generator) -> SubspaceReport:
    """Check that f* only sees the row space T of A.

    f*(x) = f*(P_T x), ∇f*(x) ∈ T and x_⊥ᵀA_{f*}x_⊥ = 0 for unit x_⊥ ⊥ T.
    """
    if probes < 1:
        raise ValueError("probes must be at least 1")
    basis = row_space_basis(target.a_matrix)
    d = target.input_dim
    projector = basis @ basis.T
    complement = np.eye(d) - projector

    xs = sample_cube(probes, d, rng)
    invariance = float(np.max(np.abs(target.evaluate(xs) - target.evaluate(xs @ projector))))
    grads = target.input_gradients(xs)
    leak = float(np.max(np.abs(grads @ complement)))

    complement_dim = d - basis.shape[1]
    quadratic = 0.0
    if complement_dim > 0:
        agop = agop_empirical(target, xs)
        perp = rng.standard_normal((probes, d)) @ complement
        norms = np.linalg.norm(perp, axis=1)
        perp = perp[norms > 0] / norms[norms > 0, None]
        quadratic = float(np.max(np.abs(np.einsum("ni,ij,nj->n", perp, agop, perp)))) if len(perp) else 0.0
    return SubspaceReport(invariance, leak, quadratic, complement_dim)


@dataclass
class ReluSumCounterexample:
    """f*(x) = [x₁]₊ + [x₂]₊ with its exact AGOP and two interpolating networks.

    The narrow net (W = I₂) has WᵀW = I₂, not proportional to any power of
    the AGOP; the widened net has WᵀW ∝ E_f exactly.
    """
    target: MultiIndexTarget
    exact_agop: np.ndarray
    narrow_net: Network
    wide_net: Network


def relu_sum_counterexample() -> ReluSumCounterexample:
    target = MultiIndexTarget(np.eye(2), np.zeros(2), "relu", "scalar", head=np.ones(2))
    exact = 0.25 * np.array([[2.0, 1.0], [1.0, 2.0]])
    narrow = Network(LinearStack([np.eye(2)], np.zeros(2)), ReluHead(np.ones(2), 0.0))
    wide_w = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    wide = Network(LinearStack([wide_w], np.zeros(3)), ReluHead(np.array([1.0, 1.0, 0.0]), 0.0))
    return ReluSumCounterexample(target, exact, narrow, wide)


def sample_square(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on [−1, 1]², every quadrant equally likely."""
    return rng.uniform(-1.0, 1.0, size=(n, 2))


@dataclass
class OscillationTarget:
    """f_n*(x) = (1/n)cos(n²x₁) + x₂."""
    n: int

    def evaluate(self, xs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        return np.cos(self.n ** 2 * xs[:, 0]) / self.n + xs[:, 1]

    def input_gradients(self, xs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        grads = np.zeros_like(xs, dtype=np.float64)
        grads[:, 0] = -self.n * np.sin(self.n ** 2 * xs[:, 0])
        grads[:, 1] = 1.0
        return grads


def second_coordinate() -> MultiIndexTarget:
    """f(x) = x₂ with AGOP [[0, 0], [0, 1]]."""
    return MultiIndexTarget(np.array([[0.0, 1.0]]), np.zeros(1), "identity", "scalar", head=np.ones(1))


@dataclass
class OscillationReport:
    n: int
    samples: int
    empirical_agop: np.ndarray
    comparison_agop: np.ndarray
    cosine: float
    cosine_closed_form: float
    offdiag_stderr: float
    l1_gap: float
    l1_gap_stderr: float
    l1_gap_closed_form: float
    target: OscillationTarget = field(repr=False, default=None)


def oscillation_counterexample(n: int, samples: int = COUNTEREXAMPLE_SAMPLES,
                               rng: Optional[np.random.Generator] = None) -> OscillationReport:
    """Compare f_n* with f(x) = x₂ on x₁, x₂ ~ U[−π, π].

    A_{f_n*} → diag(n²/2, 1), so the AGOP cosine 1/√(1 + n⁴/4) vanishes
    while the L¹ distance E|f − f_n*| = (2/π)/n also vanishes.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng if rng is not None else np.random.default_rng()
    target = OscillationTarget(n)
    comparison = second_coordinate()
    xs = rng.uniform(-np.pi, np.pi, size=(samples, 2))

    grads = target.input_gradients(xs)
    empirical = agop_empirical(target, xs)
    comparison_agop = agop_empirical(comparison, xs)
    offdiag = grads[:, 0] * grads[:, 1]
    diff = np.abs(comparison.evaluate(xs) - target.evaluate(xs))
    return OscillationReport(
        n=n,
        samples=samples,
        empirical_agop=empirical,
        comparison_agop=comparison_agop,
        cosine=cosine_similarity(comparison_agop, empirical),
        cosine_closed_form=1.0 / np.sqrt(1.0 + (n * n / 2.0) ** 2),
        offdiag_stderr=float(offdiag.std(ddof=1) / np.sqrt(samples)),
        l1_gap=float(diff.mean()),
        l1_gap_stderr=float(diff.std(ddof=1) / np.sqrt(samples)),
        l1_gap_closed_form=2.0 / (np.pi * n),
        target=target,
    )


@dataclass
class ShiftReport:
    shift: float
    cosine: float
    l1_gap: float


def shift_counterexample(shift: float, samples: int = COUNTEREXAMPLE_SAMPLES,
                         rng: Optional[np.random.Generator] = None) -> ShiftReport:
    """f and f + c share their AGOP exactly but sit |c| apart in L¹."""
    rng = rng if rng is not None else np.random.default_rng()
    base = second_coordinate()
    shifted = replace(base, offset=float(shift))
    xs = rng.uniform(-np.pi, np.pi, size=(samples, 2))
    cosine = cosine_similarity(agop_empirical(base, xs), agop_empirical(shifted, xs))
    l1_gap = float(np.mean(np.abs(shifted.evaluate(xs) - base.evaluate(xs))))
    return ShiftReport(float(shift), cosine, l1_gap)
