#!/usr/bin/env python3
"""
NFA Diagnostics
Alignment between the neural feature matrix W₁ᵀW₁ and powers of the AGOP of
the linear part, recorded through training and checked against the exact
(balanced) and asymptotic (weight-decay) alignment results.

All quantities here use the linear stack only; the AGOP of a full nonlinear
model comes from network.agop_empirical and is never mixed in.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from datasets import Dataset
from errors import InsufficientDecay, InsufficientTrace, NotPsd, ShapeMismatch
from initialization import balance_report, defect_matrices
from linalg import as_matrix, cosine_similarity, eig_power, is_psd, matrix_power, sym_eig
from network import LinearStack, Network, agop_linear, is_decayed, mse_loss, neural_feature_matrix

ALPHA_TILDE_START = 0.1
ALPHA_TILDE_STOP = 3.0
ALPHA_TILDE_STEP = 0.05

MIN_TRACE_POINTS = 20
FIT_WINDOW = (0.2, 0.9)
GAP_FLOOR = 1e-12
DEGENERATE_GAP = 1e-8
RATE_SLACK = 0.9


def default_alpha_tildes() -> np.ndarray:
    """α̃ = Lα from 0.1 to 3.0 in steps of 0.05."""
    count = int(round((ALPHA_TILDE_STOP - ALPHA_TILDE_START) / ALPHA_TILDE_STEP)) + 1
    return np.round(ALPHA_TILDE_START + ALPHA_TILDE_STEP * np.arange(count), 10)


def default_alpha_grid(depth: int) -> np.ndarray:
    return default_alpha_tildes() / depth


def _sweep_from_eig(feature: np.ndarray, eig, alphas: Sequence[float]) -> List[float]:
    return [cosine_similarity(feature, eig_power(eig, float(alpha))) for alpha in alphas]


def alpha_sweep(stack: LinearStack, alphas: Sequence[float]) -> List[float]:
    """cos(W₁ᵀW₁, A^α) for every α, A the AGOP of the linear stack."""
    eig = sym_eig(agop_linear(stack))
    return _sweep_from_eig(neural_feature_matrix(stack), eig, alphas)


def best_alpha_tilde(alpha_tildes: Sequence[float], cosines: Sequence[float]) -> float:
    return float(alpha_tildes[int(np.argmax(cosines))])


@dataclass
class FeatureSnapshot:
    cos_at_inv_L: float
    defects: List[float]
    feature_gap: float
    root_gap: float
    wihler_bound: float
    alpha_cosines: Optional[List[float]] = None


def feature_snapshot(stack: LinearStack, alpha_tildes: Optional[Sequence[float]] = None) -> FeatureSnapshot:
    """Everything the trace records about one state of the stack.

    feature_gap is ‖A − (W₁ᵀW₁)^L‖_F, root_gap is ‖A^{1/L} − W₁ᵀW₁‖_F and
    wihler_bound is the bound on root_gap implied by feature_gap.
    """
    depth = stack.depth
    agop = agop_linear(stack)
    feature = neural_feature_matrix(stack)
    eig = sym_eig(agop)
    root = eig_power(eig, 1.0 / depth)
    feature_gap = float(np.linalg.norm(agop - np.linalg.matrix_power(feature, depth), "fro"))
    d = agop.shape[0]
    alpha_cosines = None
    if alpha_tildes is not None:
        alpha_cosines = _sweep_from_eig(feature, eig, np.asarray(alpha_tildes) / depth)
    return FeatureSnapshot(
        cos_at_inv_L=cosine_similarity(feature, root),
        defects=[float(np.linalg.norm(c, "fro")) for c in defect_matrices(stack)],
        feature_gap=feature_gap,
        root_gap=float(np.linalg.norm(root - feature, "fro")),
        wihler_bound=_wihler_value(d, feature_gap, depth),
        alpha_cosines=alpha_cosines,
    )


@dataclass
class AlignmentTrace:
    """Per-recorded-epoch series; every list has one entry per recorded epoch."""
    depth: int
    epochs: List[int] = field(default_factory=list)
    t: List[float] = field(default_factory=list)
    loss: List[float] = field(default_factory=list)
    cos_at_inv_L: List[float] = field(default_factory=list)
    defects: List[List[float]] = field(default_factory=list)
    feature_gap: List[float] = field(default_factory=list)
    root_gap: List[float] = field(default_factory=list)
    wihler_bound: List[float] = field(default_factory=list)
    alpha_tildes: Optional[List[float]] = None
    alpha_table: List[List[float]] = field(default_factory=list)
    failed_at: Optional[int] = None

    def __post_init__(self):
        if not self.defects:
            self.defects = [[] for _ in range(self.depth - 1)]

    def __len__(self) -> int:
        return len(self.epochs)

    def append(self, epoch: int, t: float, loss: float, snap: FeatureSnapshot) -> None:
        self.epochs.append(int(epoch))
        self.t.append(float(t))
        self.loss.append(float(loss))
        self.cos_at_inv_L.append(snap.cos_at_inv_L)
        for series, value in zip(self.defects, snap.defects):
            series.append(value)
        self.feature_gap.append(snap.feature_gap)
        self.root_gap.append(snap.root_gap)
        self.wihler_bound.append(snap.wihler_bound)
        if self.alpha_tildes is not None:
            self.alpha_table.append(list(snap.alpha_cosines))

    def mark_nan(self, epoch: int, t: float) -> None:
        """Close the trace with a nan row at the epoch where training failed."""
        nan = float("nan")
        self.epochs.append(int(epoch))
        self.t.append(float(t))
        for series in (self.loss, self.cos_at_inv_L, self.feature_gap, self.root_gap, self.wihler_bound):
            series.append(nan)
        for series in self.defects:
            series.append(nan)
        if self.alpha_tildes is not None:
            self.alpha_table.append([nan] * len(self.alpha_tildes))
        self.failed_at = int(epoch)

    @property
    def failed(self) -> bool:
        return self.failed_at is not None

    def header(self) -> List[str]:
        return (["epoch", "t", "loss", "cos_inv_L"]
                + [f"defect_{l + 1}" for l in range(self.depth - 1)]
                + ["gap_thm2", "gap_corollary"])

    def rows(self) -> List[list]:
        out = []
        for i, epoch in enumerate(self.epochs):
            out.append([epoch, self.t[i], self.loss[i], self.cos_at_inv_L[i]]
                       + [series[i] for series in self.defects]
                       + [self.feature_gap[i], self.root_gap[i]])
        return out

    def alpha_rows(self) -> List[list]:
        """(epoch, α̃, cosine) for every recorded α-sweep."""
        if self.alpha_tildes is None:
            return []
        return [[epoch, alpha, cos]
                for epoch, cosines in zip(self.epochs, self.alpha_table)
                for alpha, cos in zip(self.alpha_tildes, cosines)]


class TraceRecorder:
    """Training monitor that snapshots the stack into an AlignmentTrace."""

    def __init__(self, depth: int, alpha_tildes: Optional[Sequence[float]] = None):
        tildes = None if alpha_tildes is None else [float(a) for a in alpha_tildes]
        self.trace = AlignmentTrace(depth, alpha_tildes=tildes)

    def __call__(self, epoch: int, t: float, net: Network, loss: float) -> None:
        self.trace.append(epoch, t, loss, feature_snapshot(net.stack, self.trace.alpha_tildes))


Monitor = Callable[[int, float, Network, float], None]


@dataclass
class NfaVerdict:
    cosine: float
    frobenius_gap: float
    bound_value: float
    satisfied: bool


def check_nfa_exact(stack: LinearStack, tol: float = 1e-8) -> NfaVerdict:
    """Does W₁ᵀW₁ = A^{1/L} hold within tol·(1 + ‖A^{1/L}‖_F)?"""
    root = matrix_power(agop_linear(stack), 1.0 / stack.depth)
    feature = neural_feature_matrix(stack)
    gap = float(np.linalg.norm(feature - root, "fro"))
    bound = tol * (1.0 + float(np.linalg.norm(root, "fro")))
    return NfaVerdict(cosine_similarity(feature, root), gap, bound, gap <= bound)


def fit_decay_rate(ts: Sequence[float], values: Sequence[float],
                   window: Tuple[float, float] = FIT_WINDOW) -> float:
    """OLS slope of log(value) against t over the [20%, 90%] window of points.

    Values at or below 1e-12 (and non-finite ones) are skipped.
    """
    ts = np.asarray(ts, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    n = len(ts)
    lo, hi = int(math.floor(window[0] * (n - 1))), int(math.ceil(window[1] * (n - 1)))
    t_win = ts[lo:hi + 1]
    v_win = values[lo:hi + 1]
    usable = np.isfinite(v_win) & (v_win > GAP_FLOOR)
    if np.count_nonzero(usable) < 2:
        raise InsufficientTrace("fewer than two usable points in the fit window")
    slope, _ = np.polyfit(t_win[usable], np.log(v_win[usable]), 1)
    return float(slope)


def defect_decay_rates(trace: AlignmentTrace) -> List[float]:
    return [fit_decay_rate(trace.t, series) for series in trace.defects]


@dataclass
class DecayVerdict:
    """Fitted log-gap slopes in t-units against the rates −2λ and −2λ/L."""
    gap_rate: Optional[float]
    root_gap_rate: Optional[float]
    expected_rate: float
    expected_root_rate: float
    satisfied: bool
    degenerate: bool = False


def check_nfa_asymptotic(trace: AlignmentTrace, weight_decay: float, depth: int) -> DecayVerdict:
    """Fit the decay of ‖A_t − (W₁ᵀW₁)^L‖_F and of the rooted gap.

    The slopes are accepted when they are at least 90% as steep as −2λ and
    −2λ/L. A trace whose gap starts at or below 1e-8 is flagged degenerate.
    """
    if not weight_decay > 0:
        raise InsufficientDecay("the asymptotic alignment rate needs weight decay > 0")
    finite = [i for i, v in enumerate(trace.feature_gap) if np.isfinite(v)]
    if len(finite) < MIN_TRACE_POINTS:
        raise InsufficientTrace(f"need {MIN_TRACE_POINTS} recorded points, have {len(finite)}")

    expected = -2.0 * weight_decay
    expected_root = expected / depth
    if trace.feature_gap[finite[0]] <= DEGENERATE_GAP:
        return DecayVerdict(None, None, expected, expected_root, True, degenerate=True)

    ts = [trace.t[i] for i in finite]
    gap_rate = fit_decay_rate(ts, [trace.feature_gap[i] for i in finite])
    root_rate = fit_decay_rate(ts, [trace.root_gap[i] for i in finite])
    satisfied = gap_rate <= RATE_SLACK * expected and root_rate <= RATE_SLACK * expected_root
    return DecayVerdict(gap_rate, root_rate, expected, expected_root, satisfied)


def _wihler_value(d: int, gap: float, depth: int) -> float:
    return float(d ** ((depth - 1) / (2.0 * depth)) * gap ** (1.0 / depth))


def wihler_gap_bound(x, y, depth: int) -> float:
    """d^((L−1)/(2L))·‖X − Y‖_F^(1/L), a bound on ‖X^{1/L} − Y^{1/L}‖_F for PSD X, Y."""
    x = as_matrix(x)
    y = as_matrix(y)
    if x.shape != y.shape:
        raise ShapeMismatch(f"cannot compare shapes {x.shape} and {y.shape}")
    if not (is_psd(x) and is_psd(y)):
        raise NotPsd("both matrices must be symmetric positive semi-definite")
    return _wihler_value(x.shape[0], float(np.linalg.norm(x - y, "fro")), depth)


def root_gap(x, y, depth: int) -> float:
    """‖X^{1/L} − Y^{1/L}‖_F."""
    return float(np.linalg.norm(matrix_power(x, 1.0 / depth) - matrix_power(y, 1.0 / depth), "fro"))


def cf_bound(net: Network, data: Dataset, weight_decay: float) -> float:
    """Norm bound C_F on every decayed parameter along the penalized flow.

    C_F² = (2/λ)(L(θ₀) + (λ/2)Σ‖W_{l,0}‖²_F), using 0 as the MSE lower bound.
    """
    if not weight_decay > 0:
        raise InsufficientDecay("the norm bound needs weight decay > 0")
    penalty = sum(float(np.sum(p * p)) for name, p in net.named_parameters().items() if is_decayed(name))
    return math.sqrt((2.0 / weight_decay) * (mse_loss(net, data) + 0.5 * weight_decay * penalty))


def telescope_terms(stack: LinearStack) -> List[np.ndarray]:
    """D_l = P_l (W_lᵀW_l)^{L−l+1} P_lᵀ with P_l = W₁ᵀ···W_{l−1}ᵀ, l = 1..L.

    D₁ = (W₁ᵀW₁)^L and D_L = A, so consecutive differences telescope.
    """
    weights = stack.weights
    depth = stack.depth
    terms = []
    prefix = np.eye(stack.input_dim)
    for l, w in enumerate(weights, start=1):
        terms.append(prefix @ np.linalg.matrix_power(w.T @ w, depth - l + 1) @ prefix.T)
        prefix = prefix @ w.T
    return terms


def telescope_defects(stack: LinearStack) -> List[float]:
    terms = telescope_terms(stack)
    return [float(np.linalg.norm(upper - lower, "fro")) for lower, upper in zip(terms, terms[1:])]


def telescope_bound(layer: int, depth: int, t: float, weight_decay: float,
                    c_max: float, cf: float) -> float:
    """2^{L−l}·e^{−2λt}·c_max·max(C_F, 1)^{2(L−l)} for the l-th telescoping gap."""
    power = depth - layer
    return 2.0 ** power * math.exp(-2.0 * weight_decay * t) * c_max * max(cf, 1.0) ** (2 * power)


def initial_c_max(stack: LinearStack) -> float:
    return balance_report(stack).c_max
