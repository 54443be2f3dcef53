#!/usr/bin/env python3
"""
Dense Linear Algebra
Small dense real linear algebra used by every NFA computation: norms, cosine
similarity, a cyclic Jacobi symmetric eigensolver, SVD, Haar-orthogonal
sampling and matrix fractional powers.

Matrices are plain float64 numpy arrays; `as_matrix` enforces the invariants.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import (
    IndefiniteInput,
    NoConvergence,
    NonFiniteEntries,
    NotSymmetric,
    ShapeError,
    ShapeMismatch,
    ZeroMatrix,
)

SYMMETRY_TOL = 1e-9
CLAMP_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """The single generator type all randomness flows through."""
    return np.random.default_rng(seed)


def as_matrix(m) -> np.ndarray:
    """Validate and convert to a 2-D float64 array with finite entries."""
    arr = np.array(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntries("matrix contains NaN or Inf entries")
    return arr


def as_vector(v) -> np.ndarray:
    arr = np.array(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntries("vector contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues in descending order, eigenvectors as orthonormal columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


@dataclass(frozen=True)
class Svd:
    """Reduced SVD: a = u @ diag(singular_values) @ v.T."""
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(as_matrix(m), "fro"))


def cosine_similarity(m, n) -> float:
    """Tr(MᵀN) / (‖M‖_F ‖N‖_F)."""
    m = as_matrix(m)
    n = as_matrix(n)
    if m.shape != n.shape:
        raise ShapeMismatch(f"cannot compare shapes {m.shape} and {n.shape}")
    norm_m = np.linalg.norm(m, "fro")
    norm_n = np.linalg.norm(n, "fro")
    if norm_m == 0.0 or norm_n == 0.0:
        raise ZeroMatrix("cosine similarity is undefined for a zero matrix")
    cos = float(np.vdot(m, n) / (norm_m * norm_n))
    return min(1.0, max(-1.0, cos))


def check_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    scale = 1.0 + np.linalg.norm(a, "fro")
    if np.linalg.norm(a - a.T, "fro") > tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a)), "fro"))


def _jacobi_sweep(work: np.ndarray, q: np.ndarray, skip_below: float) -> None:
    n = work.shape[0]
    for p in range(n - 1):
        for r in range(p + 1, n):
            apr = work[p, r]
            if abs(apr) <= skip_below:
                continue
            theta = (work[r, r] - work[p, p]) / (2.0 * apr)
            t = math.copysign(1.0 / (abs(theta) + math.hypot(theta, 1.0)), theta)
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c

            col_p = work[:, p].copy()
            col_r = work[:, r].copy()
            work[:, p] = c * col_p - s * col_r
            work[:, r] = s * col_p + c * col_r
            row_p = work[p, :].copy()
            row_r = work[r, :].copy()
            work[p, :] = c * row_p - s * row_r
            work[r, :] = s * row_p + c * row_r
            work[p, r] = 0.0
            work[r, p] = 0.0

            vec_p = q[:, p].copy()
            vec_r = q[:, r].copy()
            q[:, p] = c * vec_p - s * vec_r
            q[:, r] = s * vec_p + c * vec_r


def sym_eig(a, max_sweeps: int = JACOBI_MAX_SWEEPS, tol: float = JACOBI_TOL) -> SymEig:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps until the off-diagonal Frobenius mass drops to tol·‖A‖_F.
    Each eigenvector's largest-magnitude entry is made positive so the
    output is deterministic.
    """
    a = as_matrix(a)
    check_symmetric(a)
    n = a.shape[0]
    work = 0.5 * (a + a.T)
    q = np.eye(n)
    scale = np.linalg.norm(work, "fro")
    if scale == 0.0 or n == 1:
        return SymEig(np.diag(work).copy(), q)

    threshold = tol * scale
    # rotations below this cannot change the result at double precision
    skip_below = np.finfo(np.float64).eps * threshold
    for sweep in range(max_sweeps + 1):
        if _off_diagonal_norm(work) <= threshold:
            break
        if sweep == max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        _jacobi_sweep(work, q, skip_below)

    eigenvalues = np.diag(work).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    q = q[:, order]
    pivots = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    return SymEig(eigenvalues, q * signs)


def matrix_power(a, alpha: float) -> np.ndarray:
    """Q·diag(max(λ,0)^α)·Qᵀ for a symmetric PSD matrix.

    Eigenvalues down to -1e-10·λ_max are treated as roundoff and clamped;
    anything more negative is an error.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return eig_power(sym_eig(a), alpha)


def eig_power(eig: SymEig, alpha: float) -> np.ndarray:
    """matrix_power from an already computed eigendecomposition."""
    lam = eig.eigenvalues
    lam_max = float(lam[0]) if lam.size else 0.0
    if lam.size and lam[-1] < -CLAMP_TOL * max(lam_max, 0.0):
        raise IndefiniteInput(
            f"eigenvalue {lam[-1]:.3e} is below the clamping threshold (λ_max={lam_max:.3e})")
    powered = np.power(np.clip(lam, 0.0, None), alpha)
    q = eig.eigenvectors
    out = (q * powered) @ q.T
    return 0.5 * (out + out.T)


def svd(a) -> Svd:
    """Reduced SVD through the Jacobi eigensolver on the smaller Gram matrix."""
    a = as_matrix(a)
    rows, cols = a.shape
    if cols > rows:
        t = svd(a.T)
        return Svd(t.v, t.singular_values, t.u)

    eig = sym_eig(a.T @ a)
    v = eig.eigenvectors
    images = a @ v
    sigma = np.linalg.norm(images, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    v = v[:, order]
    images = images[:, order]

    sigma_max = sigma[0] if sigma.size else 0.0
    keep = sigma > np.sqrt(np.finfo(np.float64).eps) * 1e-1 * sigma_max
    k = int(np.count_nonzero(keep))

    u = np.zeros((rows, cols))
    if k:
        u_part, r = np.linalg.qr(images[:, :k] / sigma[:k])
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        u[:, :k] = u_part * signs
    if k < cols:
        completion, _ = np.linalg.qr(np.hstack([u[:, :k], np.eye(rows)]))
        u[:, k:] = completion[:, k:cols]
    return Svd(u, sigma, v)


def haar_columns(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Leading `cols` columns of a Haar-distributed rows×rows orthogonal matrix.

    QR of a standard Gaussian matrix with each Q column multiplied by the
    sign of the matching R diagonal entry.
    """
    if rows < cols:
        raise ShapeError(f"need rows >= cols for orthonormal columns, got {rows}x{cols}")
    gaussian = rng.standard_normal((rows, rows))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs)[:, :cols]


def is_psd(a, tol: float = CLAMP_TOL) -> bool:
    a = as_matrix(a)
    try:
        check_symmetric(a)
    except (NotSymmetric, ShapeError):
        return False
    lam = sym_eig(a).eigenvalues
    return bool(lam[-1] >= -tol * max(float(lam[0]), 0.0))
