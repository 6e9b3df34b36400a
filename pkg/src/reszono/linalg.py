"""Dense small-matrix numerics: SVD, pseudo-inverse, kernels, stability and observability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import RANK_ATOL, RANK_RTOL, SCHUR_MARGIN
from .errors import InvalidInputError


def as_matrix(m, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array. 1-D input is read as a single row."""
    arr = np.array(m, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def rank_tolerance(singular_values, shape) -> float:
    smax = float(singular_values[0]) if len(singular_values) else 0.0
    return max(smax * max(shape) * RANK_RTOL, RANK_ATOL)


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Full SVD ``m = U diag(s) V^T`` with the numeric rank.

    ``left_basis`` is rows x rows and ``right_basis`` is cols x cols, so the
    trailing columns of ``right_basis`` span the kernel.
    """

    left_basis: np.ndarray
    singular_values: np.ndarray
    right_basis: np.ndarray
    numeric_rank: int

    def reconstruct(self) -> np.ndarray:
        u, s, v = self.left_basis, self.singular_values, self.right_basis
        sigma = np.zeros((u.shape[0], v.shape[0]))
        sigma[: len(s), : len(s)] = np.diag(s)
        return u @ sigma @ v.T


def svd(m) -> SvdResult:
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > rank_tolerance(s, a.shape)))
    return SvdResult(u, s, vt.T, rank)


def pseudo_inverse(m) -> np.ndarray:
    """Moore-Penrose inverse ``V_1 Sigma_r^{-1} P_1^T`` built from the rank-r part of the SVD."""
    a = as_matrix(m)
    dec = svd(a)
    r = dec.numeric_rank
    v1 = dec.right_basis[:, :r]
    p1 = dec.left_basis[:, :r]
    return (v1 / dec.singular_values[:r]) @ p1.T


def null_space_basis(m) -> np.ndarray:
    """Orthonormal basis of ker(m) as columns; shape (cols, cols - rank)."""
    a = as_matrix(m)
    dec = svd(a)
    return dec.right_basis[:, dec.numeric_rank :].copy()


def spectral_radius_upper(m, iterations: int = 60) -> float:
    """Upper estimate of the spectral radius from Gelfand's formula.

    The matrix is squared repeatedly with renormalisation, so after ``j``
    squarings ``||A^(2^j)||_inf^(1/2^j)`` is available without overflow. Each
    such value bounds rho(A) from above; the smallest one is returned.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"spectral radius needs a square matrix, got {a.shape}")
    norm = np.linalg.norm(a, np.inf)
    if norm == 0.0:
        return 0.0
    best = norm
    log_scale = np.log(norm)
    power = 1.0
    b = a / norm
    for _ in range(iterations):
        b = b @ b
        power *= 2.0
        s = np.linalg.norm(b, np.inf)
        if s == 0.0:
            return 0.0
        log_scale = 2.0 * log_scale + np.log(s)
        b = b / s
        best = min(best, float(np.exp(log_scale / power)))
    return best


def is_schur(rho: float) -> bool:
    return rho < 1.0 - SCHUR_MARGIN


def observability_matrix(a, c) -> np.ndarray:
    a = as_matrix(a, "A")
    c = as_matrix(c, "C")
    n = a.shape[0]
    if a.shape != (n, n):
        raise InvalidInputError(f"A must be square, got {a.shape}")
    if c.shape[1] != n:
        raise InvalidInputError(f"C must have {n} columns, got {c.shape[1]}")
    blocks = [c]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ a)
    return np.vstack(blocks)


def observability_rank(a, c) -> int:
    return svd(observability_matrix(a, c)).numeric_rank
