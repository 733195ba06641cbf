"""Dense symmetric linear algebra used by the relaxations and branching rules:
minimum eigenpairs, Cholesky factors, symmetric-definite pencils, orthonormal
nullspace bases, and Gershgorin-style lower bounds.

Instances here are desk scale (n up to a few hundred), so everything is dense.
Eigendecompositions delegate to LAPACK via numpy; the Cholesky factorization
is written out so that failure reports the exact offending pivot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

EIG_TOL = 1e-10        # residual guarantee for eigenpairs
PIVOT_TOL = 1e-12      # positive-definiteness threshold for Cholesky pivots
RANK_TOL = 1e-10       # relative rank threshold for nullspace bases


class NotPositiveDefinite(ArithmeticError):
    """Cholesky pivot at or below PIVOT_TOL.  `order` is the 1-based order of
    the offending leading minor (LAPACK convention)."""

    def __init__(self, order: int, pivot: float):
        super().__init__(f"leading minor of order {order} is not positive definite (pivot {pivot:.3e})")
        self.order = order
        self.pivot = pivot


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray   # unit 2-norm, first nonzero component positive


def check_symmetric(M, tol: float = 1e-8, what: str = "matrix") -> np.ndarray:
    """Validate a square symmetric array and return it as float64, exactly
    symmetrized to protect downstream factorizations from roundoff drift."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{what} contains non-finite entries")
    if M.shape[0] > 1:
        dev = float(np.max(np.abs(M - M.T)))
        scale = 1.0 + float(np.max(np.abs(M)))
        if dev > tol * scale:
            raise ValueError(f"{what} is not symmetric (max deviation {dev:.3e})")
    return 0.5 * (M + M.T)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Deterministic eigenvector orientation: first component of magnitude
    above 1e-12 is made positive."""
    for x in v:
        if abs(x) > 1e-12:
            return -v if x < 0 else v
    return v


def sym_eig_min(M) -> EigenPair:
    """Smallest eigenvalue of a symmetric matrix with a unit eigenvector."""
    M = check_symmetric(M, what="M")
    w, V = np.linalg.eigh(M)
    v = _fix_sign(V[:, 0].copy())
    return EigenPair(float(w[0]), v / np.linalg.norm(v))


def sym_eig_all(M) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition, eigenvalues ascending, columns sign-fixed."""
    M = check_symmetric(M, what="M")
    w, V = np.linalg.eigh(M)
    V = np.column_stack([_fix_sign(V[:, k].copy()) for k in range(V.shape[1])])
    return w, V


def cholesky(N) -> np.ndarray:
    """Lower-triangular L with N = L L'.  Raises NotPositiveDefinite as soon
    as a pivot falls to PIVOT_TOL or below."""
    N = check_symmetric(N, what="N")
    t = N.shape[0]
    L = np.zeros_like(N)
    for j in range(t):
        pivot = N[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= PIVOT_TOL:
            raise NotPositiveDefinite(j + 1, float(pivot))
        L[j, j] = math.sqrt(pivot)
        if j + 1 < t:
            L[j + 1 :, j] = (N[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def gen_eig_min(M, N) -> EigenPair:
    """Smallest eigenvalue lambda of the pencil M v = lambda N v with N
    positive definite, via the Cholesky reduction N = L L', a standard
    eigensolve of inv(L) M inv(L'), and the back-transform v = inv(L') w.
    The eigenvector is renormalized to unit 2-norm."""
    M = check_symmetric(M, what="M")
    L = cholesky(N)
    Y = scipy.linalg.solve_triangular(L, M, lower=True)
    S = scipy.linalg.solve_triangular(L, Y.T, lower=True)
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    v = scipy.linalg.solve_triangular(L.T, V[:, 0], lower=False)
    v = _fix_sign(v / np.linalg.norm(v))
    return EigenPair(float(w[0]), v)


def nullspace_basis(A, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis Z (columns) of the nullspace of A, from a
    column-pivoted orthogonal factorization of A'.  Rank is counted by
    diagonal magnitudes of the triangular factor relative to the largest;
    returns an (n, n - rank) array, possibly with zero columns."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be a matrix, got shape {A.shape}")
    n = A.shape[1]
    if A.shape[0] == 0 or not np.any(A):
        return np.eye(n)
    Qf, R, _ = scipy.linalg.qr(A.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > rank_tol * diag[0]))
    Z = Qf[:, rank:]
    Z = np.column_stack([_fix_sign(Z[:, k].copy()) for k in range(Z.shape[1])]) if Z.shape[1] else Z.reshape(n, 0)
    return Z


def gct_lower_bound(T) -> float:
    """Gershgorin circle lower bound on the smallest eigenvalue:
    min_k (T_kk - sum_{l != k} |T_kl|)."""
    T = check_symmetric(T, what="T")
    radii = np.sum(np.abs(T), axis=1) - np.abs(np.diag(T))
    return float(np.min(np.diag(T) - radii))


def submatrix_delete(T, k: int) -> np.ndarray:
    """Principal submatrix of T with (0-based) row and column k removed."""
    T = np.asarray(T, dtype=float)
    t = T.shape[0]
    if not (0 <= k < t):
        raise ValueError(f"index {k} out of range for order {t}")
    keep = [i for i in range(t) if i != k]
    return T[np.ix_(keep, keep)]
