"""Brute-force reference solvers.  These are deliberately independent of the
branch-and-bound machinery: the binary oracle enumerates every assignment and
the box oracle enumerates every active-set pattern of the first-order
conditions.  Both are meant for small instances in tests and for gap
reporting, not for production solves.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .problem import ProblemInstance, evaluate_objective

FEAS_TOL = 1e-9
MAX_BINARY_N = 20
MAX_BOX_N = 8
_BLOCK = 1 << 14


@dataclass(frozen=True)
class OracleResult:
    value: float                    # +inf when no candidate is feasible
    points: list = field(default_factory=list)   # optimal points, ties within FEAS_TOL
    candidates: int = 0             # feasible candidates examined


def enumerate_binary(problem: ProblemInstance) -> OracleResult:
    """Exact optimum of a pure binary instance by enumerating all 2^n
    assignments, filtering Ax = b and Cx <= d at FEAS_TOL."""
    if not problem.is_pure_binary():
        raise ValueError("enumerate_binary requires a pure binary instance")
    n = problem.n
    if n > MAX_BINARY_N:
        raise ValueError(f"n = {n} exceeds the enumeration guard {MAX_BINARY_N}")
    best = math.inf
    best_points: list[np.ndarray] = []
    feasible = 0
    bits = np.arange(n)
    for start in range(0, 1 << n, _BLOCK):
        codes = np.arange(start, min(start + _BLOCK, 1 << n), dtype=np.int64)
        X = ((codes[:, None] >> bits) & 1).astype(float)
        mask = np.ones(len(codes), dtype=bool)
        if problem.m:
            mask &= np.max(np.abs(X @ problem.A.T - problem.b), axis=1) <= FEAS_TOL
        if problem.p:
            mask &= np.max(X @ problem.C.T - problem.d, axis=1) <= FEAS_TOL
        if not np.any(mask):
            continue
        X = X[mask]
        feasible += X.shape[0]
        vals = np.einsum("ij,jk,ik->i", X, problem.Q, X) + X @ problem.q
        lo = float(np.min(vals))
        if lo < best - FEAS_TOL:
            best = lo
            best_points = []
        if lo <= best + FEAS_TOL:
            for row in X[vals <= best + FEAS_TOL]:
                best_points.append(row.copy())
    return OracleResult(best, best_points, feasible)


def enumerate_box_kkt(problem: ProblemInstance) -> OracleResult:
    """Exact optimum of a continuous box-constrained QP by enumerating all 3^n
    activity patterns (each variable at its lower bound, upper bound, or free)
    and solving the stationarity system on the free block.  Singular free
    blocks are handled by least squares; inconsistent patterns are skipped.
    Any global minimizer of a quadratic over a box satisfies one pattern, so
    the minimum over all in-box candidates is the optimum."""
    if problem.m or problem.p or problem.integers:
        raise ValueError("enumerate_box_kkt requires a box-only continuous instance")
    n = problem.n
    if n > MAX_BOX_N:
        raise ValueError(f"n = {n} exceeds the enumeration guard {MAX_BOX_N}")
    Q, q, lb, ub = problem.Q, problem.q, problem.lb, problem.ub
    best = math.inf
    best_points: list[np.ndarray] = []
    candidates = 0
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pat = np.array(pattern)
        x = np.where(pat == 0, lb, np.where(pat == 1, ub, 0.0))
        free = np.where(pat == 2)[0]
        if free.size:
            fixed = np.where(pat != 2)[0]
            rhs = -(q[free] + 2.0 * Q[np.ix_(free, fixed)] @ x[fixed])
            Qff = 2.0 * Q[np.ix_(free, free)]
            sol, _, rank, _ = np.linalg.lstsq(Qff, rhs, rcond=None)
            if rank < free.size:
                resid = float(np.max(np.abs(Qff @ sol - rhs)))
                if resid > 1e-8 * (1.0 + float(np.max(np.abs(rhs)))):
                    continue
            x = x.copy()
            x[free] = sol
            if np.any(x[free] < lb[free] - FEAS_TOL) or np.any(x[free] > ub[free] + FEAS_TOL):
                continue
            x[free] = np.clip(x[free], lb[free], ub[free])
        candidates += 1
        val = evaluate_objective(problem, x)
        if val < best - FEAS_TOL:
            best = val
            best_points = [x.copy()]
        elif val <= best + FEAS_TOL:
            best_points.append(x.copy())
    return OracleResult(best, best_points, candidates)


def rayleigh_probe_min(M, N=None, trials: int = 1000, seed: int = 0) -> float:
    """Randomized upper probe of the smallest pencil eigenvalue: the minimum
    Rayleigh quotient x'Mx / x'Nx over `trials` random directions.  Always an
    upper bound on the true minimum; used as an independent cross-check."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((trials, n))
    num = np.einsum("ij,jk,ik->i", X, M, X)
    if N is None:
        den = np.einsum("ij,ij->i", X, X)
    else:
        N = np.asarray(N, dtype=float)
        den = np.einsum("ij,jk,ik->i", X, N, X)
    return float(np.min(num / den))
