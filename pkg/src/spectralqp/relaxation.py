"""Convex relaxations of restricted MIQP nodes.

Three families are provided, all bounding min x'Qx + q'x over a node's
feasible set from below:

* spectral: shift Q by alpha*I (or alpha*(I + A'A) in the generalized form)
  until convex, compensating on the box via the concave envelope of x^2,
  i.e. adding alpha * (x'x - (l+u)'x + l'u) <= 0 on [l, u];
* a lifted McCormick linear program over products X_ij = x_i x_j;
* a separable eigen-decomposed program with secant underestimators along
  negative eigendirections.

Shift variants: alpha_e from the plain spectrum of Q, alpha_g from the pencil
(Q, I + A'A), alpha_z from the nullspace-restricted spectrum Z'QZ, and an
approximation alpha(delta) from the pencil (Q, I + delta A'A) whose delta is
chosen once at the root by a geometric search.  The shifts always satisfy
alpha_z <= alpha_g <= alpha_e, so the matching bounds tighten in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .problem import ProblemInstance

PSD_SLACK = 1e-8
CONVEX_TOL = 1e-10
ZERO_EIG_TOL = 1e-12

KIND_EIG = "eig"
KIND_GEIG = "geig"
KIND_EIGZ_EXACT = "eigz_exact"
KIND_EIGZ = "eigz"
KIND_NONE = "none"          # node already convex, no shift applied


class NodeInfeasible(Exception):
    """The node's feasible set is provably empty."""


@dataclass(frozen=True, eq=False)
class NodeRestriction:
    """A branch-and-bound node: unfixed variable list B (ascending, defining
    the local ordering), fixed assignments, and local bounds over B."""

    free: tuple            # ascending original indices
    fixed: dict            # original index -> fixed value
    lb: np.ndarray         # local lower bounds over free
    ub: np.ndarray         # local upper bounds over free


def root_restriction(problem: ProblemInstance) -> NodeRestriction:
    return NodeRestriction(
        free=tuple(range(problem.n)),
        fixed={},
        lb=problem.lb.copy(),
        ub=problem.ub.copy(),
    )


@dataclass(frozen=True, eq=False)
class Restricted:
    """Data of the subproblem over the free variables B after substituting
    the fixed assignments:

        min  x_B' Qb x_B + qb' x_B + const
        s.t. Ab x_B = bb,  Cb x_B <= db,  lb <= x_B <= ub.
    """

    Qb: np.ndarray
    qb: np.ndarray
    Ab: np.ndarray
    bb: np.ndarray
    Cb: np.ndarray
    db: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    const: float


def restrict(problem: ProblemInstance, node: NodeRestriction) -> Restricted:
    """Substitute the node's fixed values and project onto the free block."""
    B = np.array(node.free, dtype=int)
    F = np.array(sorted(node.fixed), dtype=int)
    xf = np.array([node.fixed[i] for i in F], dtype=float)
    Q, q = problem.Q, problem.q
    if F.size:
        Qb = Q[np.ix_(B, B)]
        qb = q[B] + 2.0 * (Q[np.ix_(B, F)] @ xf)
        const = float(xf @ Q[np.ix_(F, F)] @ xf + q[F] @ xf)
        bb = problem.b - problem.A[:, F] @ xf if problem.m else problem.b
        db = problem.d - problem.C[:, F] @ xf if problem.p else problem.d
    else:
        Qb, qb, const = Q, q, 0.0
        bb, db = problem.b, problem.d
    return Restricted(
        Qb=np.array(Qb, dtype=float),
        qb=np.array(qb, dtype=float),
        Ab=np.array(problem.A[:, B], dtype=float),
        bb=np.array(bb, dtype=float),
        Cb=np.array(problem.C[:, B], dtype=float),
        db=np.array(db, dtype=float),
        lb=np.array(node.lb, dtype=float),
        ub=np.array(node.ub, dtype=float),
        const=const,
    )


@dataclass(frozen=True, eq=False)
class SpectralShift:
    """A diagonal (or pencil) shift making the node convex.  `lam` is the raw
    minimum (pencil) eigenvalue before clamping, `alpha = max(0, -lam)`, and
    `eigvec` the associated direction in the free-variable space."""

    kind: str
    alpha: float
    lam: float
    eigvec: np.ndarray
    delta: float = 1.0


def compute_shift_eig(Qb) -> SpectralShift:
    """alpha_e = max(0, -lambda_min(Q))."""
    pair = linalg.sym_eig_min(Qb)
    return SpectralShift(KIND_EIG, max(0.0, -pair.value), pair.value, pair.vector)


def compute_shift_geig(Qb, Ab) -> SpectralShift:
    """alpha_g = max(0, -lambda_min(Q, I + A'A)), the tightest uniform shift
    that stays convex after adding the squared equality residual."""
    Qb = np.asarray(Qb, dtype=float)
    Ab = np.asarray(Ab, dtype=float)
    N = np.eye(Qb.shape[0]) + (Ab.T @ Ab if Ab.size else 0.0)
    pair = linalg.gen_eig_min(Qb, N)
    return SpectralShift(KIND_GEIG, max(0.0, -pair.value), pair.value, pair.vector)


def compute_shift_eigz_exact(Qb, Ab) -> SpectralShift:
    """alpha_z = max(0, -lambda_min(Z'QZ)) with Z an orthonormal nullspace
    basis of A; the smallest shift that is convex on the equality manifold."""
    Qb = np.asarray(Qb, dtype=float)
    n = Qb.shape[0]
    Z = linalg.nullspace_basis(np.asarray(Ab, dtype=float).reshape(-1, n))
    if Z.shape[1] == 0:
        return SpectralShift(KIND_EIGZ_EXACT, 0.0, 0.0, np.zeros(n))
    pair = linalg.sym_eig_min(Z.T @ Qb @ Z)
    vec = Z @ pair.vector
    nrm = np.linalg.norm(vec)
    if nrm > 0:
        vec = vec / nrm
    return SpectralShift(KIND_EIGZ_EXACT, max(0.0, -pair.value), pair.value, vec)


def compute_shift_at_delta(Qb, Ab, delta: float) -> SpectralShift:
    """alpha(delta) = max(0, -lambda_min(Q, I + delta A'A)) for a fixed delta."""
    Qb = np.asarray(Qb, dtype=float)
    Ab = np.asarray(Ab, dtype=float)
    N = np.eye(Qb.shape[0]) + (delta * (Ab.T @ Ab) if Ab.size else 0.0)
    pair = linalg.gen_eig_min(Qb, N)
    return SpectralShift(KIND_EIGZ, max(0.0, -pair.value), pair.value, pair.vector, delta)


def compute_shift_eigz_approx(
    Qb,
    Ab,
    sigma: float = 10.0,
    max_iter: int = 5,
    rel_tol: float = 1e-3,
) -> tuple[SpectralShift, list]:
    """Geometric search for delta: starting from delta = 1, multiply by sigma
    until lambda(delta) stalls (relative change <= rel_tol) or max_iter
    eigenvalues have been computed.  lambda(delta) increases toward
    min(0, lambda_min(Z'QZ)), so larger delta only tightens.  Returns the
    final shift and the [(delta, lambda)] trace."""
    delta = 1.0
    shift = compute_shift_at_delta(Qb, Ab, delta)
    trace = [(delta, shift.lam)]
    while len(trace) < max_iter:
        delta *= sigma
        nxt = compute_shift_at_delta(Qb, Ab, delta)
        prev_lam = shift.lam
        shift = nxt
        trace.append((delta, nxt.lam))
        if abs(nxt.lam - prev_lam) / max(abs(prev_lam), 1e-12) <= rel_tol:
            break
    return shift, trace


def envelope_concave_square(l: float, u: float) -> tuple[float, float]:
    """Coefficients (slope, offset) of the concave envelope of x^2 on [l, u]:
    the secant (l + u) x - l u, which dominates x^2 on the interval."""
    if not l < u:
        raise ValueError(f"need l < u, got [{l}, {u}]")
    return (l + u, -l * u)


@dataclass(eq=False)
class McCormickInfo:
    pairs: list           # (i, j) local index pairs, i <= j, in column order
    coeffs: np.ndarray    # objective coefficient per lifted column
    lb: np.ndarray        # node bounds over the free block
    ub: np.ndarray


@dataclass(eq=False)
class SeparableInfo:
    V: np.ndarray         # (nb, k) kept eigendirections
    lam: np.ndarray       # (k,) eigenvalues
    L: np.ndarray         # (k,) direction lower bounds
    U: np.ndarray         # (k,) direction upper bounds


@dataclass(eq=False)
class ConvexQpModel:
    """min z' Q z + q' z + offset s.t. A z = b, C z <= d, lb <= z <= ub.

    Q may be None for a linear program.  `x_dim` is the number of leading
    components of z that represent the node's free variables (lifted models
    append auxiliary columns after them).  `nullspace_convex` marks models
    whose Q is only positive semidefinite on the nullspace of A; these are
    solved in reduced coordinates."""

    kind: str
    Q: np.ndarray | None
    q: np.ndarray
    offset: float
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    x_dim: int
    nullspace_convex: bool = False
    mccormick: McCormickInfo | None = None
    separable: SeparableInfo | None = None

    @property
    def nvar(self) -> int:
        return self.q.shape[0]


def build_spectral_relaxation(
    problem: ProblemInstance,
    node: NodeRestriction,
    shift: SpectralShift,
    restricted: Restricted | None = None,
    nullspace_convex: bool | None = None,
) -> ConvexQpModel:
    """Assemble the convex QP for a spectral shift.  The generalized (geig)
    kind keeps its equality-residual quadratic alpha*(x'A'Ax - 2 b'Ax + b'b);
    every other kind uses the plain diagonal form, where delta influences the
    model only through alpha."""
    R = restricted if restricted is not None else restrict(problem, node)
    nb = R.Qb.shape[0]
    a = shift.alpha
    l, u = R.lb, R.ub
    if shift.kind == KIND_GEIG and R.Ab.size:
        Qhat = R.Qb + a * (np.eye(nb) + R.Ab.T @ R.Ab)
        qhat = R.qb - a * (l + u) - 2.0 * a * (R.Ab.T @ R.bb)
        offset = a * (float(l @ u) + float(R.bb @ R.bb)) + R.const
        ns_convex = False
    else:
        Qhat = R.Qb + a * np.eye(nb)
        qhat = R.qb - a * (l + u)
        offset = a * float(l @ u) + R.const
        if nullspace_convex is not None:
            ns_convex = nullspace_convex
        elif shift.kind in (KIND_EIGZ, KIND_EIGZ_EXACT) and R.Ab.size:
            ns_convex = linalg.sym_eig_min(Qhat).value < -PSD_SLACK
        else:
            ns_convex = False
    return ConvexQpModel(
        kind=shift.kind,
        Q=Qhat,
        q=qhat,
        offset=offset,
        A=R.Ab,
        b=R.bb,
        C=R.Cb,
        d=R.db,
        lb=l.copy(),
        ub=u.copy(),
        x_dim=nb,
        nullspace_convex=ns_convex,
    )


def build_mccormick_relaxation(
    problem: ProblemInstance,
    node: NodeRestriction,
    restricted: Restricted | None = None,
) -> ConvexQpModel:
    """Lifted McCormick LP: one column X_ij per diagonal entry and per
    off-diagonal pair with Q_ij != 0, with the four envelope rows

        X_ij >= l_i x_j + l_j x_i - l_i l_j
        X_ij >= u_i x_j + u_j x_i - u_i u_j
        X_ij <= l_i x_j + u_j x_i - l_i u_j
        X_ij <= u_i x_j + l_j x_i - u_i l_j

    written in <= orientation; objective sum c_ij X_ij + q' x + const with
    c_ii = Q_ii and c_ij = 2 Q_ij for i < j."""
    R = restricted if restricted is not None else restrict(problem, node)
    nb = R.Qb.shape[0]
    l, u = R.lb, R.ub
    pairs = [(i, i) for i in range(nb)]
    pairs += [(i, j) for i in range(nb) for j in range(i + 1, nb) if R.Qb[i, j] != 0.0]
    ncol = len(pairs)
    nvar = nb + ncol
    coeffs = np.array(
        [R.Qb[i, i] if i == j else 2.0 * R.Qb[i, j] for (i, j) in pairs]
    )
    q = np.concatenate([R.qb, coeffs])

    rows, rhs = [], []
    xlb = np.concatenate([l, np.zeros(ncol)])
    xub = np.concatenate([u, np.zeros(ncol)])
    for t, (i, j) in enumerate(pairs):
        li, ui, lj, uj = l[i], u[i], l[j], u[j]
        col = nb + t
        for (ci, cj, sgn, r) in (
            (lj, li, -1.0, li * lj),     # X >= li xj + lj xi - li lj
            (uj, ui, -1.0, ui * uj),     # X >= ui xj + uj xi - ui uj
            (-uj, -li, 1.0, -li * uj),   # X <= li xj + uj xi - li uj
            (-lj, -ui, 1.0, -ui * lj),   # X <= ui xj + lj xi - ui lj
        ):
            row = np.zeros(nvar)
            row[i] += ci
            row[j] += cj
            row[col] = sgn
            rows.append(row)
            rhs.append(r)
        corners = np.array([li * lj, li * uj, ui * lj, ui * uj])
        xlb[col] = float(np.min(corners))
        xub[col] = float(np.max(corners))
    mcc_rows = np.array(rows) if rows else np.zeros((0, nvar))
    mcc_rhs = np.array(rhs)

    A = np.hstack([R.Ab, np.zeros((R.Ab.shape[0], ncol))]) if R.Ab.size else np.zeros((0, nvar))
    C_node = np.hstack([R.Cb, np.zeros((R.Cb.shape[0], ncol))]) if R.Cb.size else np.zeros((0, nvar))
    C = np.vstack([C_node, mcc_rows])
    d = np.concatenate([R.db, mcc_rhs])
    return ConvexQpModel(
        kind="mccormick",
        Q=None,
        q=q,
        offset=R.const,
        A=A,
        b=R.bb,
        C=C,
        d=d,
        lb=xlb,
        ub=xub,
        x_dim=nb,
        mccormick=McCormickInfo(pairs=pairs, coeffs=coeffs, lb=l.copy(), ub=u.copy()),
    )


def build_separable_relaxation(
    problem: ProblemInstance,
    node: NodeRestriction,
    lp_solve,
    restricted: Restricted | None = None,
) -> ConvexQpModel:
    """Eigen-decomposed relaxation: with Q = V diag(lambda) V', substitute
    y = V'x and keep lambda_i y_i^2 for positive eigenvalues while replacing
    each negative one by its secant lambda_i ((L_i + U_i) y_i - L_i U_i) over
    direction bounds [L_i, U_i].  The bounds come from minimizing and
    maximizing v_i'x over the node's feasible set with `lp_solve` (two LP
    solves per kept direction); zero eigendirections are dropped.  Raises
    NodeInfeasible when a direction LP certifies emptiness."""
    R = restricted if restricted is not None else restrict(problem, node)
    nb = R.Qb.shape[0]
    w, V = linalg.sym_eig_all(R.Qb)
    keep = np.where(np.abs(w) > ZERO_EIG_TOL)[0]
    k = keep.size
    lam = w[keep]
    Vk = V[:, keep]

    L = np.empty(k)
    U = np.empty(k)
    for t in range(k):
        v = Vk[:, t]
        lo_iv = float(np.minimum(v * R.lb, v * R.ub).sum())
        hi_iv = float(np.maximum(v * R.lb, v * R.ub).sum())
        lo, hi = lo_iv, hi_iv
        for sign_, slot in ((1.0, "lo"), (-1.0, "hi")):
            lp = ConvexQpModel(
                kind="direction_lp",
                Q=None,
                q=sign_ * v,
                offset=0.0,
                A=R.Ab,
                b=R.bb,
                C=R.Cb,
                d=R.db,
                lb=R.lb.copy(),
                ub=R.ub.copy(),
                x_dim=nb,
            )
            sol = lp_solve(lp)
            if sol.status == "infeasible":
                raise NodeInfeasible("direction bound LP certified an empty node")
            if sol.status == "optimal":
                val = float(v @ sol.x)
                if slot == "lo":
                    lo = max(lo_iv, min(val, hi_iv))
                else:
                    hi = min(hi_iv, max(val, lo_iv))
            # a non-optimal status keeps the safe interval-arithmetic bound
        margin = 1e-7 * (1.0 + abs(lo) + abs(hi))
        L[t] = lo - margin
        U[t] = hi + margin

    nvar = nb + k
    Qhat = np.zeros((nvar, nvar))
    qhat = np.concatenate([R.qb, np.zeros(k)])
    offset = R.const
    for t in range(k):
        if lam[t] > 0:
            Qhat[nb + t, nb + t] = lam[t]
        else:
            qhat[nb + t] = lam[t] * (L[t] + U[t])
            offset += -lam[t] * L[t] * U[t]

    coupling = np.hstack([Vk.T, -np.eye(k)])
    if R.Ab.size:
        A = np.vstack([np.hstack([R.Ab, np.zeros((R.Ab.shape[0], k))]), coupling])
        b = np.concatenate([R.bb, np.zeros(k)])
    else:
        A = coupling
        b = np.zeros(k)
    C = np.hstack([R.Cb, np.zeros((R.Cb.shape[0], k))]) if R.Cb.size else np.zeros((0, nvar))
    return ConvexQpModel(
        kind="separable",
        Q=Qhat,
        q=qhat,
        offset=offset,
        A=A,
        b=b,
        C=C,
        d=R.db,
        lb=np.concatenate([R.lb, L]),
        ub=np.concatenate([R.ub, U]),
        x_dim=nb,
        separable=SeparableInfo(V=Vk, lam=lam, L=L, U=U),
    )


def relaxed_objective_at(model: ConvexQpModel, x) -> float:
    """Value of the relaxation at a point x of the node's free space: the
    model objective for spectral kinds, the tightest envelope-consistent
    lifting for McCormick, and the secant objective for the separable kind.
    For feasible x this never exceeds the true restricted objective."""
    x = np.asarray(x, dtype=float)
    if model.mccormick is not None:
        info = model.mccormick
        l, u = info.lb, info.ub
        total = float(model.q[: model.x_dim] @ x) + model.offset
        for c, (i, j) in zip(info.coeffs, info.pairs):
            if c == 0.0:
                continue
            li, ui, lj, uj = l[i], u[i], l[j], u[j]
            lo = max(li * x[j] + lj * x[i] - li * lj, ui * x[j] + uj * x[i] - ui * uj)
            hi = min(li * x[j] + uj * x[i] - li * uj, ui * x[j] + lj * x[i] - ui * lj)
            total += c * lo if c > 0 else c * hi
        return total
    if model.separable is not None:
        info = model.separable
        y = info.V.T @ x
        # model.offset = restriction constant + secant constants; subtract the
        # secant part here because the loop below adds the full secant terms
        secant_const = float(np.sum(np.where(info.lam < 0, -info.lam * info.L * info.U, 0.0)))
        total = float(model.q[: model.x_dim] @ x) + model.offset - secant_const
        for t in range(info.lam.size):
            if info.lam[t] > 0:
                total += info.lam[t] * y[t] ** 2
            else:
                total += info.lam[t] * ((info.L[t] + info.U[t]) * y[t] - info.L[t] * info.U[t])
        return total
    if model.Q is None:
        return float(model.q[: model.x_dim] @ x) + model.offset
    return float(x @ model.Q[: model.x_dim, : model.x_dim] @ x + model.q[: model.x_dim] @ x) + model.offset
