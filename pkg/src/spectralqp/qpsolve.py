"""First-order convex QP/LP solver for relaxation subproblems.

The core is an operator-splitting (ADMM) iteration on

    min 1/2 x'Px + c'x   s.t.  lo <= A_s x <= hi

with all model constraints (equalities, inequalities, box) stacked into A_s.
Equality rows carry a boosted penalty, data is equilibrated in one pass, and
the step size adapts to the primal/dual residual ratio.  Near convergence the
iterate is polished by solving the KKT system of the active constraints,
which typically lands the solution at machine precision; termination tests
the unscaled residuals against tol * (1 + data scale).

Models flagged `nullspace_convex` (curvature nonnegative only on the equality
manifold) are solved in reduced coordinates x = x0 + Z z, where x0 is a least
squares particular solution and Z an orthonormal nullspace basis; equality
multipliers are then recovered by least squares on the stationarity residual.

MaxIter results never certify a bound by themselves; callers may use the
Lagrangian `dual_bound`, which is valid whenever finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .relaxation import ConvexQpModel

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAXITER = "max_iter"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50_000
DEFAULT_KKT_TOL = 1e-6

_SIGMA = 1e-6          # proximal regularization
_ALPHA = 1.6           # over-relaxation
_RHO0 = 0.1            # base penalty
_RHO_EQ_BOOST = 1e3    # extra penalty on equality rows
_CHECK_EVERY = 25      # iterations between convergence checks
_EPS_PINF = 1e-7       # infeasibility certificate threshold (relative)


@dataclass(eq=False)
class QpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    nu: np.ndarray          # equality multipliers (free sign)
    mu: np.ndarray          # inequality multipliers, >= 0
    pi_l: np.ndarray        # lower-bound multipliers, >= 0
    pi_u: np.ndarray        # upper-bound multipliers, >= 0
    iterations: int
    primal_residual: float
    dual_residual: float
    dual_bound: float = -math.inf   # valid lower bound on the model optimum when finite


@dataclass(frozen=True)
class KktReport:
    """Scaled KKT residuals of a candidate solution.  Every field is divided
    by (1 + max magnitude over the model data, point and multipliers), so the
    pass threshold is dimensionless."""

    stationarity: float
    primal: float
    complementarity: float
    dual_violation: float
    passed: bool


def _as_float(a):
    return np.asarray(a, dtype=float)


def _interval_presolve(model: ConvexQpModel) -> bool:
    """Cheap emptiness certificate: row ranges of Az over the box.  Returns
    True when the model is provably infeasible."""
    lb, ub = model.lb, model.ub
    if np.any(lb > ub + 1e-12):
        return True
    for rows, lo_req, hi_req in (
        (model.A, model.b, model.b),
        (model.C, np.full(model.d.shape, -math.inf), model.d),
    ):
        if rows.shape[0] == 0:
            continue
        lo_range = np.minimum(rows * lb, rows * ub).sum(axis=1)
        hi_range = np.maximum(rows * lb, rows * ub).sum(axis=1)
        slack = 1e-9 * (1.0 + np.max(np.abs(rows), initial=0.0)) * (
            1.0 + np.max(np.abs(ub), initial=0.0) + np.max(np.abs(lb), initial=0.0)
        )
        if np.any(hi_range < lo_req - slack) or np.any(lo_range > hi_req + slack):
            return True
    return False


@dataclass(eq=False)
class _Raw:
    status: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    rp: float
    rd: float


def _polish(P, c, A, lo, hi, y, tol_scale):
    """Direct KKT solve on the constraints the duals mark active.  Returns
    (x, y, z, rp, rd) or None when the linear solve fails outright."""
    m, n = A.shape
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    low = (y < 0.0) & np.isfinite(lo) & ~eq
    upp = (y > 0.0) & np.isfinite(hi) & ~eq
    act = np.where(eq | low | upp)[0]
    bnd = np.where(eq[act] | low[act], lo[act], hi[act])
    Aa = A[act]
    k = act.size
    K = np.zeros((n + k, n + k))
    K[:n, :n] = P + 1e-9 * np.eye(n)
    K[:n, n:] = Aa.T
    K[n:, :n] = Aa
    K[n:, n:] = -1e-9 * np.eye(k)
    rhs = np.concatenate([-c, bnd])
    try:
        sol = np.linalg.solve(K, rhs)
        # one step of iterative refinement against the unregularized system
        K0 = K.copy()
        K0[:n, :n] -= 1e-9 * np.eye(n)
        K0[n:, n:] += 1e-9 * np.eye(k)
        sol = sol + np.linalg.solve(K, rhs - K0 @ sol)
    except np.linalg.LinAlgError:
        return None
    xp = sol[:n]
    yp = np.zeros(m)
    yp[act] = sol[n:]
    # clamp multipliers to their cone
    yp[low & np.isfinite(lo)] = np.minimum(yp[low & np.isfinite(lo)], 0.0)
    yp[upp] = np.maximum(yp[upp], 0.0)
    Ax = A @ xp
    zp = np.clip(Ax, lo, hi)
    rp = float(np.max(np.abs(Ax - zp), initial=0.0))
    rd = float(np.max(np.abs(P @ xp + c + A.T @ yp), initial=0.0))
    return xp, yp, zp, rp, rd


def _admm(P, c, A, lo, hi, tol, max_iter):
    """Operator-splitting core; all arrays dense, dimensions desk scale."""
    m, n = A.shape

    # one-pass equilibration
    colmax = np.maximum(
        np.max(np.abs(P), axis=0, initial=0.0),
        np.max(np.abs(A), axis=0, initial=0.0) if m else 0.0,
    )
    D = 1.0 / np.sqrt(np.clip(colmax, 1e-8, 1e8))
    D[colmax == 0.0] = 1.0
    AD = A * D[None, :] if m else A
    rowmax = np.max(np.abs(AD), axis=1, initial=0.0) if m else np.zeros(0)
    E = 1.0 / np.sqrt(np.clip(rowmax, 1e-8, 1e8))
    if m:
        E[rowmax == 0.0] = 1.0
    Ps = (P * D[None, :]) * D[:, None]
    cs = c * D
    cost = 1.0 / max(
        1.0,
        float(np.mean(np.max(np.abs(Ps), axis=0, initial=0.0))),
        float(np.max(np.abs(cs), initial=0.0)),
    )
    Ps *= cost
    cs *= cost
    As = AD * E[:, None] if m else AD
    los = lo * E
    his = hi * E

    eq_row = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    rho = np.full(m, _RHO0)
    rho[eq_row] *= _RHO_EQ_BOOST

    def factor(rho_vec):
        M = Ps + _SIGMA * np.eye(n)
        if m:
            M = M + (As.T * rho_vec[None, :]) @ As
        # scaling can push a marginally PSD block a hair negative; a larger
        # proximal term keeps the splitting valid
        for jitter in (0.0, 1e-10, 1e-7, 1e-4, 1e-1):
            try:
                return scipy.linalg.cho_factor(
                    M + jitter * np.eye(n), lower=True, check_finite=False
                )
            except np.linalg.LinAlgError:
                continue
        raise np.linalg.LinAlgError("x-update matrix is not positive definite")

    chol = factor(rho)
    x = np.zeros(n)
    z = np.clip(np.zeros(m), los, his)
    y = np.zeros(m)
    y_mark = y.copy()

    def unscaled(xs, ys, zs):
        xu = D * xs
        yu = (E * ys) / cost
        zu = zs / E if m else zs
        return xu, yu, zu

    def residuals(xu, yu, zu):
        Ax = A @ xu if m else np.zeros(0)
        rp = float(np.max(np.abs(Ax - zu), initial=0.0))
        sp = max(
            float(np.max(np.abs(Ax), initial=0.0)),
            float(np.max(np.abs(zu), initial=0.0)),
        )
        grad = P @ xu + c + (A.T @ yu if m else 0.0)
        rd = float(np.max(np.abs(grad), initial=0.0))
        sd = max(
            float(np.max(np.abs(P @ xu), initial=0.0)),
            float(np.max(np.abs(A.T @ yu), initial=0.0)) if m else 0.0,
            float(np.max(np.abs(c), initial=0.0)),
        )
        return rp, sp, rd, sd

    best = None
    it = 0
    while it < max_iter:
        inner = min(_CHECK_EVERY, max_iter - it)
        for _ in range(inner):
            rhs = _SIGMA * x + As.T @ (rho * z - y) - cs if m else _SIGMA * x - cs
            x_half = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            x = _ALPHA * x_half + (1.0 - _ALPHA) * x
            if m:
                v = _ALPHA * (As @ x_half) + (1.0 - _ALPHA) * z
                z_new = np.clip(v + y / rho, los, his)
                y = y + rho * (v - z_new)
                z = z_new
        it += inner

        xu, yu, zu = unscaled(x, y, z)
        rp, sp, rd, sd = residuals(xu, yu, zu)
        tol_p = tol * (1.0 + sp)
        tol_d = tol * (1.0 + sd)
        if best is None or max(rp / tol_p, rd / tol_d) < best[0]:
            best = (max(rp / tol_p, rd / tol_d), xu.copy(), yu.copy(), zu.copy(), rp, rd)

        near = rp <= 1e4 * tol_p and rd <= 1e4 * tol_d
        if (rp <= tol_p and rd <= tol_d) or near:
            pol = _polish(P, c, A, lo, hi, yu, tol) if m else None
            if pol is not None:
                xp, yp, zp, rpp, rdp = pol
                _, spp, _, sdp = residuals(xp, yp, zp)
                if rpp <= tol * (1.0 + spp) and rdp <= tol * (1.0 + sdp):
                    return _Raw(STATUS_OPTIMAL, xp, yp, zp, it, rpp, rdp)
            if rp <= tol_p and rd <= tol_d:
                return _Raw(STATUS_OPTIMAL, xu, yu, zu, it, rp, rd)

        # primal infeasibility certificate from the dual increment
        if m:
            dy = yu - y_mark
            nrm = float(np.max(np.abs(dy), initial=0.0))
            if nrm > 1e-14:
                dyn = dy / nrm
                atd = float(np.max(np.abs(A.T @ dyn), initial=0.0))
                pos, neg = np.maximum(dyn, 0.0), np.minimum(dyn, 0.0)
                bad_sup = np.any(pos[~np.isfinite(hi)] > _EPS_PINF) or np.any(
                    -neg[~np.isfinite(lo)] > _EPS_PINF
                )
                if not bad_sup and atd <= _EPS_PINF * (1.0 + np.max(np.abs(A))):
                    support = float(
                        np.sum(hi[np.isfinite(hi)] * pos[np.isfinite(hi)])
                        + np.sum(lo[np.isfinite(lo)] * neg[np.isfinite(lo)])
                    )
                    if support < -_EPS_PINF * (1.0 + abs(support)):
                        return _Raw(STATUS_INFEASIBLE, xu, yu, zu, it, rp, rd)
            y_mark = yu.copy()

        # adapt the penalty to the residual balance
        if m:
            ratio = (rp / (1.0 + sp)) / max(rd / (1.0 + sd), 1e-16)
            scale_fac = math.sqrt(max(ratio, 1e-12))
            if scale_fac > 5.0 or scale_fac < 0.2:
                rho = np.clip(rho * scale_fac, 1e-6, 1e6)
                chol = factor(rho)

    if best is None:
        xu, yu, zu = unscaled(x, y, z)
        rp, sp, rd, sd = residuals(xu, yu, zu)
        best = (math.inf, xu, yu, zu, rp, rd)
    # out of iterations: last chance polish, then best iterate
    pol = _polish(P, c, A, lo, hi, best[2], tol) if m else None
    if pol is not None:
        xp, yp, zp, rpp, rdp = pol
        _, spp, _, sdp = residuals(xp, yp, zp)
        if rpp <= tol * (1.0 + spp) and rdp <= tol * (1.0 + sdp):
            return _Raw(STATUS_OPTIMAL, xp, yp, zp, max_iter, rpp, rdp)
    _, xb, yb, zb, rpb, rdb = best
    return _Raw(STATUS_MAXITER, xb, yb, zb, max_iter, rpb, rdb)


def _stack(model: ConvexQpModel):
    """Stacked constraint system [A; C; I] with two-sided bounds."""
    n = model.nvar
    mats, lons, hins = [], [], []
    if model.A.shape[0]:
        mats.append(model.A)
        lons.append(model.b)
        hins.append(model.b)
    if model.C.shape[0]:
        mats.append(model.C)
        lons.append(np.full(model.C.shape[0], -math.inf))
        hins.append(model.d)
    mats.append(np.eye(n))
    lons.append(model.lb)
    hins.append(model.ub)
    return np.vstack(mats), np.concatenate(lons), np.concatenate(hins)


def _objective(model: ConvexQpModel, x: np.ndarray) -> float:
    val = float(model.q @ x) + model.offset
    if model.Q is not None:
        val += float(x @ model.Q @ x)
    return val


def _dual_bound(model: ConvexQpModel, nu, mu, pi_l, pi_u) -> float:
    """Lagrangian lower bound on the model optimum at the given multipliers.
    Any nonnegative clamping of inequality multipliers keeps the bound valid,
    so sloppy iterates are clamped rather than rejected.  Two routes: the
    fully dualized bound with an unconstrained inner minimum, and (for PSD
    quadratics) the bound with the box kept primal so the inner linear part
    minimizes separably over [l, u].  Returns the better of the two, -inf
    when neither is certifiable."""
    mu = np.maximum(mu, 0.0)
    pi_l = np.maximum(pi_l, 0.0)
    pi_u = np.maximum(pi_u, 0.0)
    lin = model.q.copy()
    if model.A.shape[0]:
        lin += model.A.T @ nu
    if model.C.shape[0]:
        lin += model.C.T @ mu
    base = model.offset
    if model.A.shape[0]:
        base -= float(nu @ model.b)
    if model.C.shape[0]:
        base -= float(mu @ model.d)

    lin1 = lin + pi_u - pi_l
    g1 = -math.inf
    if model.Q is not None and np.any(model.Q):
        P = 2.0 * model.Q
        sol, _, _, _ = np.linalg.lstsq(P, -lin1, rcond=None)
        resid = float(np.max(np.abs(P @ sol + lin1), initial=0.0))
        if resid <= 1e-7 * (1.0 + float(np.max(np.abs(lin1)))):
            g1 = (
                float(sol @ model.Q @ sol + lin1 @ sol)
                + base
                + float(pi_l @ model.lb)
                - float(pi_u @ model.ub)
            )
    elif float(np.max(np.abs(lin1), initial=0.0)) <= 1e-7:
        g1 = base + float(pi_l @ model.lb) - float(pi_u @ model.ub)

    # box kept primal: x'Qx >= 0 for PSD Q (nullspace_convex marks the models
    # that may be indefinite in full space), linear part separable over [l,u]
    g2 = -math.inf
    if not model.nullspace_convex:
        contrib = np.where(
            lin > 0.0, lin * model.lb, np.where(lin < 0.0, lin * model.ub, 0.0)
        )
        if np.all(np.isfinite(contrib)):
            g2 = base + float(np.sum(contrib))
    return max(g1, g2)


def _infeasible(model: ConvexQpModel) -> QpSolution:
    return QpSolution(
        status=STATUS_INFEASIBLE,
        x=None,
        objective=math.inf,
        nu=np.zeros(model.A.shape[0]),
        mu=np.zeros(model.C.shape[0]),
        pi_l=np.zeros(model.nvar),
        pi_u=np.zeros(model.nvar),
        iterations=0,
        primal_residual=math.inf,
        dual_residual=math.inf,
    )


def _solve_full(model: ConvexQpModel, tol, max_iter) -> QpSolution:
    n = model.nvar
    P = 2.0 * model.Q if model.Q is not None else np.zeros((n, n))
    A_s, lo, hi = _stack(model)
    raw = _admm(P, model.q, A_s, lo, hi, tol, max_iter)
    m, p = model.A.shape[0], model.C.shape[0]
    nu = raw.y[:m]
    mu = np.maximum(raw.y[m : m + p], 0.0)
    ybox = raw.y[m + p :]
    sol = QpSolution(
        status=raw.status,
        x=raw.x,
        objective=_objective(model, raw.x),
        nu=nu,
        mu=mu,
        pi_l=np.maximum(-ybox, 0.0),
        pi_u=np.maximum(ybox, 0.0),
        iterations=raw.iterations,
        primal_residual=raw.rp,
        dual_residual=raw.rd,
    )
    if raw.status == STATUS_MAXITER:
        sol.dual_bound = _dual_bound(model, nu, mu, sol.pi_l, sol.pi_u)
    elif raw.status == STATUS_OPTIMAL:
        sol.dual_bound = sol.objective
    return sol


def _complete_nu(model: ConvexQpModel, x, mu, pi_l, pi_u) -> np.ndarray:
    """Equality multipliers minimizing the stationarity residual."""
    grad = model.q.copy()
    if model.Q is not None:
        grad = grad + 2.0 * (model.Q @ x)
    if model.C.shape[0]:
        grad = grad + model.C.T @ mu
    grad = grad - pi_l + pi_u
    if model.A.shape[0] == 0:
        return np.zeros(0)
    nu, _, _, _ = np.linalg.lstsq(model.A.T, -grad, rcond=None)
    return nu


def _solve_reduced(model: ConvexQpModel, tol, max_iter) -> QpSolution:
    """Solve in x = x0 + Z z coordinates for models convex only on the
    nullspace of their equality system."""
    n = model.nvar
    A, b = model.A, model.b
    x0, _, _, _ = np.linalg.lstsq(A, b, rcond=None)
    if float(np.max(np.abs(A @ x0 - b), initial=0.0)) > 1e-8 * (
        1.0 + float(np.max(np.abs(b), initial=0.0))
    ):
        return _infeasible(model)
    Z = linalg.nullspace_basis(A)
    k = Z.shape[1]
    Q = model.Q if model.Q is not None else np.zeros((n, n))
    p = model.C.shape[0]

    if k == 0:
        # the equality system pins x completely
        viol = max(
            float(np.max(model.lb - x0, initial=0.0)),
            float(np.max(x0 - model.ub, initial=0.0)),
            float(np.max(model.C @ x0 - model.d, initial=0.0)) if p else 0.0,
        )
        if viol > 1e-8 * (1.0 + float(np.max(np.abs(x0)))):
            return _infeasible(model)
        x = np.clip(x0, model.lb, model.ub)
        mu = np.zeros(p)
        pi_l = np.zeros(n)
        pi_u = np.zeros(n)
        nu = _complete_nu(model, x, mu, pi_l, pi_u)
        grad = model.q + 2.0 * (Q @ x) + (model.C.T @ mu if p else 0.0) + A.T @ nu
        return QpSolution(
            status=STATUS_OPTIMAL,
            x=x,
            objective=_objective(model, x),
            nu=nu,
            mu=mu,
            pi_l=pi_l,
            pi_u=pi_u,
            iterations=0,
            primal_residual=float(np.max(np.abs(A @ x - b), initial=0.0)),
            dual_residual=float(np.max(np.abs(grad), initial=0.0)),
        )

    Pz = Z.T @ (2.0 * Q) @ Z
    Pz = 0.5 * (Pz + Pz.T)
    cz = Z.T @ (2.0 * (Q @ x0) + model.q)
    rows = [Z]
    lons = [model.lb - x0]
    hins = [model.ub - x0]
    if p:
        rows.insert(0, model.C @ Z)
        lons.insert(0, np.full(p, -math.inf))
        hins.insert(0, model.d - model.C @ x0)
    A_s = np.vstack(rows)
    raw = _admm(Pz, cz, A_s, np.concatenate(lons), np.concatenate(hins), tol, max_iter)
    x = x0 + Z @ raw.x
    mu = np.maximum(raw.y[:p], 0.0) if p else np.zeros(0)
    ybox = raw.y[p:]
    pi_l = np.maximum(-ybox, 0.0)
    pi_u = np.maximum(ybox, 0.0)
    nu = _complete_nu(model, x, mu, pi_l, pi_u)
    grad = model.q + 2.0 * (Q @ x) + (model.C.T @ mu if p else 0.0) - pi_l + pi_u + A.T @ nu
    rp = max(
        float(np.max(np.abs(A @ x - b), initial=0.0)),
        float(np.max(model.C @ x - model.d, initial=0.0)) if p else 0.0,
        float(np.max(model.lb - x, initial=0.0)),
        float(np.max(x - model.ub, initial=0.0)),
        0.0,
    )
    return QpSolution(
        status=raw.status,
        x=x,
        objective=_objective(model, x),
        nu=nu,
        mu=mu,
        pi_l=pi_l,
        pi_u=pi_u,
        iterations=raw.iterations,
        primal_residual=rp,
        dual_residual=float(np.max(np.abs(grad), initial=0.0)),
        dual_bound=_objective(model, x) if raw.status == STATUS_OPTIMAL else -math.inf,
    )


def solve_convex_qp(
    model: ConvexQpModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QpSolution:
    """Solve a convex model to tolerance `tol` on the mixed absolute/relative
    primal and dual residuals.  Statuses: optimal, infeasible, max_iter.
    MaxIter solutions are best iterates and must not be used as bounds;
    their `dual_bound` is safe whenever finite."""
    if _interval_presolve(model):
        return _infeasible(model)
    if model.nullspace_convex and model.A.shape[0]:
        return _solve_reduced(model, tol, max_iter)
    return _solve_full(model, tol, max_iter)


def solve_lp(
    model: ConvexQpModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QpSolution:
    """Linear special case of solve_convex_qp (model.Q absent or zero)."""
    if model.Q is not None and np.any(model.Q):
        raise ValueError("solve_lp requires a linear objective")
    return solve_convex_qp(model, tol=tol, max_iter=max_iter)


def verify_kkt(
    model: ConvexQpModel,
    solution: QpSolution,
    kkt_tol: float = DEFAULT_KKT_TOL,
) -> KktReport:
    """First-order optimality check of a candidate solution: stationarity
    2Qx + q + A'nu + C'mu - pi_l + pi_u = 0, primal feasibility,
    complementary slackness and multiplier nonnegativity.  Residuals are
    scaled by the largest magnitude among data, point and multipliers."""
    x = solution.x
    if x is None:
        return KktReport(math.inf, math.inf, math.inf, math.inf, False)
    nu, mu, pi_l, pi_u = solution.nu, solution.mu, solution.pi_l, solution.pi_u
    grad = model.q.copy()
    if model.Q is not None:
        grad = grad + 2.0 * (model.Q @ x)
    if model.A.shape[0]:
        grad = grad + model.A.T @ nu
    if model.C.shape[0]:
        grad = grad + model.C.T @ mu
    grad = grad - pi_l + pi_u
    stationarity = float(np.max(np.abs(grad), initial=0.0))

    primal = max(
        float(np.max(np.abs(model.A @ x - model.b), initial=0.0)) if model.A.shape[0] else 0.0,
        float(np.max(model.C @ x - model.d, initial=0.0)) if model.C.shape[0] else 0.0,
        float(np.max(model.lb - x, initial=0.0)),
        float(np.max(x - model.ub, initial=0.0)),
        0.0,
    )

    comp = 0.0
    if model.C.shape[0]:
        comp = float(np.max(np.abs(mu * (model.d - model.C @ x)), initial=0.0))
    comp = max(
        comp,
        float(np.max(np.abs(pi_l * (x - model.lb)), initial=0.0)),
        float(np.max(np.abs(pi_u * (model.ub - x)), initial=0.0)),
    )

    dual_viol = max(
        float(np.max(-mu, initial=0.0)),
        float(np.max(-pi_l, initial=0.0)),
        float(np.max(-pi_u, initial=0.0)),
        0.0,
    )

    scale = 1.0 + max(
        float(np.max(np.abs(model.Q), initial=0.0)) if model.Q is not None else 0.0,
        float(np.max(np.abs(model.q), initial=0.0)),
        float(np.max(np.abs(model.A), initial=0.0)) if model.A.shape[0] else 0.0,
        float(np.max(np.abs(model.b), initial=0.0)) if model.A.shape[0] else 0.0,
        float(np.max(np.abs(model.C), initial=0.0)) if model.C.shape[0] else 0.0,
        float(np.max(np.abs(model.d), initial=0.0)) if model.C.shape[0] else 0.0,
        float(np.max(np.abs(model.lb), initial=0.0)),
        float(np.max(np.abs(model.ub), initial=0.0)),
        float(np.max(np.abs(x), initial=0.0)),
        float(np.max(np.abs(nu), initial=0.0)) if nu.size else 0.0,
        float(np.max(np.abs(mu), initial=0.0)) if mu.size else 0.0,
        float(np.max(np.abs(pi_l), initial=0.0)),
        float(np.max(np.abs(pi_u), initial=0.0)),
    )
    s, p_, c_, d_ = (
        stationarity / scale,
        primal / scale,
        comp / scale,
        dual_viol / scale,
    )
    passed = s <= kkt_tol and p_ <= kkt_tol and c_ <= kkt_tol and d_ <= kkt_tol
    return KktReport(s, p_, c_, d_, passed)
