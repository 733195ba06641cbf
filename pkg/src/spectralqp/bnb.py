"""Branch-and-bound engine for nonconvex (MI)QP over boxes with linear rows.

Nodes live on a best-bound heap (ties by creation order).  Each popped node is
restricted, bounded by the configured relaxation, fathomed when its bound
cannot beat the incumbent minus abs_tol, and otherwise branched: binary
variables through the spectral rules, general integers by most-fractional
bound splits, continuous nonconvex variables by envelope-violation spatial
splits.  Convex nodes (Q restricted PSD, or PSD on the equality nullspace)
skip the shift and solve the plain relaxation.

In AUTO mode the engine arbitrates between the spectral QP and the McCormick
LP with per-class solve intervals omega: a relaxation runs when at least
omega nodes passed since it last ran, whichever bound proves stronger at a
node where both ran gets its interval shrunk and the other grown
(dynamic_selection_update).  Relaxation solutions are accepted only when they
pass the KKT check; a failed QP falls back to the LP and then to the parent
bound.  MaxIter solutions never fathom; their Lagrangian dual bound may.

Every run is single-threaded and deterministic for a fixed (problem, config,
seed): the trace (one record per node) and result are bit-reproducible.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import branching, linalg, qpsolve
from .problem import ProblemInstance, check_feasibility, evaluate_objective
from .relaxation import (
    KIND_NONE,
    NodeInfeasible,
    NodeRestriction,
    Restricted,
    SpectralShift,
    build_mccormick_relaxation,
    build_spectral_relaxation,
    compute_shift_at_delta,
    compute_shift_eig,
    compute_shift_eigz_approx,
    compute_shift_geig,
    restrict,
    root_restriction,
)

MODE_EIG = "eig"
MODE_GEIG = "geig"
MODE_EIGZ = "eigz"
MODE_MCCORMICK = "mccormick"
MODE_AUTO = "auto"
MODES = (MODE_EIG, MODE_GEIG, MODE_EIGZ, MODE_MCCORMICK, MODE_AUTO)

RULES = ("approx", "gct", "exact", "fractional", "auto")

STATUS_OPTIMAL = "optimal"
STATUS_TIME_LIMIT = "time_limit"
STATUS_NODE_LIMIT = "node_limit"
STATUS_INFEASIBLE = "infeasible"

CONVEX_NODE_TOL = 1e-10
TINY_BOX = 1e-9
GAP_FLOOR = 1e-3
BOUND_GUARD = 1e-9     # subtracted (relative) from solved objectives before fathoming
PG_STEPS = 100


@dataclass
class SolverConfig:
    relaxation: str = MODE_AUTO
    branch_rule: str = "auto"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-6
    time_limit: float | None = None
    node_limit: int | None = None
    kkt_tol: float = 1e-6
    # ADMM iteration budget for node LPs; the box-absorbed dual bound keeps
    # truncated solves safe, so a modest cap just trades tightness for speed
    lp_max_iter: int = 4000
    # delta search (root only)
    delta_sigma: float = 10.0
    delta_max_iter: int = 5
    delta_rel_tol: float = 1e-3
    # dynamic LP/QP selection
    sel_sigma_lp: float = 10.0
    sel_sigma_qp: float = 2.0
    sel_omega_lp_max: float = 1000.0
    sel_omega_qp_max: float = 10.0
    sel_abs_tol: float = 1e-3
    seed: int = 0
    keep_trace: bool = True

    def __post_init__(self):
        if self.relaxation not in MODES:
            raise ValueError(f"unknown relaxation mode {self.relaxation!r}")
        if self.branch_rule not in RULES:
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SelectionState:
    """Solve intervals (in nodes) for the LP and QP relaxation classes, plus
    nodes-elapsed counters; a class is due when its counter reaches omega."""

    omega_lp: float = 1.0
    omega_qp: float = 1.0
    since_lp: int = 10**9     # start due: the root solves whatever it needs
    since_qp: int = 10**9


def dynamic_selection_update(
    state: SelectionState,
    f_lp: float,
    f_qp: float,
    abs_tol: float = 1e-3,
    sigma_lp: float = 10.0,
    sigma_qp: float = 2.0,
    omega_lp_max: float = 1000.0,
    omega_qp_max: float = 10.0,
) -> SelectionState:
    """Rebalance the solve intervals after a node where both bounds exist:
    a decisively stronger QP bound makes the LP rarer and the QP (at least as)
    frequent; otherwise the LP gets more frequent and the QP rarer."""
    if f_qp - f_lp >= abs_tol:
        omega_qp = max(1.0, state.omega_qp / sigma_qp)
        omega_lp = min(omega_lp_max, state.omega_lp * sigma_lp)
    else:
        omega_lp = max(1.0, state.omega_lp / sigma_lp)
        omega_qp = min(omega_qp_max, state.omega_qp * sigma_qp)
    return replace(state, omega_lp=omega_lp, omega_qp=omega_qp)


def relative_gap(f_ubd: float, f_lbd: float) -> float:
    """100 (f_UBD - f_LBD) / max(|f_LBD|, 1e-3)."""
    if not math.isfinite(f_ubd) or not math.isfinite(f_lbd):
        return math.inf
    return 100.0 * (f_ubd - f_lbd) / max(abs(f_lbd), GAP_FLOOR)


@dataclass(eq=False)
class SolveResult:
    status: str
    x: np.ndarray | None
    f_ubd: float
    f_lbd: float
    gap_percent: float
    nodes: int
    wall_time_s: float
    trace: list | None
    stats: dict


@dataclass(eq=False)
class _Node:
    node: NodeRestriction
    bound: float       # inherited from the parent's computed bound
    depth: int
    order: int


def _assemble_full(problem: ProblemInstance, node: NodeRestriction, x_free) -> np.ndarray:
    x = np.empty(problem.n)
    for i, v in node.fixed.items():
        x[i] = v
    if len(node.free):
        x[list(node.free)] = np.asarray(x_free, dtype=float)
    return x


def _cardinality_row(problem: ProblemInstance):
    """Detects the CBQP structure sum(x) = k; returns k or None."""
    if problem.m != 1 or not problem.is_pure_binary():
        return None
    if not np.all(problem.A[0] == 1.0):
        return None
    k = float(problem.b[0])
    if abs(k - round(k)) > 1e-9:
        return None
    return int(round(k))


def upper_bound_heuristic(
    problem: ProblemInstance,
    node: NodeRestriction,
    x_free,
    f_ubd: float,
):
    """Cheap incumbent candidates from a relaxation point: top-k rounding for
    cardinality-constrained binaries, threshold rounding otherwise, nearest
    rounding for general integers, and <= 100 projected-gradient steps on the
    box for purely continuous problems.  Returns (value, x) for the best
    feasible improving candidate, else None."""
    x0 = _assemble_full(problem, node, x_free)
    candidates = []
    if problem.integers:
        k = _cardinality_row(problem)
        if k is not None and node.free:
            fixed_ones = sum(1 for v in node.fixed.values() if v > 0.5)
            k_eff = k - fixed_ones
            if 0 <= k_eff <= len(node.free):
                vals = np.asarray(x_free, dtype=float)
                order = np.argsort(-vals, kind="stable")
                xc = x0.copy()
                xc[list(node.free)] = 0.0
                for t in order[:k_eff]:
                    xc[node.free[t]] = 1.0
                candidates.append(xc)
        xr = x0.copy()
        idx = sorted(problem.integers)
        if problem.is_pure_binary():
            xr[idx] = np.where(xr[idx] >= 0.5, 1.0, 0.0)
        else:
            xr[idx] = np.clip(np.round(xr[idx]), problem.lb[idx], problem.ub[idx])
        candidates.append(xr)
    elif problem.m == 0 and problem.p == 0:
        xg = np.clip(x0, problem.lb, problem.ub)
        lip = 2.0 * float(np.linalg.norm(problem.Q, ord="fro")) + 1e-12
        step = 1.0 / lip
        for _ in range(PG_STEPS):
            grad = 2.0 * (problem.Q @ xg) + problem.q
            nxt = np.clip(xg - step * grad, problem.lb, problem.ub)
            if float(np.max(np.abs(nxt - xg))) <= 1e-12:
                break
            xg = nxt
        candidates.append(xg)
        candidates.append(np.clip(x0, problem.lb, problem.ub))
    else:
        candidates.append(np.clip(x0, problem.lb, problem.ub))

    best = None
    for xc in candidates:
        if not check_feasibility(problem, xc).feasible:
            continue
        val = evaluate_objective(problem, xc)
        if val < f_ubd - 1e-12 and (best is None or val < best[0]):
            best = (val, xc)
    return best


class _Engine:
    def __init__(self, problem: ProblemInstance, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.selection = SelectionState()
        self.root_delta: float | None = None
        self.delta_trace: list = []
        self.stats = {
            "qp_solves": 0,
            "lp_solves": 0,
            "kkt_discards": 0,
            "max_accepted_kkt": 0.0,
            "heuristic_hits": 0,
            "convex_nodes": 0,
        }

    # ------------------------------------------------------------- relaxation

    def _qp_shift(self, R: Restricted) -> SpectralShift:
        mode = self.config.relaxation
        if mode == MODE_EIG:
            return compute_shift_eig(R.Qb)
        if mode == MODE_GEIG:
            return compute_shift_geig(R.Qb, R.Ab)
        # eigz and the AUTO qp class: delta pencil with the root's delta
        if R.Ab.size == 0:
            return compute_shift_eig(R.Qb)
        if self.root_delta is None:
            shift, trace = compute_shift_eigz_approx(
                R.Qb,
                R.Ab,
                sigma=self.config.delta_sigma,
                max_iter=self.config.delta_max_iter,
                rel_tol=self.config.delta_rel_tol,
            )
            self.root_delta = shift.delta
            self.delta_trace = trace
            return shift
        return compute_shift_at_delta(R.Qb, R.Ab, self.root_delta)

    def _convex_shift(self, R: Restricted):
        """Zero shift when the node is convex (box, or on the equality
        nullspace); returns (shift, nullspace_flag) or None."""
        pair = linalg.sym_eig_min(R.Qb)
        if pair.value >= -CONVEX_NODE_TOL:
            return SpectralShift(KIND_NONE, 0.0, pair.value, pair.vector), False
        if R.Ab.shape[0]:
            Z = linalg.nullspace_basis(R.Ab)
            if Z.shape[1] == 0:
                return SpectralShift(KIND_NONE, 0.0, pair.value, pair.vector), True
            zpair = linalg.sym_eig_min(Z.T @ R.Qb @ Z)
            if zpair.value >= -CONVEX_NODE_TOL:
                return SpectralShift(KIND_NONE, 0.0, pair.value, pair.vector), True
        return None

    def _accept(self, model, sol):
        """KKT-gate a solved relaxation; returns a safe lower bound value and
        the primal point, or (None, None) when unusable for fathoming."""
        if sol.status == qpsolve.STATUS_OPTIMAL:
            rep = qpsolve.verify_kkt(model, sol, kkt_tol=self.config.kkt_tol)
            if rep.passed:
                worst = max(
                    rep.stationarity, rep.primal, rep.complementarity, rep.dual_violation
                )
                self.stats["max_accepted_kkt"] = max(
                    self.stats["max_accepted_kkt"], worst
                )
                guard = BOUND_GUARD * (1.0 + abs(sol.objective))
                return sol.objective - guard, sol.x[: model.x_dim]
            self.stats["kkt_discards"] += 1
            return None, None
        if sol.status == qpsolve.STATUS_MAXITER:
            # never fathom on the iterate; the dual bound is safe when finite
            if math.isfinite(sol.dual_bound):
                return sol.dual_bound, sol.x[: model.x_dim] if sol.x is not None else None
            return None, (sol.x[: model.x_dim] if sol.x is not None else None)
        raise NodeInfeasible("relaxation certified the node empty")

    def _solve_qp(self, entry, R):
        conv = self._convex_shift(R)
        if conv is not None:
            shift, ns_flag = conv
            self.stats["convex_nodes"] += 1
            model = build_spectral_relaxation(
                self.problem, entry.node, shift, restricted=R, nullspace_convex=ns_flag
            )
        else:
            shift = self._qp_shift(R)
            model = build_spectral_relaxation(
                self.problem, entry.node, shift, restricted=R
            )
        self.stats["qp_solves"] += 1
        sol = qpsolve.solve_convex_qp(model)
        bound, x = self._accept(model, sol)
        return bound, x, shift, model.kind

    def _solve_lp(self, entry, R):
        model = build_mccormick_relaxation(self.problem, entry.node, restricted=R)
        self.stats["lp_solves"] += 1
        sol = qpsolve.solve_lp(model, max_iter=self.config.lp_max_iter)
        bound, x = self._accept(model, sol)
        return bound, x

    def lower_bound(self, entry: _Node, R: Restricted):
        """Bound one node.  Returns (bound, x_relax, shift, kind_used); raises
        NodeInfeasible when any relaxation certifies emptiness."""
        cfg = self.config
        if cfg.relaxation == MODE_MCCORMICK:
            conv = self._convex_shift(R)
            if conv is not None:
                bound, x, shift, kind = self._solve_qp(entry, R)
                return bound, x, shift, kind
            bound, x = self._solve_lp(entry, R)
            return bound, x, None, "mccormick"
        if cfg.relaxation != MODE_AUTO:
            bound, x, shift, kind = self._solve_qp(entry, R)
            if bound is None:
                lp_bound, lp_x = self._solve_lp(entry, R)
                if lp_bound is not None:
                    return lp_bound, lp_x if lp_x is not None else x, shift, "mccormick"
            return bound, x, shift, kind

        # AUTO: counters advance every node, solve whatever is due
        sel = self.selection
        since_lp, since_qp = sel.since_lp + 1, sel.since_qp + 1
        due_lp = since_lp >= sel.omega_lp
        due_qp = since_qp >= sel.omega_qp
        if not due_lp and not due_qp:
            due_qp = True       # a node must always receive a bound
        f_qp = x_qp = shift = kind = None
        f_lp = x_lp = None
        if due_qp:
            f_qp, x_qp, shift, kind = self._solve_qp(entry, R)
            since_qp = 0
        if due_lp or (due_qp and f_qp is None):
            f_lp, x_lp = self._solve_lp(entry, R)
            since_lp = 0
        if f_qp is not None and f_lp is not None:
            self.selection = replace(
                dynamic_selection_update(
                    sel,
                    f_lp,
                    f_qp,
                    abs_tol=cfg.sel_abs_tol,
                    sigma_lp=cfg.sel_sigma_lp,
                    sigma_qp=cfg.sel_sigma_qp,
                    omega_lp_max=cfg.sel_omega_lp_max,
                    omega_qp_max=cfg.sel_omega_qp_max,
                ),
                since_lp=since_lp,
                since_qp=since_qp,
            )
        else:
            self.selection = replace(sel, since_lp=since_lp, since_qp=since_qp)
        if f_qp is None and f_lp is None:
            return None, x_qp if x_qp is not None else x_lp, shift, kind or "none"
        if f_lp is None or (f_qp is not None and f_qp >= f_lp):
            return f_qp, x_qp, shift, kind
        return f_lp, x_lp if x_lp is not None else x_qp, shift, "mccormick"


def _branch_children(problem, config, entry, R, x_rel, shift, engine):
    """Create child restrictions; returns (children, branch_index) or None
    when the node cannot be split further."""
    node = entry.node
    free = node.free
    x_rel = np.asarray(x_rel, dtype=float)
    unfixed_int = [i for i in free if i in problem.integers]
    rule = config.branch_rule

    if unfixed_int:
        idx = None
        local = {orig: t for t, orig in enumerate(free)}
        binary = problem.is_pure_binary()
        spectral_ok = binary and len(free) >= 2
        wanted = rule if rule in ("approx", "gct", "exact") else "approx"
        if spectral_ok and rule != "fractional":
            try:
                if wanted == "exact":
                    idx = branching.spectral_branch_exact(R.Qb, free)
                elif wanted == "gct":
                    idx = branching.spectral_branch_gct(R.Qb, free)
                elif shift is not None and shift.alpha > 0:
                    idx = branching.spectral_branch_approx(shift, free)
            except ValueError:
                idx = None
        if idx is None:
            try:
                idx = branching.most_fractional_branch(node, x_rel, problem.integers)
            except ValueError:
                idx = unfixed_int[0]
        t = local[idx]
        lo, up = node.lb[t], node.ub[t]
        if binary or (lo == 0.0 and up == 1.0):
            children = []
            for v in (0.0, 1.0):     # 0-child first
                fixed = dict(node.fixed)
                fixed[idx] = v
                keep = tuple(i for i in free if i != idx)
                mask = [s for s, i in enumerate(free) if i != idx]
                children.append(
                    NodeRestriction(
                        free=keep, fixed=fixed, lb=node.lb[mask], ub=node.ub[mask]
                    )
                )
            return children, idx
        v = float(np.clip(x_rel[t], lo, up))
        split = math.floor(v + 1e-9)
        split = int(np.clip(split, math.ceil(lo), math.floor(up) - 1))
        children = []
        for new_lo, new_up in ((lo, float(split)), (float(split + 1), up)):
            if new_lo > new_up + 1e-12:
                continue
            if new_lo == new_up:
                fixed = dict(node.fixed)
                fixed[idx] = new_lo
                keep = tuple(i for i in free if i != idx)
                mask = [s for s, i in enumerate(free) if i != idx]
                children.append(
                    NodeRestriction(
                        free=keep, fixed=fixed, lb=node.lb[mask], ub=node.ub[mask]
                    )
                )
            else:
                lb, ub = node.lb.copy(), node.ub.copy()
                lb[t], ub[t] = new_lo, new_up
                children.append(
                    NodeRestriction(free=free, fixed=dict(node.fixed), lb=lb, ub=ub)
                )
        return children, idx

    # continuous: spatial split at the relaxation point
    alpha = shift.alpha if shift is not None else 0.0
    try:
        dec = branching.spatial_branch(node, x_rel, R.Qb, alpha=alpha)
    except ValueError:
        return None
    t = free.index(dec.index)
    children = []
    for new_lo, new_up in ((node.lb[t], dec.split), (dec.split, node.ub[t])):
        lb, ub = node.lb.copy(), node.ub.copy()
        lb[t], ub[t] = new_lo, new_up
        children.append(NodeRestriction(free=free, fixed=dict(node.fixed), lb=lb, ub=ub))
    return children, dec.index


def solve(problem: ProblemInstance, config: SolverConfig | None = None) -> SolveResult:
    """Globally minimize the instance by spectral branch-and-bound."""
    cfg = config if config is not None else SolverConfig()
    eng = _Engine(problem, cfg)
    t0 = time.monotonic()

    f_ubd = math.inf
    x_best = None
    f_lbd_run = -math.inf
    trace = [] if cfg.keep_trace else None
    order = 0
    heap = []
    root = _Node(node=root_restriction(problem), bound=-math.inf, depth=0, order=0)
    heapq.heappush(heap, (root.bound, root.order, root))
    nodes_done = 0
    status = None

    def record(entry, bound, kind, branch_var, action):
        if trace is not None:
            trace.append(
                {
                    "id": entry.order,
                    "depth": entry.depth,
                    "bound": None if bound is None or not math.isfinite(bound) else bound,
                    "relaxation": kind,
                    "branch_variable": branch_var,
                    "action": action,
                }
            )

    def try_incumbent(val, x):
        nonlocal f_ubd, x_best
        if val < f_ubd - 1e-12:
            f_ubd = val
            x_best = x
            return True
        return False

    while heap:
        if cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit:
            status = STATUS_TIME_LIMIT
            break
        if cfg.node_limit is not None and nodes_done >= cfg.node_limit:
            status = STATUS_NODE_LIMIT
            break
        _, _, entry = heapq.heappop(heap)
        nodes_done += 1
        f_lbd_run = max(f_lbd_run, entry.bound)

        if entry.bound >= f_ubd - cfg.abs_tol or (
            math.isfinite(f_ubd)
            and relative_gap(f_ubd, entry.bound) <= 100.0 * cfg.rel_tol
        ):
            record(entry, entry.bound, None, None, "fathom_inherited")
            continue

        node = entry.node
        # leaf: everything fixed
        if not node.free:
            x = _assemble_full(problem, node, np.zeros(0))
            if check_feasibility(problem, x).feasible:
                val = evaluate_objective(problem, x)
                if try_incumbent(val, x):
                    eng.stats["heuristic_hits"] += 1
                record(entry, val, None, None, "leaf")
            else:
                record(entry, None, None, None, "fathom_infeasible")
            continue

        R = restrict(problem, node)
        unfixed_int = any(i in problem.integers for i in node.free)
        # collapsed continuous box: bound by the center value and fathom
        if not unfixed_int and float(np.max(node.ub - node.lb)) <= TINY_BOX:
            center = 0.5 * (node.lb + node.ub)
            x = _assemble_full(problem, node, center)
            if check_feasibility(problem, x).feasible:
                try_incumbent(evaluate_objective(problem, x), x)
            record(entry, entry.bound, None, None, "fathom_tiny_box")
            continue

        try:
            bound, x_rel, shift, kind = eng.lower_bound(entry, R)
        except NodeInfeasible:
            record(entry, None, None, None, "fathom_infeasible")
            continue
        node_bound = entry.bound if bound is None else max(entry.bound, bound)

        if x_rel is not None:
            cand = upper_bound_heuristic(problem, node, x_rel, f_ubd)
            if cand is not None:
                try_incumbent(*cand)
                eng.stats["heuristic_hits"] += 1

        if node_bound >= f_ubd - cfg.abs_tol or (
            math.isfinite(f_ubd)
            and relative_gap(f_ubd, node_bound) <= 100.0 * cfg.rel_tol
        ):
            record(entry, node_bound, kind, None, "fathom_bound")
            continue

        if x_rel is None:
            x_rel = 0.5 * (node.lb + node.ub)
        made = _branch_children(problem, cfg, entry, R, x_rel, shift, eng)
        if made is None:
            # no splittable direction left; the box center decides the node
            center = 0.5 * (node.lb + node.ub)
            x = _assemble_full(problem, node, center)
            if check_feasibility(problem, x).feasible:
                try_incumbent(evaluate_objective(problem, x), x)
            record(entry, node_bound, kind, None, "fathom_tiny_box")
            continue
        children, branch_var = made
        record(entry, node_bound, kind, branch_var, "branch")
        for child in children:
            if np.any(child.lb > child.ub + 1e-12):
                continue
            order += 1
            kid = _Node(node=child, bound=node_bound, depth=entry.depth + 1, order=order)
            heapq.heappush(heap, (kid.bound, kid.order, kid))

    if status is None:
        status = STATUS_OPTIMAL if x_best is not None else STATUS_INFEASIBLE

    if heap:
        f_lbd = min(min(b for b, _, _ in heap), f_ubd)
    elif status == STATUS_OPTIMAL:
        f_lbd = min(max(f_lbd_run, f_ubd - cfg.abs_tol), f_ubd)
    else:
        f_lbd = math.inf       # infeasible: nothing to bound
    gap = relative_gap(f_ubd, f_lbd) if status != STATUS_INFEASIBLE else math.inf

    stats = dict(eng.stats)
    stats["selection_omega_lp"] = eng.selection.omega_lp
    stats["selection_omega_qp"] = eng.selection.omega_qp
    if eng.root_delta is not None:
        stats["root_delta"] = eng.root_delta
        stats["delta_trace"] = list(eng.delta_trace)
    return SolveResult(
        status=status,
        x=x_best,
        f_ubd=f_ubd,
        f_lbd=f_lbd,
        gap_percent=gap,
        nodes=nodes_done,
        wall_time_s=time.monotonic() - t0,
        trace=trace,
        stats=stats,
    )
