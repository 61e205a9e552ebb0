"""Best-bound branch-and-bound over the binary variables of a program."""

from dataclasses import dataclass, field
import heapq
import logging
import time

import numpy as np

from .simplex import SimplexOptions, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6


@dataclass
class MipSolution:
    status: str  # optimal | infeasible | node_limit
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    assignment: dict = field(default_factory=dict)
    lp: object = field(default=None, repr=False)
    seconds: float = 0.0

    @property
    def gap(self):
        if not np.isfinite(self.objective):
            return np.inf
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))


def _binary_index(program):
    return np.flatnonzero(np.asarray(program.is_binary, dtype=bool))


def _fixed_bounds(program, bins, values):
    lb = np.array(program.lb, dtype=float)
    ub = np.array(program.ub, dtype=float)
    lb[bins] = values
    ub[bins] = values
    return lb, ub


def resolve_fixed(program, assignment, basis=None, options=None):
    """Solve the LP restriction with every binary fixed to ``assignment``.

    ``assignment`` maps binary column index -> 0/1 (or is an array aligned with
    the program's binary columns).  The returned solution carries full duals.
    """
    bins = _binary_index(program)
    if isinstance(assignment, dict):
        missing = [j for j in bins if int(j) not in assignment]
        if missing:
            raise ValueError(f"assignment misses {len(missing)} binaries, e.g. column {missing[0]}")
        values = np.array([assignment[int(j)] for j in bins], dtype=float)
    else:
        values = np.asarray(assignment, dtype=float)
        if values.shape != bins.shape:
            raise ValueError("assignment length does not match the number of binaries")
    lb, ub = _fixed_bounds(program, bins, np.round(values))
    return solve_lp(program, lb=lb, ub=ub, basis=basis, options=options)


def _round_heuristics(program, bins, x, basis, options):
    frac = x[bins]
    tries = [np.where(frac > INT_TOL, 1.0, 0.0), np.where(frac >= 0.5, 1.0, 0.0)]
    best = None
    seen = set()
    for vals in tries:
        key = vals.tobytes()
        if key in seen:
            continue
        seen.add(key)
        lb, ub = _fixed_bounds(program, bins, vals)
        sol = solve_lp(program, lb=lb, ub=ub, basis=basis, options=options)
        if sol.optimal and (best is None or sol.objective < best.objective):
            best = sol
    return best


def solve_mip(program, mip_gap=1e-6, node_limit=200000, options=None, time_limit=None):
    """Minimise ``program`` with its binaries integral.

    Nodes are chosen best-bound first, ties going to the deepest node, and
    the branching variable is the most fractional binary (lowest index on
    ties).  Node LPs are warm-started from the parent's basis.  Binaries whose
    reduced cost alone closes the gap to the incumbent are fixed, at the root
    for the whole tree and at each node for its subtree.
    """
    opts = options or SimplexOptions()
    t0 = time.perf_counter()
    bins = _binary_index(program)
    lb0 = np.array(program.lb, dtype=float)
    ub0 = np.array(program.ub, dtype=float)
    lb0[bins] = np.maximum(lb0[bins], 0.0)
    ub0[bins] = np.minimum(ub0[bins], 1.0)

    root = solve_lp(program, lb=lb0, ub=ub0, options=opts)
    if root.status != "optimal":
        status = "infeasible" if root.status == "infeasible" else root.status
        return MipSolution(status, None, np.inf, np.inf, 1, lp=root,
                           seconds=time.perf_counter() - t0)
    if bins.size == 0:
        return MipSolution("optimal", root.x, root.objective, root.objective, 1,
                           {}, root, time.perf_counter() - t0)

    incumbent = None
    inc_obj = np.inf

    def accept(sol):
        nonlocal incumbent, inc_obj
        if sol is not None and sol.objective < inc_obj:
            incumbent, inc_obj = sol, sol.objective

    def gap_abs(obj):
        return mip_gap * max(1.0, abs(obj))

    if _fractional(root.x, bins).size == 0:
        accept(root)
    else:
        accept(_round_heuristics(program, bins, root.x, root.basis, opts))

    def fix_root():
        for j, v in _reduced_cost_fixings(root, bins, inc_obj - gap_abs(inc_obj)).items():
            lb0[j] = ub0[j] = v

    # heap entries: (parent bound, -depth, seq, fixings, basis)
    heap = []
    seq = 0
    nodes = 1
    if incumbent is not root:
        fix_root()
        _push_children(heap, root, bins, {}, 0, seq)
        seq += 2
    status = "optimal"
    while heap:
        bound = heap[0][0]
        if bound >= inc_obj - gap_abs(inc_obj):
            break
        if nodes >= node_limit or (time_limit and time.perf_counter() - t0 > time_limit):
            status = "node_limit"
            break
        pbound, negdepth, _, fix, basis = heapq.heappop(heap)
        lb = lb0.copy()
        ub = ub0.copy()
        for j, v in fix.items():
            lb[j] = ub[j] = v
        sol = solve_lp(program, lb=lb, ub=ub, basis=basis, options=opts)
        nodes += 1
        if sol.status != "optimal":
            continue
        if sol.objective >= inc_obj - gap_abs(inc_obj):
            continue
        if _fractional(sol.x, bins).size == 0:
            accept(sol)
            fix_root()
            continue
        if nodes % 25 == 0:
            before = inc_obj
            accept(_round_heuristics(program, bins, sol.x, sol.basis, opts))
            if inc_obj < before:
                fix_root()
        cut = _reduced_cost_fixings(sol, bins, inc_obj - gap_abs(inc_obj))
        if cut:
            fix = {**fix, **cut}
        _push_children(heap, sol, bins, fix, -negdepth, seq)
        seq += 2

    best_bound = min([h[0] for h in heap], default=np.inf)
    best_bound = min(best_bound, inc_obj)
    if incumbent is None:
        st = "infeasible" if status == "optimal" else status
        return MipSolution(st, None, np.inf, best_bound, nodes,
                           seconds=time.perf_counter() - t0)
    assignment = {int(j): int(round(incumbent.x[j])) for j in bins}
    if status == "optimal":
        best_bound = max(min(best_bound, inc_obj), root.objective)
    log.debug("branch-and-bound: %d nodes, obj %.6f, bound %.6f", nodes, inc_obj, best_bound)
    return MipSolution(status, incumbent.x, inc_obj, best_bound, nodes, assignment,
                       incumbent, time.perf_counter() - t0)


def _reduced_cost_fixings(sol, bins, target):
    """Binaries that cannot leave their LP bound without the bound passing ``target``.

    Moving a nonbasic binary off its bound by one unit raises the LP value by
    at least its reduced cost, so if ``objective + |d_j| >= target`` it can
    stay where it is in every improving solution below this node.
    """
    if not np.isfinite(target):
        return {}
    d = sol.reduced_costs[bins]
    x = sol.x[bins]
    slack = target - sol.objective
    at_lo = (x <= INT_TOL) & (d > slack)
    at_hi = (x >= 1.0 - INT_TOL) & (-d > slack)
    out = {int(j): 0.0 for j in bins[at_lo]}
    out.update({int(j): 1.0 for j in bins[at_hi]})
    return out


def _fractional(x, bins):
    v = x[bins]
    return bins[np.abs(v - np.round(v)) > INT_TOL]


def _push_children(heap, sol, bins, fix, depth, seq):
    frac = _fractional(sol.x, bins)
    v = sol.x[frac]
    # most fractional; argmin picks the lowest column on ties
    k = int(np.argmin(np.abs(v - 0.5)))
    j = int(frac[k])
    up_first = v[k] >= 0.5
    order = (1.0, 0.0) if up_first else (0.0, 1.0)
    for i, val in enumerate(order):
        child = dict(fix)
        child[j] = val
        heapq.heappush(heap, (sol.objective, -(depth + 1), seq + i, child, sol.basis))
