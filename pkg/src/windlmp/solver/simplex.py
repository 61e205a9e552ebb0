"""Bounded-variable revised primal simplex.

The LP is taken in row-bounded form

    min c'x   s.t.   row_lo <= A x <= row_hi,   lb <= x <= ub

and solved in computational form ``A x - s = 0`` with one logical ``s_i``
per row carrying the row bounds.  Nonbasic variables sit at a bound (or at
zero when free), so no slack expansion or bound shifting is needed.

Phase 1 minimises the sum of bound violations of the basic variables and
may start from any basis, which is what makes warm starts in
branch-and-bound cheap.  The basis inverse is a sparse LU of the last
refactorised basis followed by a product-form eta file.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

AT_LOWER = 0
AT_UPPER = 1
AT_ZERO = 2
BASIC = 3


class SolverError(RuntimeError):
    pass


class IterationLimitError(SolverError):
    pass


class NumericalError(SolverError):
    pass


@dataclass
class SimplexOptions:
    tol_feas: float = 1e-9
    tol_dual: float = 1e-9
    tol_pivot: float = 1e-9
    ratio_eps: float = 1e-10
    refactor_every: int = 100
    drift_tol: float = 1e-9
    bland_after: int = 50
    max_iter: int | None = None
    trace: str | None = None
    # try the dual simplex first whenever the starting basis is dual feasible
    dual: bool = True


@dataclass
class Basis:
    """Snapshot of a simplex basis: basic column ids and nonbasic statuses."""

    basic: np.ndarray
    status: np.ndarray


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    iterations: int = 0
    basis: Basis | None = field(default=None, repr=False)
    # row multipliers of the phase-1 problem when infeasible
    farkas: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self):
        return self.status == "optimal"


class _Factor:
    """LU of a base basis matrix plus product-form eta updates."""

    def __init__(self, B):
        self.m = B.shape[0]
        try:
            self.lu = splu(sp.csc_matrix(B), permc_spec="COLAMD")
        except RuntimeError as exc:  # exactly singular
            raise NumericalError(f"singular basis: {exc}") from exc
        self.etas = []

    def ftran(self, a):
        z = self.lu.solve(a)
        for r, idx, vals, piv in self.etas:
            t = z[r] / piv
            if t != 0.0:
                z[idx] -= t * vals
            z[r] = t
        return z

    def btran(self, w):
        w = np.array(w, dtype=float)
        for r, idx, vals, piv in reversed(self.etas):
            s = w[idx] @ vals
            w[r] = (w[r] - (s - w[r] * piv)) / piv
        return self.lu.solve(w, trans="T")

    def update(self, r, alpha):
        idx = np.flatnonzero(alpha)
        self.etas.append((r, idx, alpha[idx].copy(), alpha[r]))


def _row_bounds(program):
    return (np.asarray(program.row_lo, dtype=float),
            np.asarray(program.row_hi, dtype=float))


class _Simplex:

    def __init__(self, A, c, lb, ub, row_lo, row_hi, opts):
        self.opts = opts
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.A = A
        self.AT = A.T.tocsr()
        self.full = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.lb = np.concatenate([lb, row_lo]).astype(float)
        self.ub = np.concatenate([ub, row_hi]).astype(float)
        if np.any(self.lb > self.ub + opts.tol_feas):
            self.bad_bounds = True
        else:
            self.bad_bounds = False
        N = n + m
        self.movable = self.lb < self.ub
        self.x = np.zeros(N)
        self.status = np.zeros(N, dtype=np.int8)
        self.basic = np.arange(n, n + m)
        self.iterations = 0
        self._trace = open(opts.trace, "a") if opts.trace else None

    # ------------------------------------------------------------------ setup
    def _place_nonbasic(self, j, preferred=AT_LOWER):
        lo, hi = self.lb[j], self.ub[j]
        if preferred == AT_UPPER and np.isfinite(hi):
            self.status[j], self.x[j] = AT_UPPER, hi
        elif np.isfinite(lo):
            self.status[j], self.x[j] = AT_LOWER, lo
        elif np.isfinite(hi):
            self.status[j], self.x[j] = AT_UPPER, hi
        else:
            self.status[j], self.x[j] = AT_ZERO, 0.0

    def start(self, basis=None):
        N = self.n + self.m
        if basis is not None and len(basis.basic) == self.m and len(basis.status) == N:
            self.basic = np.array(basis.basic, dtype=int)
            for j in range(N):
                if basis.status[j] != BASIC:
                    self._place_nonbasic(j, basis.status[j])
            self.status[self.basic] = BASIC
            try:
                self.refactor()
                return
            except NumericalError:
                log.debug("warm-start basis singular, falling back to slack basis")
        self.basic = np.arange(self.n, N)
        for j in range(self.n):
            self._place_nonbasic(j)
        self.status[self.basic] = BASIC
        self.refactor()

    def refactor(self):
        self.factor = _Factor(self.full[:, self.basic])
        self._recompute_basics()

    def _recompute_basics(self):
        xn = self.x.copy()
        xn[self.basic] = 0.0
        rhs = -(self.full @ xn)
        self.x[self.basic] = self.factor.lu.solve(rhs)
        self.factor.etas.clear()

    def _column(self, j):
        f = self.full
        lo, hi = f.indptr[j], f.indptr[j + 1]
        col = np.zeros(self.m)
        col[f.indices[lo:hi]] = f.data[lo:hi]
        return col

    def _drift(self):
        r = self.full @ self.x
        return np.max(np.abs(r)) / (1.0 + np.max(np.abs(self.x)))

    # ------------------------------------------------------------- main loop
    def _infeasibility(self):
        xb = self.x[self.basic]
        lo = self.lb[self.basic]
        hi = self.ub[self.basic]
        below = xb < lo - self.opts.tol_feas
        above = xb > hi + self.opts.tol_feas
        return below, above

    def _duals(self, phase, below, above):
        if phase == 1:
            cb = above.astype(float) - below.astype(float)
        else:
            cb = self.c[self.basic]
        y = self.factor.btran(cb)
        if phase == 1:
            d = np.concatenate([-(self.AT @ y), y])
        else:
            d = self.c - np.concatenate([self.AT @ y, -y])
        return y, d

    def _choose_entering(self, d, bland):
        tol = self.opts.tol_dual
        st = self.status
        elig = self.movable & (
            ((st == AT_LOWER) & (d < -tol))
            | ((st == AT_UPPER) & (d > tol))
            | ((st == AT_ZERO) & (np.abs(d) > tol))
        )
        cand = np.flatnonzero(elig)
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        return int(cand[np.argmax(np.abs(d[cand]))])

    def _ratio_test(self, j, direction, alpha, phase, bland):
        opts = self.opts
        delta = -direction * alpha
        xb = self.x[self.basic]
        lo = self.lb[self.basic]
        hi = self.ub[self.basic]
        tol = opts.tol_feas
        theta = np.full(self.m, np.inf)
        target = np.full(self.m, np.nan)

        dec = delta < -opts.tol_pivot
        inc = delta > opts.tol_pivot
        feas = (xb >= lo - tol) & (xb <= hi + tol)

        # decreasing basics: feasible ones stop at lb, ones above ub stop at ub
        t_dec = np.where(feas, lo, np.where(xb > hi + tol, hi, -np.inf))
        t_inc = np.where(feas, hi, np.where(xb < lo - tol, lo, np.inf))
        if phase == 2:
            t_dec = lo
            t_inc = hi
        sel = dec & np.isfinite(t_dec)
        theta[sel] = (t_dec[sel] - xb[sel]) / delta[sel]
        target[sel] = t_dec[sel]
        sel = inc & np.isfinite(t_inc)
        theta[sel] = (t_inc[sel] - xb[sel]) / delta[sel]
        target[sel] = t_inc[sel]
        np.maximum(theta, 0.0, out=theta)

        flip = self.ub[j] - self.lb[j]
        tmin = theta.min() if self.m else np.inf
        if flip <= tmin:
            return flip, -1, np.nan
        if not np.isfinite(tmin):
            return np.inf, -1, np.nan
        ties = np.flatnonzero(theta <= tmin + opts.ratio_eps)
        if bland:
            r = int(ties[np.argmin(self.basic[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        return tmin, r, target[r]

    # ----------------------------------------------------------- dual simplex
    def _make_dual_feasible(self, d):
        """Flip boxed nonbasics to the bound their reduced cost prefers.

        Returns False when a dual infeasibility cannot be removed that way.
        """
        tol = self.opts.tol_dual
        st = self.status
        nb = self.movable & (st != BASIC)
        wrong_lo = nb & (st == AT_LOWER) & (d < -tol)
        wrong_hi = nb & (st == AT_UPPER) & (d > tol)
        wrong_free = nb & (st == AT_ZERO) & (np.abs(d) > tol)
        if wrong_free.any():
            return False
        boxed = np.isfinite(self.lb) & np.isfinite(self.ub)
        if np.any(wrong_lo & ~boxed) or np.any(wrong_hi & ~boxed):
            return False
        flips = np.flatnonzero(wrong_lo | wrong_hi)
        if flips.size:
            to_up = st[flips] == AT_LOWER
            st[flips] = np.where(to_up, AT_UPPER, AT_LOWER)
            self.x[flips] = np.where(to_up, self.ub[flips], self.lb[flips])
            self._recompute_basics()
        return True

    def run_dual(self):
        """Dual simplex from a dual feasible basis.

        Returns "optimal" (primal feasible reached), "infeasible" (a row
        admits no entering column) or "fallback" when the basis is not dual
        feasible or progress stalls; the primal loop then takes over.
        """
        opts = self.opts
        n, m = self.n, self.m
        if self.bad_bounds:
            return "infeasible"
        _, d = self._duals(2, None, None)
        if not self._make_dual_feasible(d):
            return "fallback"
        max_iter = opts.max_iter or max(20000, 30 * (m + n))
        since_refactor = 0
        stall = 0
        tol_p = opts.tol_feas
        tol_d = opts.tol_dual
        while True:
            xb = self.x[self.basic]
            lo = self.lb[self.basic]
            hi = self.ub[self.basic]
            viol = np.maximum(lo - xb, xb - hi)
            r = int(np.argmax(viol))
            if viol[r] <= tol_p:
                return "optimal"
            self.iterations += 1
            if self.iterations > max_iter:
                raise IterationLimitError(f"dual simplex iteration limit {max_iter} reached")
            above = xb[r] > hi[r]
            s = 1.0 if above else -1.0
            e = np.zeros(m)
            e[r] = 1.0
            rho = self.factor.btran(e)
            alpha_r = np.concatenate([self.AT @ rho, -rho])
            sa = s * alpha_r
            st = self.status
            cand = self.movable & (st != BASIC) & (
                ((st == AT_LOWER) & (sa > opts.tol_pivot))
                | ((st == AT_UPPER) & (sa < -opts.tol_pivot))
                | ((st == AT_ZERO) & (np.abs(sa) > opts.tol_pivot)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "infeasible"
            dj = d[idx]
            aj = sa[idx]
            free = st[idx] == AT_ZERO
            # Harris two-pass ratio test with dual tolerance
            num = np.where(free, np.abs(dj), np.abs(dj) + tol_d)
            bound = np.min(num / np.abs(aj))
            ratios = np.abs(dj) / np.abs(aj)
            ok = ratios <= bound
            pick = idx[ok][np.argmax(np.abs(aj[ok]))]
            j = int(pick)
            t = max(abs(d[j]) / abs(sa[j]), 0.0)

            col = self._column(j)
            alpha = self.factor.ftran(col)
            if abs(alpha[r]) < 1e-11 or abs(alpha[r] - alpha_r[j]) > 1e-7 * (1 + abs(alpha[r])):
                if since_refactor == 0:
                    return "fallback"
                self.refactor()
                _, d = self._duals(2, None, None)
                since_refactor = 0
                continue
            # dual update; the leaving variable gets reduced cost -s*t
            leaving = self.basic[r]
            d -= s * t * alpha_r
            d[j] = 0.0
            d[leaving] = -s * t
            # primal update: move x_j so that the leaving basic hits its bound
            target = hi[r] if above else lo[r]
            step = (xb[r] - target) / alpha[r]
            self.x[j] += step
            self.x[self.basic] -= step * alpha
            self.x[leaving] = target
            self.status[leaving] = AT_UPPER if above else AT_LOWER
            self.basic[r] = j
            self.status[j] = BASIC
            self.factor.update(r, alpha)
            stall = stall + 1 if t <= 1e-12 else 0
            if stall > 5000:
                return "fallback"
            since_refactor += 1
            if since_refactor >= opts.refactor_every or (
                    since_refactor % 20 == 0 and self._drift() > opts.drift_tol):
                self.refactor()
                _, d = self._duals(2, None, None)
                if not self._make_dual_feasible(d):
                    return "fallback"
                since_refactor = 0
            if self._trace is not None:
                self._trace.write(f"{self.iterations} D {self.c[:n] @ self.x[:n]:.10g} "
                                  f"{float(viol[r]):.3e}\n")

    def run(self):
        opts = self.opts
        m, n = self.m, self.n
        max_iter = opts.max_iter or max(20000, 30 * (m + n))
        if self.bad_bounds:
            return "infeasible", None
        degenerate = 0
        bland = False
        since_refactor = 0
        while True:
            below, above = self._infeasibility()
            phase = 1 if (below.any() or above.any()) else 2
            y, d = self._duals(phase, below, above)
            j = self._choose_entering(d, bland)
            if j < 0:
                # confirm on a fresh factorisation before concluding
                if self.factor.etas:
                    self.refactor()
                    since_refactor = 0
                    continue
                if phase == 1:
                    return "infeasible", y
                return "optimal", None
            self.iterations += 1
            if self.iterations > max_iter:
                raise IterationLimitError(
                    f"simplex iteration limit {max_iter} reached (m={m}, n={n})")
            direction = 1.0 if d[j] < 0 else -1.0
            if self.status[j] == AT_ZERO:
                direction = 1.0 if d[j] < 0 else -1.0
            col = self._column(j)
            alpha = self.factor.ftran(col)
            theta, r, tgt = self._ratio_test(j, direction, alpha, phase, bland)
            if not np.isfinite(theta):
                if phase == 2:
                    return "unbounded", None
                raise NumericalError("unbounded ray in phase 1")
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= opts.bland_after:
                    bland = True
            else:
                degenerate = 0
                bland = False

            self.x[j] += direction * theta
            self.x[self.basic] -= direction * theta * alpha
            if r < 0:
                self.status[j] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[j] = self.ub[j] if direction > 0 else self.lb[j]
            else:
                leaving = self.basic[r]
                self.x[leaving] = tgt
                self.status[leaving] = AT_LOWER if tgt == self.lb[leaving] else AT_UPPER
                if abs(alpha[r]) < 1e-11:
                    raise NumericalError(f"pivot {alpha[r]:.3e} too small")
                self.basic[r] = j
                self.status[j] = BASIC
                self.factor.update(r, alpha)
                since_refactor += 1
                if since_refactor >= opts.refactor_every:
                    self.refactor()
                    since_refactor = 0
                elif since_refactor % 20 == 0 and self._drift() > opts.drift_tol:
                    self.refactor()
                    since_refactor = 0
            if self._trace is not None:
                inf = float(np.sum(np.maximum(self.lb - self.x, 0)) +
                            np.sum(np.maximum(self.x - self.ub, 0)))
                self._trace.write(f"{self.iterations} {phase} "
                                  f"{self.c[:n] @ self.x[:n]:.10g} {inf:.3e}\n")

    def solution(self, status, farkas):
        n = self.n
        if self._trace is not None:
            self._trace.close()
        basis = Basis(self.basic.copy(), self.status.copy())
        if status != "optimal":
            return LpSolution(status, self.x[:n].copy(), np.zeros(self.m),
                              np.zeros(n), np.nan, self.iterations, basis, farkas)
        below, above = self._infeasibility()
        y, d = self._duals(2, below, above)
        x = self.x[:n].copy()
        # snap nonbasic structurals exactly onto their bounds
        return LpSolution("optimal", x, y, d[:n], float(self.c[:n] @ x),
                          self.iterations, basis)


def solve_lp(program, lb=None, ub=None, basis=None, options=None):
    """Solve the LP relaxation of ``program``.

    ``lb``/``ub`` override the variable bounds (branch-and-bound uses this),
    ``basis`` warm-starts from a previous :class:`Basis`.  Binary flags on the
    program are ignored here.
    """
    opts = options or SimplexOptions()
    row_lo, row_hi = _row_bounds(program)
    lb = np.asarray(program.lb if lb is None else lb, dtype=float)
    ub = np.asarray(program.ub if ub is None else ub, dtype=float)
    if row_lo.size == 0:
        return _solve_bounds_only(np.asarray(program.c, dtype=float), lb, ub)
    s = _Simplex(program.A, program.c, lb, ub, row_lo, row_hi, opts)
    if s.bad_bounds:
        return s.solution("infeasible", None)
    s.start(basis)
    if opts.dual:
        # an "infeasible" verdict is confirmed by the primal phase 1 below,
        # which also produces the Farkas multipliers
        s.run_dual()
    status, farkas = s.run()
    return s.solution(status, farkas)


def _solve_bounds_only(c, lb, ub):
    n = c.size
    if np.any(lb > ub):
        return LpSolution("infeasible", np.zeros(n), np.zeros(0), np.zeros(n), np.nan)
    x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb,
                                                       np.where(np.isfinite(ub), ub, 0.0))))
    if not np.all(np.isfinite(x)):
        return LpSolution("unbounded", np.zeros(n), np.zeros(0), c.copy(), np.nan)
    return LpSolution("optimal", x, np.zeros(0), c.copy(), float(c @ x))


def lp_certificate(program, sol, lb=None, ub=None):
    """Primal/dual optimality measures of ``sol`` computed from scratch.

    Returns a dict with the maximum primal bound violation, maximum dual sign
    violation, the complementary-slackness residual scaled as
    ``|dual*slack| / (1+|rhs|)`` and the relative duality gap.
    """
    A = sp.csr_matrix(program.A)
    c = np.asarray(program.c, dtype=float)
    lb = np.asarray(program.lb if lb is None else lb, dtype=float)
    ub = np.asarray(program.ub if ub is None else ub, dtype=float)
    row_lo, row_hi = _row_bounds(program)
    x, y = sol.x, sol.duals
    act = A @ x
    primal = max(
        float(np.max(np.maximum(lb - x, 0), initial=0)),
        float(np.max(np.maximum(x - ub, 0), initial=0)),
        float(np.max(np.maximum(row_lo - act, 0), initial=0)),
        float(np.max(np.maximum(act - row_hi, 0), initial=0)),
    )
    d = c - A.T @ y

    def split(mult, lo, hi):
        pos = np.maximum(mult, 0.0)
        neg = np.minimum(mult, 0.0)
        # sign violations: positive multiplier needs a finite lower bound etc.
        viol = np.where(np.isfinite(lo), 0.0, pos) - np.where(np.isfinite(hi), 0.0, neg)
        val = (np.where(pos != 0, np.where(np.isfinite(lo), lo, 0.0) * pos, 0.0)
               + np.where(neg != 0, np.where(np.isfinite(hi), hi, 0.0) * neg, 0.0))
        return viol, val

    vr, valr = split(y, row_lo, row_hi)
    vc, valc = split(d, lb, ub)
    dual_viol = float(max(np.max(vr, initial=0.0), np.max(vc, initial=0.0)))
    dual_obj = float(valr.sum() + valc.sum())
    primal_obj = float(c @ x)
    gap = abs(primal_obj - dual_obj) / max(1.0, abs(primal_obj))

    def cs(mult, val, lo, hi):
        # slack to the bound the multiplier's sign refers to
        to_lo = np.where(np.isfinite(lo), val - lo, np.inf)
        to_hi = np.where(np.isfinite(hi), hi - val, np.inf)
        slack = np.where(mult > 0, to_lo, np.where(mult < 0, to_hi, 0.0))
        bound = np.where(mult > 0, lo, np.where(mult < 0, hi, 0.0))
        # a multiplier against an infinite bound is a sign violation, counted above
        prod = np.where((mult != 0) & np.isfinite(slack), np.abs(mult * slack), 0.0)
        return prod / (1.0 + np.abs(np.where(np.isfinite(bound), bound, 0.0)))

    cs_rows = cs(y, act, row_lo, row_hi)
    cs_cols = cs(d, x, lb, ub)
    return {
        "primal_infeasibility": primal,
        "dual_infeasibility": dual_viol,
        "complementary_slackness": float(max(np.max(cs_rows, initial=0.0),
                                             np.max(cs_cols, initial=0.0))),
        "duality_gap": gap,
        "primal_objective": primal_obj,
        "dual_objective": dual_obj,
    }
