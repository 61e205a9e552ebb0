"""Sparse mixed-integer program with a directory of named variables and rows."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

# coordinate letters used when printing keys, per variable kind / row tag
COORDS = {
    # first stage
    "Ps": "it", "p": "itm", "Ws": "t", "Ls": "jt", "RUg": "it", "RDg": "it",
    "RNSg": "it", "RUl": "jt", "RDl": "jt", "CSU": "it", "u": "it",
    # second stage
    "PG": "itw", "r": "itmw", "rUl": "jtw", "rDl": "jtw", "Lshed": "jtw",
    "Lc": "jtw", "f": "ltw", "delta": "ntw", "v": "itw", "C": "itw",
    # rows
    "MKT": "t", "GMIN": "it", "GMAX": "it", "BLK": "it", "RUCAP": "it",
    "RDCAP": "it", "RNSCAP": "it", "SU": "it",
    "BAL": "ntw", "FLOW": "ltw", "PGMIN": "itw", "PGMAX": "itw",
    "DEPLOY": "itw", "DEPUP": "itw", "DEPDN": "itw", "BLKLO": "itmw", "BLKHI": "itmw",
    "VGATE": "itw", "SUW": "itw", "LCON": "jtw", "LRUP": "jtw", "LRDN": "jtw",
    "SHED": "jtw",
}

SENSES = ("<=", "==", ">=")


def format_name(kind, key):
    letters = COORDS.get(kind, "k" * len(key))
    return "_".join([kind] + [f"{c}{v}" for c, v in zip(letters, key)])


@dataclass(frozen=True)
class Variable:
    kind: str
    key: tuple
    lb: float
    ub: float
    is_binary: bool
    obj: float
    component: int  # objective component 1..9, 0 when not priced

    @property
    def name(self):
        return format_name(self.kind, self.key)


@dataclass(frozen=True)
class Row:
    tag: str
    key: tuple
    sense: str
    rhs: float

    @property
    def name(self):
        return format_name(self.tag, self.key)


class MarketProgram:
    """Minimisation program ``min c x  s.t.  row_lo <= A x <= row_hi, lb <= x <= ub``.

    Variables and rows are added through :meth:`add_var` / :meth:`add_row`
    and addressed afterwards through ``var(kind, *key)`` / ``row(tag, *key)``.
    Call :meth:`finalize` once all rows are in.
    """

    def __init__(self, name="market"):
        self.name = name
        self.variables = []
        self.rows = []
        self._vidx = {}
        self._ridx = {}
        self._entries = ([], [], [])
        self.A = None
        self.meta = {}

    # ------------------------------------------------------------- building
    def add_var(self, kind, key, lb=0.0, ub=np.inf, obj=0.0, binary=False, component=0):
        k = (kind, tuple(key))
        if k in self._vidx:
            raise KeyError(f"duplicate variable {format_name(*k)}")
        self._vidx[k] = len(self.variables)
        self.variables.append(Variable(kind, k[1], float(lb), float(ub), bool(binary),
                                       float(obj), int(component)))
        return self._vidx[k]

    def add_row(self, tag, key, coeffs, sense, rhs=0.0):
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        k = (tag, tuple(key))
        if k in self._ridx:
            raise KeyError(f"duplicate row {format_name(*k)}")
        i = len(self.rows)
        self._ridx[k] = i
        self.rows.append(Row(tag, k[1], sense, float(rhs)))
        ri, ci, vv = self._entries
        nvar = len(self.variables)
        for j, a in coeffs:
            if not 0 <= j < nvar:
                raise IndexError(f"row {format_name(*k)} references unknown column {j}")
            if a != 0:
                ri.append(i)
                ci.append(j)
                vv.append(float(a))
        return i

    def finalize(self):
        ri, ci, vv = self._entries
        m, n = len(self.rows), len(self.variables)
        # duplicates within a row are summed by the COO -> CSC conversion
        self.A = sp.csc_matrix((vv, (ri, ci)), shape=(m, n))
        self.A.sum_duplicates()
        self.c = np.array([v.obj for v in self.variables])
        self.lb = np.array([v.lb for v in self.variables])
        self.ub = np.array([v.ub for v in self.variables])
        self.is_binary = np.array([v.is_binary for v in self.variables], dtype=bool)
        self.component = np.array([v.component for v in self.variables], dtype=int)
        rhs = np.array([r.rhs for r in self.rows])
        sense = np.array([r.sense for r in self.rows])
        self.row_lo = np.where(sense == "<=", -np.inf, rhs)
        self.row_hi = np.where(sense == ">=", np.inf, rhs)
        return self

    # ------------------------------------------------------------ directory
    @property
    def n_vars(self):
        return len(self.variables)

    @property
    def n_rows(self):
        return len(self.rows)

    def var(self, kind, *key):
        return self._vidx[(kind, tuple(key))]

    def row(self, tag, *key):
        return self._ridx[(tag, tuple(key))]

    def has_var(self, kind, *key):
        return (kind, tuple(key)) in self._vidx

    def has_row(self, tag, *key):
        return (tag, tuple(key)) in self._ridx

    def var_kinds(self):
        return sorted({v.kind for v in self.variables})

    def row_tags(self):
        return sorted({r.tag for r in self.rows})

    def vars_of(self, kind):
        return {v.key: j for j, v in enumerate(self.variables) if v.kind == kind}

    def rows_of(self, tag):
        return {r.key: i for i, r in enumerate(self.rows) if r.tag == tag}

    def balance_row(self, bus, t, w):
        try:
            return self._ridx[("BAL", (bus, t, w))]
        except KeyError:
            raise KeyError(f"no nodal balance row for bus {bus}, t={t}, w={w}") from None

    @property
    def binary_columns(self):
        return np.flatnonzero(self.is_binary)

    def counts(self):
        out = {"variables": self.n_vars, "rows": self.n_rows,
               "binaries": int(self.is_binary.sum()), "nonzeros": int(self.A.nnz)}
        for v in self.variables:
            out["var:" + v.kind] = out.get("var:" + v.kind, 0) + 1
        for r in self.rows:
            out["row:" + r.tag] = out.get("row:" + r.tag, 0) + 1
        return out

    # -------------------------------------------------------------- helpers
    def fix_binaries(self, assignment):
        """Copy of the program with binaries fixed (bounds lb = ub = value)."""
        other = object.__new__(MarketProgram)
        other.__dict__.update(self.__dict__)
        other.lb = self.lb.copy()
        other.ub = self.ub.copy()
        for j, val in assignment.items():
            other.lb[j] = other.ub[j] = float(val)
        return other

    def objective_components(self, x):
        """Objective contribution per component number (1..9)."""
        x = np.asarray(x, dtype=float)
        contrib = self.c * x
        return {k: float(contrib[self.component == k].sum()) for k in range(1, 10)}

    def row_activity(self, x):
        return self.A @ np.asarray(x, dtype=float)

    def max_violation(self, x, tol=0.0):
        ax = self.row_activity(x)
        rv = np.maximum(self.row_lo - ax, ax - self.row_hi)
        bv = np.maximum(self.lb - x, x - self.ub)
        return float(max(rv.max(initial=0.0), bv.max(initial=0.0)))


# ---------------------------------------------------------------------- MPS

def _num(v):
    return repr(float(v)) if v != int(v) or abs(v) >= 1e15 else str(int(v))


def export_mps(program, path, lb=None, ub=None):
    """Write ``program`` as MPS.

    Layout follows the fixed-format section order and field positions, but
    names are longer than eight characters, so readers must be run in free
    format.  Columns appear in program order (first-stage variables, then one
    block per scenario); binaries are wrapped in INTORG/INTEND markers and
    carry explicit bounds.
    """
    lb = program.lb if lb is None else np.asarray(lb, dtype=float)
    ub = program.ub if ub is None else np.asarray(ub, dtype=float)
    A = program.A.tocsc()
    rnames = [r.name for r in program.rows]
    lines = [f"NAME          {program.name}", "ROWS", " N  COST"]
    code = {"<=": "L", "==": "E", ">=": "G"}
    for r, nm in zip(program.rows, rnames):
        lines.append(f" {code[r.sense]}  {nm}")
    lines.append("COLUMNS")
    in_int = False
    for j, v in enumerate(program.variables):
        if v.is_binary != in_int:
            tag = "'INTORG'" if v.is_binary else "'INTEND'"
            lines.append(f"    MARKER    'MARKER'    {tag}")
            in_int = v.is_binary
        nm = v.name
        entries = []
        if v.obj != 0:
            entries.append(("COST", v.obj))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for i, a in zip(A.indices[lo:hi], A.data[lo:hi]):
            entries.append((rnames[i], a))
        if not entries:
            entries.append(("COST", 0.0))
        for rn, a in entries:
            lines.append(f"    {nm:<12s}  {rn:<12s}  {_num(a)}")
    if in_int:
        lines.append("    MARKER    'MARKER'    'INTEND'")
    lines.append("RHS")
    for r, nm in zip(program.rows, rnames):
        if r.rhs != 0:
            lines.append(f"    RHS       {nm:<12s}  {_num(r.rhs)}")
    lines.append("BOUNDS")
    for j, v in enumerate(program.variables):
        nm = v.name
        lo_, hi_ = lb[j], ub[j]
        if lo_ == hi_:
            lines.append(f" FX BND       {nm:<12s}  {_num(lo_)}")
            continue
        if np.isinf(lo_) and np.isinf(hi_):
            lines.append(f" FR BND       {nm}")
            continue
        if np.isinf(lo_):
            lines.append(f" MI BND       {nm}")
        elif lo_ != 0 or v.is_binary:
            lines.append(f" LO BND       {nm:<12s}  {_num(lo_)}")
        if np.isinf(hi_):
            if v.is_binary:
                lines.append(f" PL BND       {nm}")
        else:
            lines.append(f" UP BND       {nm:<12s}  {_num(hi_)}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
