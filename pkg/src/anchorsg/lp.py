"""Dense two-phase primal simplex and a depth-first branch-and-bound layer.

Small, deterministic, and self-contained on purpose: the sequence-form
models built elsewhere are desk-scale, and a dense tableau keeps the pivot
arithmetic auditable. Variables carry general [lo, hi] bounds (either side
may be infinite); rows are <=, = or >=.

Anti-cycling: entering columns follow Dantzig's rule while the objective
moves, and fall back to Bland's rule (lowest eligible index) whenever a run
of degenerate pivots is detected, which restores the termination guarantee.
Identical inputs always produce the identical pivot sequence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-7
INT_TOL = 1e-6
_STALL_LIMIT = 40


class NumericalBreakdown(RuntimeError):
    """No acceptable pivot left; the instance likely needs rescaling."""


class ResourceLimit(RuntimeError):
    """A configured time or node budget was exhausted."""


class EnumerationCapExceeded(RuntimeError):
    """A strategy enumeration would exceed its configured cap."""


class LinearProgram:
    """max c.x subject to rows and per-variable bounds."""

    def __init__(self, n: int):
        self.n = n
        self.c = np.zeros(n)
        self.lo = np.zeros(n)
        self.hi = np.full(n, np.inf)
        self.rows: list[tuple[dict[int, float], str, float]] = []

    def set_objective(self, coeffs: dict[int, float]) -> None:
        for j, v in coeffs.items():
            self.c[j] = v

    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        self.lo[j] = lo
        self.hi[j] = hi

    def add_constraint(self, coeffs: dict[int, float], rel: str, rhs: float) -> None:
        if rel not in ("<=", "=", ">="):
            raise ValueError(f"relation must be <=, = or >=, got {rel!r}")
        self.rows.append((dict(coeffs), rel, float(rhs)))


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    objective: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0
    # filled by solve_milp
    lp_solves: int = 0
    nodes: int = 0


@dataclass
class MilpModel:
    lp: LinearProgram
    binaries: list[int] = field(default_factory=list)


def lp_to_text(lp: LinearProgram) -> str:
    """Readable dump of a model, one constraint per line."""

    def term(j: int, v: float) -> str:
        return f"{v:+.12g} x{j}"

    lines = ["max: " + " ".join(term(j, v) for j, v in enumerate(lp.c) if v != 0.0)]
    for coeffs, rel, rhs in lp.rows:
        body = " ".join(term(j, coeffs[j]) for j in sorted(coeffs) if coeffs[j] != 0.0)
        lines.append(f"{body or '0'} {rel} {rhs:.12g}")
    for j in range(lp.n):
        lines.append(f"bounds: {lp.lo[j]:.12g} <= x{j} <= {lp.hi[j]:.12g}")
    return "\n".join(lines) + "\n"


def _row_structure(lp: LinearProgram):
    """Flat row arrays for presolve, cached until rows are appended."""
    cached = getattr(lp, "_structure", None)
    if cached is not None and cached[0] == len(lp.rows):
        return cached[1]
    vals: list[float] = []
    cols: list[int] = []
    ptr = [0]
    rels: list[int] = []
    rhs: list[float] = []
    empty_ok = True
    for coeffs, rel, r in lp.rows:
        items = [(j, v) for j, v in coeffs.items() if v != 0.0]
        if not items:  # constant row: check once, never enters the tableau
            if (
                (rel == "<=" and 0.0 > r + FEAS_TOL)
                or (rel == ">=" and 0.0 < r - FEAS_TOL)
                or (rel == "=" and abs(r) > FEAS_TOL)
            ):
                empty_ok = False
        for j, v in items:
            cols.append(j)
            vals.append(v)
        ptr.append(len(cols))
        rels.append({"<=": 0, "=": 1, ">=": 2}[rel])
        rhs.append(r)
    data = (
        np.asarray(vals, dtype=float),
        np.asarray(cols, dtype=np.int64),
        np.asarray(ptr, dtype=np.int64),
        np.asarray(rels, dtype=np.int8),
        np.asarray(rhs, dtype=float),
        empty_ok,
    )
    lp._structure = (len(lp.rows), data)
    return data


def _presolve(lp: LinearProgram, lo: np.ndarray, hi: np.ndarray):
    """Interval bound propagation before the simplex runs.

    Fixes variables forced by the bounds, drops rows made redundant, and
    reports infeasibility early; branch-and-bound nodes shrink drastically
    once a few binaries are pinned. A tightened bound that would introduce
    a NEW finite bound on an unbounded variable is only accepted when it
    fixes the variable, so no fresh bound rows appear in the tableau.
    Returns (lo, hi, keep) or None when infeasible.
    """
    vals, cols, ptr, rels, rhs, empty_ok = _row_structure(lp)
    if not empty_ok:
        return None
    nrows = len(rhs)
    keep = np.ones(nrows, dtype=bool)
    if nrows == 0:
        return lo, hi, keep
    lo = lo.copy()
    hi = hi.copy()
    allow_lo = np.isfinite(lo)
    allow_hi = np.isfinite(hi)
    pos = vals > 0
    starts = ptr[:-1]
    rix = np.repeat(np.arange(nrows), np.diff(ptr))
    empties = np.diff(ptr) == 0  # constant rows already vetted above
    keep[empties] = False

    for _ in range(40):
        lo_t = np.where(pos, lo[cols], hi[cols]) * vals  # per-term minimum
        hi_t = np.where(pos, hi[cols], lo[cols]) * vals
        lo_fin = np.isfinite(lo_t)
        hi_fin = np.isfinite(hi_t)
        lo_sum = np.add.reduceat(np.where(lo_fin, lo_t, 0.0), starts)
        hi_sum = np.add.reduceat(np.where(hi_fin, hi_t, 0.0), starts)
        lo_inf = np.add.reduceat((~lo_fin).astype(np.int64), starts)
        hi_inf = np.add.reduceat((~hi_fin).astype(np.int64), starts)
        lo_sum[empties] = 0.0
        hi_sum[empties] = 0.0
        lo_inf[empties] = 0
        hi_inf[empties] = 0

        le = keep & (rels <= 1)
        ge = keep & (rels >= 1)
        if (le & (lo_inf == 0) & (lo_sum > rhs + FEAS_TOL)).any():
            return None
        if (ge & (hi_inf == 0) & (hi_sum < rhs - FEAS_TOL)).any():
            return None
        drop = (rels == 0) & keep & (hi_inf == 0) & (hi_sum <= rhs + 1e-12)
        drop |= (rels == 2) & keep & (lo_inf == 0) & (lo_sum >= rhs - 1e-12)
        drop |= (
            (rels == 1)
            & keep
            & (lo_inf == 0)
            & (hi_inf == 0)
            & (hi_sum - lo_sum <= 1e-12)
            & (np.abs(lo_sum - rhs) <= FEAS_TOL)
        )

        live = keep[rix] & ~drop[rix]
        others_lo = lo_sum[rix] - np.where(lo_fin, lo_t, 0.0)
        others_hi = hi_sum[rix] - np.where(hi_fin, hi_t, 0.0)
        others_lo_ok = (lo_inf[rix] - (~lo_fin)) == 0
        others_hi_ok = (hi_inf[rix] - (~hi_fin)) == 0
        le_t = live & (rels[rix] <= 1) & others_lo_ok
        ge_t = live & (rels[rix] >= 1) & others_hi_ok
        b1 = np.where(le_t, (rhs[rix] - others_lo) / vals, 0.0)
        b2 = np.where(ge_t, (rhs[rix] - others_hi) / vals, 0.0)
        cand_hi = np.where(le_t & pos, b1, np.inf)
        cand_lo = np.where(le_t & ~pos, b1, -np.inf)
        cand_lo = np.maximum(cand_lo, np.where(ge_t & pos, b2, -np.inf))
        cand_hi = np.minimum(cand_hi, np.where(ge_t & ~pos, b2, np.inf))
        tight_hi = hi.copy()
        np.minimum.at(tight_hi, cols, cand_hi)
        tight_lo = lo.copy()
        np.maximum.at(tight_lo, cols, cand_lo)
        new_hi = np.where(allow_hi | (tight_hi - lo <= 1e-12), tight_hi, hi)
        new_lo = np.where(allow_lo | (hi - tight_lo <= 1e-12), tight_lo, lo)
        if (new_lo > new_hi + 1e-9).any():
            return None
        changed = bool(drop.any())
        changed = changed or bool((new_hi < hi - 1e-12).any())
        changed = changed or bool((new_lo > lo + 1e-12).any())
        keep &= ~drop
        lo, hi = new_lo, new_hi
        if not changed:
            break
    return lo, hi, keep


class _Tableau:
    """Standard-form tableau with phase-1/phase-2 objective rows attached."""

    def __init__(
        self,
        lp: LinearProgram,
        lo: np.ndarray,
        hi: np.ndarray,
        keep: np.ndarray | None = None,
    ):
        self.lp = lp
        n = lp.n
        self.fixed = {}
        cols: list[tuple[str, int]] = []  # (kind, var) kinds: shift/mirror/neg
        col_of: dict[int, int] = {}
        extra_rows: list[tuple[dict[int, float], str, float]] = []
        for j in range(n):
            l, h = lo[j], hi[j]
            if h < l - 1e-9:
                self.infeasible_bounds = True
            if math.isfinite(l) and math.isfinite(h) and h - l <= 1e-12:
                self.fixed[j] = l
                continue
            if math.isfinite(l):
                col_of[j] = len(cols)
                cols.append(("shift", j))
                if math.isfinite(h):
                    extra_rows.append(({j: 1.0}, "<=", h))
            elif math.isfinite(h):
                col_of[j] = len(cols)
                cols.append(("mirror", j))
            else:
                col_of[j] = len(cols)
                cols.append(("shift", j))  # lo treated as 0 below
                cols.append(("neg", j))
        self.infeasible_bounds = getattr(self, "infeasible_bounds", False)
        self.cols = cols
        self.col_of = col_of
        self.lo = lo
        self.hi = hi

        if keep is None:
            rows = list(lp.rows) + extra_rows
        else:
            rows = [r for r, k in zip(lp.rows, keep) if k] + extra_rows
        m = len(rows)
        ncol = len(cols)
        A = np.zeros((m, ncol))
        b = np.zeros(m)
        rels: list[str] = []
        for i, (coeffs, rel, rhs) in enumerate(rows):
            r = rhs
            for j, v in coeffs.items():
                if v == 0.0:
                    continue
                if j in self.fixed:
                    r -= v * self.fixed[j]
                    continue
                k = col_of[j]
                kind = cols[k][0]
                if kind == "shift":
                    base = lo[j] if math.isfinite(lo[j]) else 0.0
                    A[i, k] += v
                    if math.isfinite(lo[j]):
                        r -= v * base
                    if not math.isfinite(lo[j]):  # free var: paired neg column
                        A[i, k + 1] -= v
                elif kind == "mirror":
                    A[i, k] -= v
                    r -= v * hi[j]
            if r < 0:
                A[i] = -A[i]
                r = -r
                rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
            b[i] = r
            rels.append(rel)

        c_std = np.zeros(ncol)
        for k, (kind, j) in enumerate(cols):
            v = lp.c[j]
            if kind == "shift":
                c_std[k] = v
            elif kind == "mirror":
                c_std[k] = -v
            else:  # neg half of a free variable
                c_std[k] = -v
        self.obj_shift = sum(lp.c[j] * val for j, val in self.fixed.items())
        self.obj_shift += sum(
            lp.c[j] * lo[j]
            for kind, j in cols
            if kind == "shift" and math.isfinite(lo[j])
        )
        self.obj_shift += sum(lp.c[j] * hi[j] for kind, j in cols if kind == "mirror")
        self.A, self.b, self.rels, self.c_std = A, b, rels, c_std

    def recover(self, y: np.ndarray) -> np.ndarray:
        x = np.zeros(self.lp.n)
        for j, val in self.fixed.items():
            x[j] = val
        for k, (kind, j) in enumerate(self.cols):
            if kind == "shift":
                base = self.lo[j] if math.isfinite(self.lo[j]) else 0.0
                x[j] += base + y[k]
            elif kind == "mirror":
                x[j] = self.hi[j] - y[k]
            else:
                x[j] -= y[k]
        return x


def _pivot(tab: np.ndarray, basis: np.ndarray, i: int, j: int) -> None:
    piv = tab[i, j]
    if abs(piv) <= PIVOT_TOL:
        raise NumericalBreakdown(f"pivot magnitude {abs(piv):.2e} below tolerance")
    tab[i] /= piv
    col = tab[:, j].copy()
    col[i] = 0.0
    tab -= np.outer(col, tab[i])
    basis[i] = j


def _run_simplex(
    tab: np.ndarray,
    basis: np.ndarray,
    obj_row: int,
    m: int,
    allowed: np.ndarray,
    iter_box: list[int],
    max_iter: int,
) -> str:
    """Drive obj_row to optimality. Returns 'optimal' or 'unbounded'."""
    stall = 0
    bland = False
    last = tab[obj_row, -1]
    while True:
        red = tab[obj_row, :-1]
        elig = np.flatnonzero(allowed & (red < -1e-9))
        if elig.size == 0:
            return "optimal"
        if iter_box[0] >= max_iter:
            raise NumericalBreakdown("simplex iteration limit reached")
        if bland:
            j = int(elig[0])
        else:
            j = int(elig[np.argmin(red[elig])])
        col = tab[:m, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            if (col > 0).any():
                raise NumericalBreakdown(
                    "pivot candidates all below tolerance; rescale the model"
                )
            return "unbounded"
        ratios = tab[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[np.flatnonzero(ratios <= best + 1e-12)]
        i = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, i, j)
        iter_box[0] += 1
        if tab[obj_row, -1] > last + 1e-12:
            last = tab[obj_row, -1]
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True


def solve_lp(
    lp: LinearProgram,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
) -> LpSolution:
    """Two-phase primal simplex. Optional bound overrides for reuse in B&B."""
    lo = lp.lo if lo is None else lo
    hi = lp.hi if hi is None else hi
    if (hi < lo - 1e-9).any():
        return LpSolution("infeasible")
    pre = _presolve(lp, lo, hi)
    if pre is None:
        return LpSolution("infeasible")
    lo, hi, keep = pre
    t = _Tableau(lp, lo, hi, keep)
    if t.infeasible_bounds:
        return LpSolution("infeasible")
    m, ncol = t.A.shape

    slack_cols = sum(1 for r in t.rels if r in ("<=", ">="))
    nart = sum(1 for r in t.rels if r in ("=", ">="))
    width = ncol + slack_cols + nart
    tab = np.zeros((m + 2, width + 1))
    tab[:m, :ncol] = t.A
    tab[:m, -1] = t.b
    basis = np.full(m, -1, dtype=np.int64)
    sk = ncol
    ak = ncol + slack_cols
    art_cols = []
    for i, rel in enumerate(t.rels):
        if rel == "<=":
            tab[i, sk] = 1.0
            basis[i] = sk
            sk += 1
        elif rel == ">=":
            tab[i, sk] = -1.0
            sk += 1
            tab[i, ak] = 1.0
            basis[i] = ak
            art_cols.append(ak)
            ak += 1
        else:
            tab[i, ak] = 1.0
            basis[i] = ak
            art_cols.append(ak)
            ak += 1

    c2 = np.zeros(width)
    c2[:ncol] = t.c_std
    # objective rows hold z - c; optimal when no entry is negative
    cb2 = c2[basis]
    tab[m, :-1] = cb2 @ tab[:m, :-1] - c2
    tab[m, -1] = cb2 @ tab[:m, -1]
    iters = [0]
    max_iter = 2000 + 60 * (m + width)
    allowed = np.ones(width, dtype=bool)
    for j in art_cols:
        allowed[j] = False

    if art_cols:
        c1 = np.zeros(width)
        for j in art_cols:
            c1[j] = -1.0
        cb1 = c1[basis]
        tab[m + 1, :-1] = cb1 @ tab[:m, :-1] - c1
        tab[m + 1, -1] = cb1 @ tab[:m, -1]
        status = _run_simplex(tab, basis, m + 1, m, allowed, iters, max_iter)
        if status != "optimal":
            raise NumericalBreakdown("phase-1 subproblem reported unbounded")
        if tab[m + 1, -1] < -FEAS_TOL:
            return LpSolution("infeasible", iterations=iters[0])
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                row = tab[i, :-1]
                cand = np.flatnonzero(allowed & (np.abs(row) > 1e-9))
                if cand.size:
                    _pivot(tab, basis, i, int(cand[0]))
                    iters[0] += 1
                # else: redundant row, artificial stays basic at zero

    status = _run_simplex(tab, basis, m, m, allowed, iters, max_iter)
    if status == "unbounded":
        return LpSolution("unbounded", iterations=iters[0])
    y = np.zeros(width)
    y[basis] = tab[:m, -1]
    x = t.recover(y[:ncol])
    # snap bound dust so downstream flow checks stay clean
    x = np.minimum(np.maximum(x, np.where(np.isfinite(lo), lo, x)), np.where(np.isfinite(hi), hi, x))
    return LpSolution("optimal", float(lp.c @ x), x, iterations=iters[0])


def solve_milp(
    model: MilpModel,
    deadline: float | None = None,
    node_cap: int | None = None,
) -> LpSolution:
    """Depth-first branch and bound over the model's binary variables.

    Relaxations bound the search; the most fractional binary is branched
    (ties to the lowest index) and the nearer side is explored first.
    """
    lp = model.lp
    bins = sorted(set(model.binaries))
    best_obj = -math.inf
    best_x: np.ndarray | None = None
    lp_solves = 0
    nodes = 0
    root_unbounded = False

    stack: list[tuple[np.ndarray, np.ndarray]] = [(lp.lo.copy(), lp.hi.copy())]
    while stack:
        lo, hi = stack.pop()
        if deadline is not None and time.monotonic() > deadline:
            raise ResourceLimit("time budget exhausted during branch and bound")
        if node_cap is not None and nodes >= node_cap:
            raise ResourceLimit(f"node cap of {node_cap} reached")
        nodes += 1
        sol = solve_lp(lp, lo, hi)
        lp_solves += 1
        if sol.status == "infeasible":
            continue
        if sol.status == "unbounded":
            if nodes == 1:
                root_unbounded = True
                break
            continue
        if sol.objective <= best_obj + 1e-10:
            continue
        frac = [(min(sol.x[j] - math.floor(sol.x[j]), math.ceil(sol.x[j]) - sol.x[j]), j) for j in bins]
        frac = [(f, j) for f, j in frac if f > INT_TOL]
        if not frac:
            best_obj = sol.objective
            best_x = sol.x
            continue
        fmax = max(f for f, _ in frac)
        j = min(j for f, j in frac if f >= fmax - 1e-12)
        xj = sol.x[j]
        lo0, hi0 = lo.copy(), hi.copy()
        hi0[j] = 0.0
        lo1, hi1 = lo.copy(), hi.copy()
        lo1[j] = 1.0
        near_zero = xj < 0.5
        if near_zero:
            stack.append((lo1, hi1))
            stack.append((lo0, hi0))
        else:
            stack.append((lo0, hi0))
            stack.append((lo1, hi1))

    if root_unbounded:
        return LpSolution("unbounded", lp_solves=lp_solves, nodes=nodes)
    if best_x is None:
        return LpSolution("infeasible", lp_solves=lp_solves, nodes=nodes)
    return LpSolution(
        "optimal", best_obj, best_x, lp_solves=lp_solves, nodes=nodes
    )
