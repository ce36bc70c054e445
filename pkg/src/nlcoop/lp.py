"""Linear programs: representation, solvers and solution checking.

Two back ends sit behind :func:`solve_lp`: a dense revised simplex with
Bland's rule (exact pivoting logic, meant for small problems and
cross-checks) and HiGHS through :func:`scipy.optimize.linprog` for the
hundreds-to-thousands-of-columns problems the optimizer produces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

LE, EQ, GE = "<=", "=", ">="
OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"
DEFAULT_TOL = 1e-9


class SolverError(RuntimeError):
    """Numerical breakdown or an answer that fails its own feasibility check."""


class LinearProgram:
    """maximize c.x  s.t.  rows (<=, =, >=), lb <= x <= ub."""

    def __init__(self):
        self.names: List[str] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.c: List[float] = []
        self.row_idx: List[np.ndarray] = []
        self.row_val: List[np.ndarray] = []
        self.rel: List[str] = []
        self.rhs: List[float] = []
        self.row_names: List[str] = []
        self._by_name: Dict[str, int] = {}

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, obj: float = 0.0) -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable {name!r}")
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb > ub")
        self._by_name[name] = len(self.names)
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.c.append(float(obj))
        return len(self.names) - 1

    def var(self, name: str) -> int:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def add_constraint(self, coeffs: Dict[int, float], rel: str, rhs: float, name: str = "") -> int:
        if rel not in (LE, EQ, GE):
            raise ValueError(f"bad relation {rel!r}")
        if not math.isfinite(rhs):
            raise ValueError("constraint rhs must be finite")
        idx = np.fromiter(coeffs.keys(), dtype=np.int64, count=len(coeffs))
        val = np.fromiter(coeffs.values(), dtype=float, count=len(coeffs))
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_vars):
            raise ValueError(f"constraint {name!r} references an undeclared variable")
        self.row_idx.append(idx)
        self.row_val.append(val)
        self.rel.append(rel)
        self.rhs.append(float(rhs))
        self.row_names.append(name)
        return len(self.rhs) - 1

    def matrix(self) -> sparse.csr_matrix:
        indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(i) for i in self.row_idx])
        idx = np.concatenate(self.row_idx) if self.row_idx else np.zeros(0, dtype=np.int64)
        val = np.concatenate(self.row_val) if self.row_val else np.zeros(0)
        return sparse.csr_matrix((val, idx, indptr), shape=(self.n_rows, self.n_vars))

    def write(self, fh: TextIO) -> None:
        """Plain-text dump: objective, one constraint per line, then bounds."""
        fh.write("maximize\n  " + " ".join(
            f"{v:+.17g} {n}" for n, v in zip(self.names, self.c) if v) + "\n")
        fh.write("subject to\n")
        for name, idx, val, rel, rhs in zip(self.row_names, self.row_idx, self.row_val, self.rel, self.rhs):
            terms = " ".join(f"{v:+.17g} {self.names[i]}" for i, v in zip(idx, val))
            fh.write(f"  {name or '_'}: {terms} {rel} {rhs:.17g}\n")
        fh.write("bounds\n")
        for n, lo, hi in zip(self.names, self.lb, self.ub):
            fh.write(f"  {lo:.17g} <= {n} <= {hi:.17g}\n")
        fh.write("end\n")


def read_lp(fh: TextIO) -> LinearProgram:
    """Parse the text written by :meth:`LinearProgram.write`."""
    lines = [ln.rstrip("\n") for ln in fh]
    try:
        i_st = lines.index("subject to")
        i_bd = lines.index("bounds")
    except ValueError as exc:
        raise ValueError("not an LP dump: missing section header") from exc
    lp = LinearProgram()
    for ln in lines[i_bd + 1:]:
        if ln == "end":
            break
        lo, name, hi = ln.split(" <= ")
        lp.add_var(name.strip(), float(lo), float(hi))
    obj = lines[1].split()
    for k in range(0, len(obj), 2):
        lp.c[lp.var(obj[k + 1])] = float(obj[k])
    for ln in lines[i_st + 1:i_bd]:
        name, rest = ln.strip().split(": ", 1)
        toks = rest.split()
        rel, rhs = toks[-2], float(toks[-1])
        coeffs = {lp.var(toks[k + 1]): float(toks[k]) for k in range(0, len(toks) - 2, 2)}
        lp.add_constraint(coeffs, rel, rhs, "" if name == "_" else name)
    return lp


@dataclass
class LpSolution:
    status: str
    objective: float
    x: Optional[np.ndarray]
    iterations: int = 0

    def value(self, lp: LinearProgram, name: str) -> float:
        return float(self.x[lp.var(name)])


def verify_solution(lp: LinearProgram, x: Sequence[float], tolerance: float = DEFAULT_TOL) -> bool:
    """Bounds and constraints hold up to ``tolerance`` relative to row magnitude."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n_vars,) or not np.all(np.isfinite(x)):
        return False
    lb, ub = np.asarray(lp.lb), np.asarray(lp.ub)
    if np.any(x < lb - tolerance * (1 + np.abs(lb))):
        return False
    fin = np.isfinite(ub)
    if np.any(x[fin] > ub[fin] + tolerance * (1 + np.abs(ub[fin]))):
        return False
    for idx, val, rel, rhs in zip(lp.row_idx, lp.row_val, lp.rel, lp.rhs):
        terms = val * x[idx]
        lhs = terms.sum()
        slack = tolerance * (1 + max(abs(rhs), np.abs(terms).sum()))
        if rel == LE and lhs > rhs + slack:
            return False
        if rel == GE and lhs < rhs - slack:
            return False
        if rel == EQ and abs(lhs - rhs) > slack:
            return False
    return True


def solve_lp(lp: LinearProgram, tolerance: float = DEFAULT_TOL, method: str = "highs") -> LpSolution:
    if method == "highs":
        sol = _solve_highs(lp, tolerance)
    elif method == "simplex":
        sol = revised_simplex(lp, tolerance)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.status == OPTIMAL and not verify_solution(lp, sol.x, max(tolerance, 1e-9)):
        raise SolverError("solver returned a point that fails the feasibility replay")
    return sol


def _solve_highs(lp: LinearProgram, tol: float) -> LpSolution:
    if lp.n_vars == 0:
        ok = all((r == LE and 0 <= b) or (r == GE and 0 >= b) or (r == EQ and b == 0)
                 for r, b in zip(lp.rel, lp.rhs))
        return LpSolution(OPTIMAL if ok else INFEASIBLE, 0.0 if ok else math.nan,
                          np.zeros(0) if ok else None)
    a = lp.matrix()
    rel = np.asarray(lp.rel)
    rhs = np.asarray(lp.rhs)
    le = rel == LE
    ge = rel == GE
    eq = rel == EQ
    a_ub = sparse.vstack([a[le], -a[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if a_ub is not None else None
    a_eq = a[eq] if eq.any() else None
    b_eq = rhs[eq] if eq.any() else None
    bounds = np.column_stack([lp.lb, lp.ub])
    bounds[np.isinf(bounds)] = np.nan  # linprog: None/nan means unbounded side
    bounds = [(None if np.isnan(lo) else lo, None if np.isnan(hi) else hi) for lo, hi in bounds]
    t = max(tol, 1e-10)
    res = linprog(-np.asarray(lp.c), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": t,
                                           "dual_feasibility_tolerance": t, "presolve": True})
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LpSolution(OPTIMAL, float(np.dot(lp.c, x)), x, int(getattr(res, "nit", 0)))
    if res.status == 2:
        return LpSolution(INFEASIBLE, math.nan, None)
    if res.status == 3:
        return LpSolution(UNBOUNDED, math.inf, None)
    raise SolverError(f"HiGHS failed: {res.message}")


# ---------------------------------------------------------------------------
# dense revised simplex

def _standard_form(lp: LinearProgram):
    """Rewrite as max c.y s.t. A y = b, y >= 0 with b >= 0.

    Returns the data plus a map back to the original variables.
    """
    n = lp.n_vars
    lb, ub = np.asarray(lp.lb, float), np.asarray(lp.ub, float)
    a = lp.matrix().toarray() if lp.n_rows else np.zeros((0, n))
    rel = list(lp.rel)
    rhs = np.asarray(lp.rhs, float)
    c = np.asarray(lp.c, float)

    # columns: x = lb + y (finite lb), x = ub - y (only ub finite), x = y+ - y- (free)
    cols, signs, offs = [], [], np.zeros(n)
    mapping = []  # per original var: list of (std col, sign)
    for j in range(n):
        if np.isfinite(lb[j]):
            offs[j] = lb[j]
            mapping.append([(len(cols), 1.0)])
            cols.append(j); signs.append(1.0)
        elif np.isfinite(ub[j]):
            offs[j] = ub[j]
            mapping.append([(len(cols), -1.0)])
            cols.append(j); signs.append(-1.0)
        else:
            mapping.append([(len(cols), 1.0), (len(cols) + 1, -1.0)])
            cols += [j, j]; signs += [1.0, -1.0]
    a_std = a[:, cols] * np.asarray(signs) if n else np.zeros((a.shape[0], 0))
    c_std = c[cols] * np.asarray(signs) if n else np.zeros(0)
    b_std = rhs - a @ offs
    rows = [a_std[i] for i in range(a_std.shape[0])]
    rels = rel[:]
    b_list = list(b_std)
    # finite upper bounds on shifted vars become rows
    for j in range(n):
        if np.isfinite(lb[j]) and np.isfinite(ub[j]):
            row = np.zeros(len(cols))
            row[mapping[j][0][0]] = 1.0
            rows.append(row); rels.append(LE); b_list.append(ub[j] - lb[j])
    m = len(rows)
    a_rows = np.array(rows).reshape(m, len(cols))
    b = np.array(b_list, float)
    # slacks
    n_slack = sum(r != EQ for r in rels)
    full = np.zeros((m, len(cols) + n_slack))
    full[:, :len(cols)] = a_rows
    k = len(cols)
    natural = [-1] * m
    for i, r in enumerate(rels):
        if r == LE:
            full[i, k] = 1.0
            natural[i] = k
            k += 1
        elif r == GE:
            full[i, k] = -1.0
            k += 1
    for i in range(m):
        if b[i] < 0:
            full[i] *= -1
            b[i] *= -1
            natural[i] = -1 if natural[i] >= 0 else natural[i]
    c_full = np.concatenate([c_std, np.zeros(n_slack)])
    return full, b, c_full, natural, mapping, offs, c


def revised_simplex(lp: LinearProgram, tolerance: float = DEFAULT_TOL,
                    max_iter: int = 50_000) -> LpSolution:
    """Two-phase revised simplex with Bland's anti-cycling rule."""
    a, b, c, natural, mapping, offs, c_orig = _standard_form(lp)
    m, n = a.shape
    piv_tol = 1e-11
    # phase 1: artificials where no natural slack basis column exists
    art_rows = [i for i in range(m) if natural[i] < 0]
    n_art = len(art_rows)
    a1 = np.hstack([a, np.zeros((m, n_art))])
    basis = list(natural)
    for k, i in enumerate(art_rows):
        a1[i, n + k] = 1.0
        basis[i] = n + k
    c1 = np.concatenate([np.zeros(n), -np.ones(n_art)])
    iters = 0

    def run(cost, allowed, basis, it):
        while True:
            if it >= max_iter:
                raise SolverError("simplex iteration limit reached")
            bmat = a1[:, basis]
            try:
                xb = np.linalg.solve(bmat, b) if m else np.zeros(0)
                y = np.linalg.solve(bmat.T, cost[basis]) if m else np.zeros(0)
            except np.linalg.LinAlgError as exc:
                raise SolverError("singular basis") from exc
            if m and np.linalg.cond(bmat) > 1e12:
                raise SolverError("ill-conditioned basis")
            red = cost - a1.T @ y
            enter = -1
            inb = set(basis)
            for j in range(allowed):
                if j not in inb and red[j] > 1e-9 * (1 + abs(cost[j])):
                    enter = j
                    break
            if enter < 0:
                return basis, xb, it, False
            d = np.linalg.solve(bmat, a1[:, enter])
            best, leave = math.inf, -1
            for i in range(m):
                if d[i] > piv_tol:
                    ratio = max(xb[i], 0.0) / d[i]
                    if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave < 0:
                return basis, xb, it, True
            basis[leave] = enter
            it += 1

    if n_art:
        basis, xb, iters, _ = run(c1, n + n_art, basis, iters)
        infeas = sum(xb[i] for i in range(m) if basis[i] >= n)
        if infeas > tolerance * (1 + np.abs(b).max(initial=0)) * 10:
            return LpSolution(INFEASIBLE, math.nan, None, iters)
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= n:
                bmat = a1[:, basis]
                row = np.linalg.solve(bmat.T, np.eye(m)[i])
                alt = [j for j in range(n) if j not in basis and abs(row @ a1[:, j]) > 1e-9]
                if alt:
                    basis[i] = alt[0]
        redundant = [i for i in range(m) if basis[i] >= n]
        if redundant:
            keep = [i for i in range(m) if i not in redundant]
            a1 = a1[keep]
            b = b[keep]
            basis = [basis[i] for i in keep]
            m = len(keep)
    c2 = np.concatenate([c, np.zeros(n_art)])
    basis, xb, iters, unbounded = run(c2, n, basis, iters)
    if unbounded:
        return LpSolution(UNBOUNDED, math.inf, None, iters)
    y = np.zeros(n)
    for i, j in enumerate(basis):
        y[j] = xb[i]
    x = offs.copy()
    for j, parts in enumerate(mapping):
        for col, sign in parts:
            x[j] += sign * y[col]
    return LpSolution(OPTIMAL, float(np.dot(c_orig, x)), x, iters)
