"""Session selection, flow routing and MIS time-share scheduling for NLC.

The mixed-integer problem is solved by fixing the session-selection vector and
solving the remaining LP; all ``2**L_p`` vectors are tried by default.
Rates inside the LP are expressed in units of the largest link capacity so the
matrix stays well scaled; results are reported in bits/s.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .conflict import LINK_VERTEX, ConflictGraph
from .lp import EQ, GE, INFEASIBLE, LE, OPTIMAL, LinearProgram, LpSolution, solve_lp, verify_solution
from .mis import MAX_SESSIONS, GuardExceeded, MisCollection
from .netmodel import CR_LINK, PU_IN, PU_OUT, Scenario

log = logging.getLogger(__name__)

TIE_RTOL = 1e-7


@dataclass(frozen=True)
class ControlInterval:
    T: float
    order: Tuple[str, ...]          # session ids sorted by length, ties by id
    breakpoints: Tuple[float, ...]  # t_0 .. t_{L_p+1}
    fallback: bool = False          # no session conflicts with BS activity

    def width(self, m: int) -> float:
        return self.breakpoints[m] - self.breakpoints[m - 1]


def select_control_interval(scenario: Scenario, graph: ConflictGraph) -> ControlInterval:
    """T is the shortest length among sessions that conflict with a BS-incident link."""
    sessions = list(scenario.sessions)
    if not sessions:
        return ControlInterval(1.0, (), (0.0, 1.0), fallback=True)
    bs = scenario.base_station
    bs_links = [v.id for v in graph.vertices
                if v.kind == LINK_VERTEX and bs in (v.link.tx, v.link.rx)]
    hits = [s for s in sessions
            if any(graph.adj[graph.session_vertex[s.id], u] for u in bs_links)]
    fallback = not hits
    if fallback:
        log.warning("no primary session conflicts with base-station activity; "
                    "using the shortest session length as control interval")
        hits = sessions
    T = min(s.length_s for s in hits)
    order = tuple(s.id for s in sorted(sessions, key=lambda s: (s.length_s, s.id)))
    t = [0.0] + [min(scenario.session(sid).length_s / scenario.alpha, T) for sid in order] + [T]
    return ControlInterval(T, order, tuple(t), fallback)


@dataclass
class NlcSolution:
    status: str
    theta: Tuple[int, ...]                      # scenario session order
    objective: float = 0.0                      # bits/s
    lam: Optional[np.ndarray] = None            # (L_p + 1) x Q
    f: Dict[Tuple[str, Tuple[str, str]], float] = field(default_factory=dict)
    fp: Dict[Tuple[str, Tuple[str, str]], float] = field(default_factory=dict)
    upsilon: Dict[str, float] = field(default_factory=dict)
    completion: Dict[str, Optional[float]] = field(default_factory=dict)
    interval: Optional[ControlInterval] = None
    model: Optional["NlcModel"] = field(default=None, repr=False)
    x: Optional[np.ndarray] = field(default=None, repr=False)
    lps_solved: int = 0

    def verify(self, tolerance: float = 1e-9) -> bool:
        lp = self.model.fixed_lp(self.theta)
        return verify_solution(lp, self.x, tolerance)


class NlcModel:
    """The LP for one scenario and MIS collection, with theta as bounded variables.

    Fixing ``theta[k]`` through its bounds turns every indicator term into a
    constant; relaxing it to ``[0, 1]`` gives the LP relaxation used by
    branch-and-bound.
    """

    def __init__(self, scenario: Scenario, graph: ConflictGraph, mis: MisCollection,
                 interval: Optional[ControlInterval] = None):
        self.scenario = scenario
        self.graph = graph
        self.mis = mis
        self.interval = interval or select_control_interval(scenario, graph)
        self._build()

    # -- construction ----------------------------------------------------
    def _build(self):
        sc, g, iv = self.scenario, self.graph, self.interval
        lp = LinearProgram()
        T = iv.T
        sessions = [sc.session(sid) for sid in iv.order]   # sorted order k = 0..L-1
        n_s = len(sessions)
        n_int = n_s + 1
        Q = len(self.mis)
        bs = sc.base_station
        fac = sc.facilities
        edges = sc.edge_routers

        link_vs = [v for v in g.vertices if v.kind == LINK_VERTEX]
        cr = [v for v in link_vs if v.link.kind == CR_LINK]
        pu = [v for v in link_vs if v.link.kind in (PU_IN, PU_OUT)]
        unit = max([v.link.capacity for v in link_vs], default=1.0)
        self.unit = unit

        # which MISs contain each link vertex
        holders: Dict[int, List[int]] = {v.id: [] for v in link_vs}
        for q, s in enumerate(self.mis.sets):
            for vid in s:
                if vid in holders:
                    holders[vid].append(q)

        # variables
        self.theta_idx = [lp.add_var(f"theta[{s.id}]", 0.0, 1.0) for s in sessions]
        lam = np.empty((n_int, Q), dtype=np.int64)
        for m in range(1, n_int + 1):
            for q in range(Q):
                ub = 1.0 if iv.width(m) > 0 else 0.0
                lam[m - 1, q] = lp.add_var(f"lam[{m},{q}]", 0.0, ub)
        self.lam_idx = lam
        self.ups_idx = {e: lp.add_var(f"ups[{e}]", obj=1.0) for e in edges}
        self.f_idx: Dict[Tuple[str, Tuple[str, str]], int] = {}
        for e in edges:
            for v in cr:
                key = (v.link.tx, v.link.rx)
                self.f_idx[(e, key)] = lp.add_var(f"f[{e},{key[0]}>{key[1]}]")
        self.fp_idx: Dict[Tuple[str, Tuple[str, str]], int] = {}
        for s in sessions:
            for v in cr + [u for u in pu if u.link.session == s.id]:
                key = (v.link.tx, v.link.rx)
                self.fp_idx[(s.id, key)] = lp.add_var(f"fp[{s.id},{key[0]}>{key[1]}]")

        cr_keys = [(v.link.tx, v.link.rx) for v in cr]
        out_cr: Dict[str, List[Tuple[str, str]]] = {i: [] for i in fac}
        in_cr: Dict[str, List[Tuple[str, str]]] = {i: [] for i in fac}
        for key in cr_keys:
            out_cr[key[0]].append(key)
            in_cr[key[1]].append(key)

        # secondary flow routing
        for e in edges:
            fi = lambda key: self.f_idx[(e, key)]  # noqa: E731
            row = {fi(k): 1.0 for k in out_cr[e]}
            row[self.ups_idx[e]] = -1.0
            lp.add_constraint(row, EQ, 0.0, f"src_out[{e}]")
            if in_cr[e]:
                lp.add_constraint({fi(k): 1.0 for k in in_cr[e]}, EQ, 0.0, f"src_in[{e}]")
            for i in fac:
                if i in (e, bs) or not (out_cr[i] or in_cr[i]):
                    continue
                row = {fi(k): 1.0 for k in out_cr[i]}
                for k in in_cr[i]:
                    row[fi(k)] = row.get(fi(k), 0.0) - 1.0
                lp.add_constraint(row, EQ, 0.0, f"relay[{e},{i}]")
            if out_cr[bs] and e != bs:
                lp.add_constraint({fi(k): 1.0 for k in out_cr[bs]}, EQ, 0.0, f"bs_out[{e}]")

        # primary flow routing
        for k, s in enumerate(sessions):
            own_in = [(u.link.tx, u.link.rx) for u in pu if u.link.session == s.id and u.link.kind == PU_IN]
            own_out = [(u.link.tx, u.link.rx) for u in pu if u.link.session == s.id and u.link.kind == PU_OUT]
            fpi = lambda key, sid=s.id: self.fp_idx[(sid, key)]  # noqa: E731
            row = {fpi(key): 1.0 for key in own_in}
            row[self.theta_idx[k]] = -s.volume_bits / T / unit
            lp.add_constraint(row, GE, 0.0, f"psrc[{s.id}]")
            for i in fac:
                row: Dict[int, float] = {}
                for key in out_cr[i] + [kk for kk in own_out if kk[0] == i]:
                    row[fpi(key)] = row.get(fpi(key), 0.0) + 1.0
                for key in in_cr[i] + [kk for kk in own_in if kk[1] == i]:
                    row[fpi(key)] = row.get(fpi(key), 0.0) - 1.0
                if row:
                    lp.add_constraint(row, EQ, 0.0, f"prelay[{s.id},{i}]")

        # scheduling: per-interval budget
        for m in range(1, n_int + 1):
            lp.add_constraint({int(j): 1.0 for j in lam[m - 1]}, LE, iv.width(m) / T, f"budget[{m}]")

        # protection of sessions not cooperated with
        self.protect: List[Tuple[int, int, float, List[int]]] = []
        for k, s in enumerate(sessions):
            sv = g.session_vertex[s.id]
            outside = [q for q, st in enumerate(self.mis.sets) if sv not in st]
            for m in range(1, n_int + 1):
                t0 = iv.breakpoints[m - 1]
                ind = 1.0 if s.length_s >= t0 else 0.0
                cap = ind * max(0.0, min(s.length_s - t0, iv.width(m))) / T
                row = {int(lam[m - 1, q]): 1.0 for q in outside}
                row[self.theta_idx[k]] = -cap
                lp.add_constraint(row, LE, 0.0, f"protect[{s.id},{m}]")
                self.protect.append((k, m, cap, outside))

        def supply(vid: int, upto: int) -> Dict[int, float]:
            rate = g.vertices[vid].link.capacity / unit
            return {int(lam[m, q]): -rate for m in range(upto) for q in holders[vid]}

        # cumulative primary deliverability on CR links
        for v in cr:
            key = (v.link.tx, v.link.rx)
            for k in range(n_s):
                row = supply(v.id, k + 1)
                for kk in range(k + 1):
                    row[self.fp_idx[(sessions[kk].id, key)]] = 1.0
                lp.add_constraint(row, LE, 0.0, f"deliver[{key[0]}>{key[1]},{sessions[k].id}]")
            row = supply(v.id, n_int)
            for s in sessions:
                row[self.fp_idx[(s.id, key)]] = 1.0
            for e in edges:
                row[self.f_idx[(e, key)]] = 1.0
            lp.add_constraint(row, LE, 0.0, f"capacity[{key[0]}>{key[1]}]")

        # PU-related links carry only their own session, delivered by t_k
        pos = {s.id: k for k, s in enumerate(sessions)}
        for v in pu:
            key = (v.link.tx, v.link.rx)
            k = pos[v.link.session]
            row = supply(v.id, k + 1)
            row[self.fp_idx[(v.link.session, key)]] = 1.0
            lp.add_constraint(row, LE, 0.0, f"pu_link[{key[0]}>{key[1]}]")

        self.lp = lp
        self.sessions_sorted = sessions
        self._pos_in_scenario = [pos[s.id] for s in sc.sessions]
        self._lb0 = np.asarray(lp.lb, float)
        self._ub0 = np.asarray(lp.ub, float)

    # -- bounds for a given theta ------------------------------------------
    def bounds_for(self, theta: Sequence[Optional[int]]):
        """Bound arrays with ``theta`` (scenario order; None = relaxed) applied."""
        if len(theta) != len(self.scenario.sessions):
            raise ValueError(f"theta has {len(theta)} entries for {len(self.scenario.sessions)} sessions")
        lb, ub = self._lb0.copy(), self._ub0.copy()
        fixed = {}
        for i, val in enumerate(theta):
            k = self._pos_in_scenario[i]
            if val is None:
                continue
            if val not in (0, 1):
                raise ValueError("theta entries must be 0, 1 or None")
            lb[self.theta_idx[k]] = ub[self.theta_idx[k]] = float(val)
            fixed[k] = val
        for k, m, cap, outside in self.protect:
            if cap == 0.0 or fixed.get(k) == 0:
                ub[self.lam_idx[m - 1, outside]] = 0.0
        return lb, ub

    def fixed_lp(self, theta: Sequence[int]) -> LinearProgram:
        """A standalone copy of the LP with ``theta`` fixed."""
        lb, ub = self.bounds_for(theta)
        out = LinearProgram()
        out.names, out.c = list(self.lp.names), list(self.lp.c)
        out._by_name = dict(self.lp._by_name)
        out.lb, out.ub = lb.tolist(), ub.tolist()
        out.row_idx, out.row_val = self.lp.row_idx, self.lp.row_val
        out.rel, out.rhs, out.row_names = self.lp.rel, self.lp.rhs, self.lp.row_names
        return out

    def solve_theta(self, theta: Sequence[Optional[int]], tolerance: float = 1e-9) -> LpSolution:
        return solve_lp(self.fixed_lp(theta), tolerance)

    # -- unpacking ---------------------------------------------------------
    def unpack(self, theta: Sequence[int], sol: LpSolution) -> NlcSolution:
        if sol.status != OPTIMAL:
            return NlcSolution(sol.status, tuple(theta), math.nan, interval=self.interval, model=self)
        x, u = sol.x, self.unit
        lam = x[self.lam_idx]
        return NlcSolution(
            status=OPTIMAL,
            theta=tuple(int(t) for t in theta),
            objective=float(sum(x[i] for i in self.ups_idx.values()) * u),
            lam=lam,
            f={k: float(x[i] * u) for k, i in self.f_idx.items() if x[i] > 0},
            fp={k: float(x[i] * u) for k, i in self.fp_idx.items() if x[i] > 0},
            upsilon={e: float(x[i] * u) for e, i in self.ups_idx.items()},
            interval=self.interval,
            model=self,
            x=x,
        )


def build_lp(scenario: Scenario, graph: ConflictGraph, mis: MisCollection,
             theta: Sequence[int]) -> LinearProgram:
    """The NLC LP for one fixed session-selection vector (scenario order)."""
    model = NlcModel(scenario, graph, mis)
    return model.fixed_lp(theta)


def _key(theta: Sequence[int]):
    return (sum(theta), tuple(theta))


def solve_nlc(scenario: Scenario, graph: ConflictGraph, mis: MisCollection,
              max_sessions: int = MAX_SESSIONS, branch_and_bound: bool = False,
              tolerance: float = 1e-9, completion: bool = True) -> NlcSolution:
    """Best session selection with its flows and schedule.

    Ties within a relative 1e-7 go to the selection with the fewest
    cooperations, then the lexicographically smallest vector.
    """
    n = len(scenario.sessions)
    if n > max_sessions and not branch_and_bound:
        raise GuardExceeded(f"{n} sessions exceed the exhaustive limit {max_sessions}; "
                            "use branch_and_bound=True")
    model = NlcModel(scenario, graph, mis)
    if branch_and_bound:
        best, solved = _branch_and_bound(model, n, tolerance)
    else:
        best, solved = None, 0
        for theta in itertools.product((0, 1), repeat=n):
            sol = model.solve_theta(theta, tolerance)
            solved += 1
            if sol.status != OPTIMAL:
                continue
            best = _better(best, (theta, sol))
    if best is None:
        return NlcSolution(INFEASIBLE, tuple([0] * n), math.nan, interval=model.interval,
                           model=model, lps_solved=solved)
    theta, sol = best
    out = model.unpack(theta, sol)
    out.lps_solved = solved
    if completion:
        for s in scenario.sessions:
            out.completion[s.id] = completion_time(out, s.id)
    return out


def _better(best, cand):
    if best is None:
        return cand
    (tb, sb), (tc, sc) = best, cand
    tol = TIE_RTOL * max(1.0, abs(sb.objective))
    if sc.objective > sb.objective + tol:
        return cand
    if sc.objective >= sb.objective - tol and _key(tc) < _key(tb):
        return cand
    return best


def _branch_and_bound(model: NlcModel, n: int, tolerance: float):
    """Best-first search over theta using the LP relaxation as bound."""
    best, solved = None, 0
    counter = itertools.count()
    root = tuple([None] * n)
    heap = [(-math.inf, next(counter), root)]
    while heap:
        neg_bound, _, node = heapq.heappop(heap)
        if best is not None and -neg_bound < best[1].objective - TIE_RTOL * max(1.0, abs(best[1].objective)):
            continue
        sol = model.solve_theta(node, tolerance)
        solved += 1
        if sol.status != OPTIMAL:
            continue
        if best is not None and sol.objective < best[1].objective - TIE_RTOL * max(1.0, abs(best[1].objective)):
            continue
        free = [i for i, t in enumerate(node) if t is None]
        if not free:
            best = _better(best, (node, sol))
            continue
        # branch on the most fractional relaxed theta
        vals = [sol.x[model.theta_idx[model._pos_in_scenario[i]]] for i in free]
        i = free[int(np.argmin([abs(v - 0.5) for v in vals]))]
        for val in (0, 1):
            child = list(node)
            child[i] = val
            heapq.heappush(heap, (-sol.objective, next(counter), tuple(child)))
    return best, solved


def completion_time(solution: NlcSolution, session_id: str) -> Optional[float]:
    """Earliest time the scheduled time shares can deliver the session's data.

    Within each interval the scheduled MISs may be reordered freely; earlier
    intervals are used in full. The session is treated as if it had the
    scheduled links to itself, so the value is a lower bound when several
    cooperated sessions share relay links. Returns None when the session is
    not cooperated with.
    """
    model = solution.model
    sc = model.scenario
    iv = model.interval
    s = sc.session(session_id)
    idx = [x.id for x in sc.sessions].index(session_id)
    if solution.status != OPTIMAL or solution.theta[idx] == 0:
        return None
    if s.volume_bits == 0:
        return 0.0
    k = iv.order.index(session_id)
    g = model.graph
    unit = model.unit
    T = iv.T
    usable = [v for v in g.vertices if v.kind == LINK_VERTEX and
              (v.link.kind == CR_LINK or v.link.session == session_id)]
    need = s.volume_bits / T / unit
    for m in range(1, k + 2):
        if iv.width(m) <= 0 and m < k + 1:
            continue
        lp = LinearProgram()
        tau = lp.add_var("tau", iv.breakpoints[m - 1], iv.breakpoints[m], obj=-1.0)
        share: Dict[int, Dict[int, float]] = {v.id: {} for v in usable}
        last = []
        for mm in range(1, m + 1):
            for q, st in enumerate(model.mis.sets):
                avail = solution.lam[mm - 1, q]
                if avail <= 0:
                    continue
                j = lp.add_var(f"x[{mm},{q}]", 0.0, float(avail))
                if mm == m:
                    last.append(j)
                for vid in st:
                    if vid in share:
                        share[vid][j] = g.vertices[vid].link.capacity / unit
        row = {j: 1.0 for j in last}
        row[tau] = -1.0 / T
        lp.add_constraint(row, LE, -iv.breakpoints[m - 1] / T, "time")
        flow = {v.id: lp.add_var(f"g[{v.id}]") for v in usable}
        for v in usable:
            row = {j: -r for j, r in share[v.id].items()}
            row[flow[v.id]] = 1.0
            lp.add_constraint(row, LE, 0.0)
        lp.add_constraint({flow[v.id]: 1.0 for v in usable if v.link.tx == s.source}, GE, need)
        for i in sc.facilities:
            row: Dict[int, float] = {}
            for v in usable:
                if v.link.tx == i:
                    row[flow[v.id]] = row.get(flow[v.id], 0.0) + 1.0
                if v.link.rx == i:
                    row[flow[v.id]] = row.get(flow[v.id], 0.0) - 1.0
            if row:
                lp.add_constraint(row, EQ, 0.0)
        res = solve_lp(lp, 1e-9)
        if res.status == OPTIMAL:
            return float(res.x[tau])
    # the optimizer guarantees delivery by t_k; numerical slack lands here
    return float(iv.breakpoints[k + 1])


def idle_collection(idle_graph: ConflictGraph, active: MisCollection,
                    base: MisCollection) -> MisCollection:
    """Idle-spectrum MISs: ``base`` plus each active MIS restricted to CR links.

    The restriction is independent in the idle graph and is grown greedily to a
    maximal set, so the idle optimum is never below any active-spectrum one.
    """
    out = MisCollection(idle_graph, list(base.sets))
    pos = idle_graph.link_vertex
    for st in active.sets:
        keep = []
        for vid in st:
            v = active.graph.vertices[vid]
            if v.kind == LINK_VERTEX and (v.link.tx, v.link.rx) in pos:
                keep.append(pos[(v.link.tx, v.link.rx)])
        chosen = blocked = 0
        for u in keep + list(range(len(idle_graph))):
            if (blocked >> u) & 1:
                continue
            chosen |= 1 << u
            blocked |= (1 << u) | idle_graph.nbr_bits[u]
        out.add(tuple(u for u in range(len(idle_graph)) if (chosen >> u) & 1))
    return out


def expected_throughput(active: float, idle: float, rho: float) -> float:
    """Average over PU activity: rho * active + (1 - rho) * idle."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    return rho * active + (1 - rho) * idle
