"""Maximal independent set search on conflict graphs.

Vertex sets are handled as Python int bitsets internally and exposed as sorted
tuples of vertex ids.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .conflict import LINK_VERTEX, SESSION_VERTEX, ConflictGraph
from .netmodel import PrimarySession

DEFAULT_BUDGET = 30
MAX_EXACT_VERTICES = 40
MAX_SESSIONS = 12


class GuardExceeded(ValueError):
    """Raised when a problem is too large for an exhaustive routine."""


def _bits(vs: Iterable[int]) -> int:
    out = 0
    for v in vs:
        out |= 1 << v
    return out


def _members(bits: int) -> Tuple[int, ...]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return tuple(out)


@dataclass
class MisCollection:
    """A deduplicated list of maximal independent sets of one graph.

    ``sets[q]`` is a sorted tuple of vertex ids. ``stats`` carries bookkeeping
    from the generator (e.g. augmentation iteration counts).
    """
    graph: ConflictGraph
    sets: List[Tuple[int, ...]] = field(default_factory=list)
    stats: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._seen = set()
        uniq = []
        for s in self.sets:
            key = tuple(sorted(s))
            if key not in self._seen:
                self._seen.add(key)
                uniq.append(key)
        self.sets = uniq

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def add(self, s: Iterable[int]) -> bool:
        key = tuple(sorted(s))
        if key in self._seen:
            return False
        self._seen.add(key)
        self.sets.append(key)
        return True

    def union(self, other: "MisCollection") -> "MisCollection":
        out = MisCollection(self.graph, list(self.sets), dict(self.stats))
        for s in other.sets:
            out.add(s)
        return out

    def canonical(self) -> "MisCollection":
        """Same sets in sorted order, for order-independent comparisons."""
        return MisCollection(self.graph, sorted(self.sets), dict(self.stats))

    def containing(self, session: str) -> List[int]:
        """Indices q with the session's vertex in I_q."""
        sv = self.graph.session_vertex[session]
        return [q for q, s in enumerate(self.sets) if sv in s]

    def excluding(self, session: str) -> List[int]:
        """Indices q with the session's vertex absent from I_q."""
        sv = self.graph.session_vertex[session]
        return [q for q, s in enumerate(self.sets) if sv not in s]

    def write(self, fh: TextIO) -> None:
        labels = self.graph.labels()
        for s in sorted(self.sets):
            fh.write(" ".join(sorted(labels[v] for v in s)) + "\n")


def is_independent(graph: ConflictGraph, vertex_set: Iterable[int]) -> bool:
    bits = _bits(vertex_set)
    for v in _members(bits):
        if graph.nbr_bits[v] & bits:
            return False
    return True


def is_maximal_independent(graph: ConflictGraph, vertex_set: Iterable[int]) -> bool:
    vs = list(vertex_set)
    if not is_independent(graph, vs):
        return False
    covered = _bits(vs)
    for v in vs:
        covered |= graph.nbr_bits[v]
    return covered == (1 << len(graph)) - 1


def enumerate_all_mis(graph: ConflictGraph, max_vertices: int = MAX_EXACT_VERTICES) -> MisCollection:
    """Every MIS, via Bron-Kerbosch with pivoting on the complement graph."""
    n = len(graph)
    if n > max_vertices:
        raise GuardExceeded(f"exact MIS enumeration refused for {n} > {max_vertices} vertices")
    full = (1 << n) - 1
    comp = [full & ~graph.nbr_bits[v] & ~(1 << v) for v in range(n)]
    found: List[Tuple[int, ...]] = []

    def expand(r: int, p: int, x: int):
        if not p and not x:
            found.append(_members(r))
            return
        px = p | x
        u = max(_members(px), key=lambda w: bin(p & comp[w]).count("1"))
        for v in _members(p & ~comp[u]):
            vb = 1 << v
            expand(r | vb, p & comp[v], x & comp[v])
            p &= ~vb
            x |= vb

    if n == 0:
        return MisCollection(graph, [()])
    expand(0, full, 0)
    return MisCollection(graph, sorted(found))


def scheduling_index(graph: ConflictGraph, sources: Sequence[str],
                     destinations: Sequence[str]) -> np.ndarray:
    """Priority of each vertex for greedy MIS growth (lower is earlier).

    Links lying on a shortest source->destination path in the link-level
    routing graph get 0; other links get their hop distance to that set through
    links sharing an endpoint. Unreachable links and session vertices go last.
    """
    n = len(graph)
    link_v = [v for v in graph.vertices if v.kind == LINK_VERTEX]
    succ: Dict[str, List[Tuple[str, int]]] = {}
    pred: Dict[str, List[Tuple[str, int]]] = {}
    for v in link_v:
        succ.setdefault(v.link.tx, []).append((v.link.rx, v.id))
        pred.setdefault(v.link.rx, []).append((v.link.tx, v.id))

    def bfs(start: str, nbrs) -> Dict[str, int]:
        dist = {start: 0}
        queue = deque([start])
        while queue:
            a = queue.popleft()
            for b, _ in nbrs.get(a, ()):
                if b not in dist:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return dist

    critical = set()
    to_dest = {d: bfs(d, pred) for d in destinations}
    for s in sources:
        from_s = bfs(s, succ)
        for d in destinations:
            if d == s or d not in from_s:
                continue
            best = from_s[d]
            dd = to_dest[d]
            for v in link_v:
                a, b = v.link.tx, v.link.rx
                if a in from_s and b in dd and from_s[a] + 1 + dd[b] == best:
                    critical.add(v.id)

    unreached = n + 1
    index = np.full(n, unreached + 1, dtype=np.int64)
    by_node: Dict[str, List[int]] = {}
    for v in link_v:
        index[v.id] = unreached
        by_node.setdefault(v.link.tx, []).append(v.id)
        by_node.setdefault(v.link.rx, []).append(v.id)
    queue = deque()
    for vid in sorted(critical):
        index[vid] = 0
        queue.append(vid)
    while queue:
        vid = queue.popleft()
        lk = graph.vertices[vid].link
        for end in (lk.tx, lk.rx):
            for w in by_node[end]:
                if index[w] == unreached:
                    index[w] = index[vid] + 1
                    queue.append(w)
    return index


def _greedy(graph: ConflictGraph, order: Sequence[int], first: Optional[int] = None) -> int:
    chosen = blocked = 0
    seq = order if first is None else itertools.chain((first,), order)
    for v in seq:
        vb = 1 << v
        if blocked & vb:
            continue
        chosen |= vb
        blocked |= vb | graph.nbr_bits[v]
    return chosen


def sio_mis(graph: ConflictGraph, sources: Sequence[str], destinations: Sequence[str],
            budget: int = DEFAULT_BUDGET, seed: int = 0) -> MisCollection:
    """Up to ``budget`` distinct MISs grown in scheduling-index order.

    Restart ``k`` seeds the greedy pass with the ``k``-th vertex of the priority
    order (restart 0 is unseeded) and breaks index ties with a per-restart
    random key, so the output is a deterministic function of ``seed``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = len(graph)
    out = MisCollection(graph)
    if n == 0:
        out.add(())
        return out
    index = scheduling_index(graph, sources, destinations)
    base = np.random.default_rng([seed, 0]).random(n)
    seeds = np.lexsort((base, index)).tolist()
    attempts = 3 * budget + n
    for k in range(attempts):
        if len(out) >= budget:
            break
        tie = np.random.default_rng([seed, k + 1]).random(n)
        order = np.lexsort((tie, index)).tolist()
        first = None if k == 0 else seeds[(k - 1) % n]
        out.add(_members(_greedy(graph, order, first)))
    out.stats["attempts"] = k + 1 if n else 0
    return out


def augmented_sio(graph: ConflictGraph, sessions: Sequence[PrimarySession],
                  sources: Sequence[str], destinations: Sequence[str],
                  budget: int = DEFAULT_BUDGET, seed: int = 0,
                  max_sessions: int = MAX_SESSIONS) -> MisCollection:
    """SIO search augmented over every proper subset of cooperated sessions.

    For a subset ``p`` the sessions outside ``p`` and every vertex conflicting
    with them are removed, the reduced graph is searched with the endpoints of
    ``p`` added to the sources/destinations, and the removed sessions are put
    back into each set found. Results are MISs of the full graph.
    """
    lp = len(sessions)
    if lp > max_sessions:
        raise GuardExceeded(f"augmented search refused for {lp} > {max_sessions} sessions")
    result = sio_mis(graph, sources, destinations, budget, seed)
    inner = 0
    ids = [s.id for s in sessions]
    for size in range(lp):
        for p in itertools.combinations(range(lp), size):
            inner += 1
            dropped = [graph.session_vertex[ids[i]] for i in range(lp) if i not in p]
            if not is_independent(graph, dropped):
                # sessions never conflict with each other in a built graph,
                # but a hand-made one may join them; no MIS holds all of them
                continue
            gone = _bits(dropped)
            for sv in dropped:
                gone |= graph.nbr_bits[sv]
            keep = [v for v in range(len(graph)) if not (gone >> v) & 1]
            sub, back = graph.subgraph(keep)
            srcs = list(sources) + [sessions[i].source for i in p]
            dsts = list(destinations) + [sessions[i].dest for i in p]
            found = sio_mis(sub, srcs, dsts, budget, seed=seed + inner)
            for s in found:
                result.add(tuple(back[v] for v in s) + tuple(dropped))
    result.stats["inner_iterations"] = inner
    return result


def all_independent_sets(graph: ConflictGraph, max_vertices: int = 16) -> List[Tuple[int, ...]]:
    """Every independent set including the empty one (exhaustive, small graphs only)."""
    n = len(graph)
    if n > max_vertices:
        raise GuardExceeded(f"independent-set listing refused for {n} > {max_vertices} vertices")
    out = [()]

    def grow(current: int, start: int):
        for v in range(start, n):
            if current & (graph.nbr_bits[v] | (1 << v)):
                continue
            nxt = current | (1 << v)
            out.append(_members(nxt))
            grow(nxt, v + 1)

    grow(0, 0)
    return out


MIS_MODES = ("exact", "sio", "augmented")


def search_mis(graph: ConflictGraph, sessions: Sequence[PrimarySession], sources: Sequence[str],
               destinations: Sequence[str], mode: str = "augmented",
               budget: int = DEFAULT_BUDGET, seed: int = 0) -> MisCollection:
    """Dispatch to exact enumeration, plain SIO or the augmented search."""
    if mode == "exact":
        return enumerate_all_mis(graph)
    if mode == "sio":
        return sio_mis(graph, sources, destinations, budget, seed)
    if mode == "augmented":
        return augmented_sio(graph, sessions, sources, destinations, budget, seed)
    raise ValueError(f"unknown MIS mode {mode!r}; choose from {MIS_MODES}")


def read_mis(fh: TextIO, graph: ConflictGraph) -> MisCollection:
    """Parse the newline-delimited label format written by :meth:`MisCollection.write`."""
    by_label = {lab: i for i, lab in enumerate(graph.labels())}
    out = MisCollection(graph)
    for lineno, line in enumerate(fh, 1):
        try:
            out.add(by_label[lab] for lab in line.split())
        except KeyError as exc:
            raise ValueError(f"line {lineno}: unknown vertex label {exc.args[0]!r}") from None
    return out
