"""PU-related conflict graph over CR links, PU-related links and primary sessions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

from .netmodel import (
    CR_LINK, PRIMARY_LINK, PU_IN, PU_OUT, Link, RadioParams, Scenario, interferes,
)

LINK_VERTEX = "link"
SESSION_VERTEX = "session"


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: str                      # LINK_VERTEX or SESSION_VERTEX
    link: Optional[Link] = None
    session: Optional[str] = None

    @property
    def label(self) -> str:
        if self.kind == SESSION_VERTEX:
            return f"S:{self.session}"
        return self.link.label


def link_conflicts(a: Link, b: Link, scenario: Scenario) -> bool:
    """Protocol-model conflict between two communication links.

    Shared transmitter or receiver, a receiver that is the other link's
    transmitter, or a receiver inside the other transmitter's interference range.
    """
    if {a.tx, a.rx} & {b.tx, b.rx}:
        return True
    node = scenario.node
    radio = scenario.radio
    return interferes(node(a.tx), node(b.rx), radio) or interferes(node(b.tx), node(a.rx), radio)


def session_conflicts(link: Link, session_links: Sequence[Link], scenario: Scenario) -> bool:
    """A link conflicts with a session once it conflicts with any of its primary hops."""
    return any(link_conflicts(link, p, scenario) for p in session_links)


class ConflictGraph:
    """Undirected conflict graph with dense boolean adjacency.

    ``adj`` is an ``(n, n)`` bool array; ``nbr_bits[v]`` is the neighbour set of
    ``v`` packed into a Python int for fast independent-set work.
    """

    def __init__(self, vertices: List[Vertex], adj: np.ndarray):
        self.vertices = vertices
        self.adj = adj
        self.adj.setflags(write=False)
        self.nbr_bits = [sum(1 << int(u) for u in np.flatnonzero(adj[v])) for v in range(len(vertices))]
        self.session_vertex: Dict[str, int] = {
            v.session: v.id for v in vertices if v.kind == SESSION_VERTEX}
        self.link_vertex = {(v.link.tx, v.link.rx): v.id for v in vertices if v.kind == LINK_VERTEX}

    def __len__(self):
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum()) // 2

    def edges(self):
        iu, ju = np.nonzero(np.triu(self.adj, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    def neighbors(self, v: int) -> List[int]:
        return np.flatnonzero(self.adj[v]).tolist()

    def labels(self) -> List[str]:
        return [v.label for v in self.vertices]

    def subgraph(self, keep: Iterable[int]) -> "tuple[ConflictGraph, List[int]]":
        """Induced subgraph on ``keep``; also returns new-index -> old-index map."""
        keep = sorted(set(keep))
        verts = []
        for new, old in enumerate(keep):
            v = self.vertices[old]
            verts.append(Vertex(new, v.kind, v.link, v.session))
        sub = self.adj[np.ix_(keep, keep)].copy()
        return ConflictGraph(verts, sub), keep

    def write_edgelist(self, fh: TextIO) -> None:
        fh.write("# vertices: id label\n")
        for v in self.vertices:
            fh.write(f"# {v.id} {v.label}\n")
        for u, v in self.edges():
            fh.write(f"{u} {v}\n")


def build_conflict_graph(scenario: Scenario, links: Sequence[Link]) -> ConflictGraph:
    """Vertices are CR links, PU-related links and one per session.

    A PU-related link is never made adjacent to its own session: cooperating
    with a session replaces that session's own transmission.
    """
    comm = [lk for lk in links if lk.kind in (CR_LINK, PU_IN, PU_OUT)]
    hops: Dict[str, List[Link]] = {s.id: [] for s in scenario.sessions}
    for lk in links:
        if lk.kind == PRIMARY_LINK:
            hops[lk.session].append(lk)

    vertices = [Vertex(i, LINK_VERTEX, link=lk) for i, lk in enumerate(comm)]
    for s in scenario.sessions:
        vertices.append(Vertex(len(vertices), SESSION_VERTEX, session=s.id))
    n = len(vertices)
    adj = np.zeros((n, n), dtype=bool)

    for i in range(len(comm)):
        for j in range(i + 1, len(comm)):
            if link_conflicts(comm[i], comm[j], scenario):
                adj[i, j] = adj[j, i] = True
    for v in vertices[len(comm):]:
        for i, lk in enumerate(comm):
            if lk.session == v.session:
                continue
            if session_conflicts(lk, hops[v.session], scenario):
                adj[i, v.id] = adj[v.id, i] = True
    return ConflictGraph(vertices, adj)


def read_edgelist(fh: TextIO):
    """Inverse of :meth:`ConflictGraph.write_edgelist`: (labels, sorted edge list)."""
    labels: Dict[int, str] = {}
    edges = []
    for line in fh:
        line = line.strip()
        if not line or line.startswith("# vertices"):
            continue
        if line.startswith("#"):
            idx, lab = line[1:].split()
            labels[int(idx)] = lab
        else:
            u, v = line.split()
            edges.append((int(u), int(v)))
    return [labels[i] for i in range(len(labels))], sorted(edges)
