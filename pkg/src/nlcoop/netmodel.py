"""Geometric network description and the protocol interference model.

Distances are meters, powers watts, rates bits/s and times seconds throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

# entity types used to index powers and thresholds
CR, BS, PU = "C", "b", "P"

BASE_STATION = "bs"
CR_ROUTER = "cr"
PU_SOURCE = "pu_src"
PU_DEST = "pu_dst"
PU_RELAY = "pu_relay"
NODE_KINDS = (BASE_STATION, CR_ROUTER, PU_SOURCE, PU_DEST, PU_RELAY)

CR_LINK = "cr"
PU_IN = "pu_in"
PU_OUT = "pu_out"
PRIMARY_LINK = "primary"


class ScenarioError(ValueError):
    """Raised for physically or structurally invalid scenario input."""


def received_power(p_t: float, gamma: float, d: float, n: float) -> float:
    """Received power p_t * gamma * d**-n."""
    if d <= 0:
        raise ScenarioError(f"distance must be positive, got {d}")
    return p_t * gamma * d ** (-n)


def transmission_range(p_t: float, p_thresh: float, gamma: float, n: float) -> float:
    """Distance at which the received power drops to ``p_thresh``.

    Used both for the transmission range (reception threshold) and the
    interference range (interference threshold).
    """
    if min(p_t, p_thresh, gamma, n) <= 0:
        raise ScenarioError("transmission_range needs strictly positive inputs")
    return (gamma * p_t / p_thresh) ** (1.0 / n)


@dataclass(frozen=True)
class RadioParams:
    gamma: float = 4.63
    pathloss_n: float = 3.0
    p_t: Dict[str, float] = field(default_factory=lambda: {CR: 2.0, BS: 2.0, PU: 2.0})
    p_r: Dict[str, float] = field(default_factory=lambda: {CR: 1e-6, BS: 1e-6, PU: 1e-6})
    p_i: Dict[str, float] = field(default_factory=lambda: {CR: 1.34e-7, BS: 1.34e-7, PU: 1.34e-7})

    def __post_init__(self):
        if self.gamma <= 0 or self.pathloss_n < 2:
            raise ScenarioError("need gamma > 0 and path-loss exponent >= 2")
        for table in (self.p_t, self.p_r, self.p_i):
            if set(table) != {CR, BS, PU}:
                raise ScenarioError(f"power table needs keys C, b, P: {sorted(table)}")
            if min(table.values()) <= 0:
                raise ScenarioError("powers and thresholds must be positive")

    def r_t(self, mu: str, nu: str) -> float:
        return transmission_range(self.p_t[mu], self.p_r[nu], self.gamma, self.pathloss_n)

    def r_i(self, mu: str, nu: str) -> float:
        return transmission_range(self.p_t[mu], self.p_i[nu], self.gamma, self.pathloss_n)

    @classmethod
    def uniform(cls, p_t: float, p_r: float, p_i: float, gamma: float = 4.63, n: float = 3.0):
        return cls(gamma=gamma, pathloss_n=n,
                   p_t={CR: p_t, BS: p_t, PU: p_t},
                   p_r={CR: p_r, BS: p_r, PU: p_r},
                   p_i={CR: p_i, BS: p_i, PU: p_i})

    @classmethod
    def from_ranges(cls, r_t: float, r_i: float, p_t: float = 1.0, gamma: float = 1.0, n: float = 3.0):
        """Uniform parameters that reproduce the given ranges exactly."""
        return cls.uniform(p_t, gamma * p_t / r_t ** n, gamma * p_t / r_i ** n, gamma=gamma, n=n)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    x: float
    y: float
    edge: bool = False
    session: Optional[str] = None

    @property
    def entity(self) -> str:
        if self.kind == BASE_STATION:
            return BS
        if self.kind == CR_ROUTER:
            return CR
        return PU

    @property
    def is_facility(self) -> bool:
        return self.kind in (BASE_STATION, CR_ROUTER)


@dataclass(frozen=True)
class PrimarySession:
    id: str
    path: Tuple[str, ...]
    length_s: float
    volume_bits: float

    @property
    def source(self) -> str:
        return self.path[0]

    @property
    def dest(self) -> str:
        return self.path[-1]


@dataclass(frozen=True)
class Link:
    tx: str
    rx: str
    kind: str
    capacity: float
    session: Optional[str] = None

    @property
    def label(self) -> str:
        return f"{self.tx}->{self.rx}"


@dataclass(frozen=True)
class Scenario:
    nodes: Tuple[Node, ...]
    sessions: Tuple[PrimarySession, ...] = ()
    radio: RadioParams = field(default_factory=RadioParams)
    rate_cr: float = 3e6
    rate_pcr: float = 3e6
    rate_primary: float = 1e6
    alpha: float = 1.0
    rho: float = 1.0
    llc_frame: float = 0.01
    # per-link overrides keyed by (tx, rx)
    capacities: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        ids = [nd.id for nd in self.nodes]
        if len(set(ids)) != len(ids):
            raise ScenarioError("node ids must be unique")
        if sum(nd.kind == BASE_STATION for nd in self.nodes) != 1:
            raise ScenarioError("a scenario needs exactly one base station")
        for nd in self.nodes:
            if nd.kind not in NODE_KINDS:
                raise ScenarioError(f"unknown node kind {nd.kind!r}")
        if self.alpha < 1:
            raise ScenarioError("alpha must be >= 1")
        if not 0 <= self.rho <= 1:
            raise ScenarioError("rho must lie in [0, 1]")
        if self.llc_frame <= 0:
            raise ScenarioError("llc_frame must be positive")
        if min(self.rate_cr, self.rate_pcr, self.rate_primary) <= 0:
            raise ScenarioError("link rates must be positive")
        by_id = {nd.id: nd for nd in self.nodes}
        sids = [s.id for s in self.sessions]
        if len(set(sids)) != len(sids):
            raise ScenarioError("session ids must be unique")
        for s in self.sessions:
            if len(s.path) < 2:
                raise ScenarioError(f"session {s.id}: path needs at least two nodes")
            if s.length_s <= 0 or s.volume_bits < 0:
                raise ScenarioError(f"session {s.id}: need length > 0 and volume >= 0")
            kinds = [by_id[n].kind if n in by_id else None for n in s.path]
            if None in kinds:
                raise ScenarioError(f"session {s.id}: unknown node on path")
            if kinds[0] != PU_SOURCE or kinds[-1] != PU_DEST or any(k != PU_RELAY for k in kinds[1:-1]):
                raise ScenarioError(f"session {s.id}: path must run source -> relays -> destination")

    # lookups -------------------------------------------------------------
    def node(self, node_id: str) -> Node:
        return self._index()[node_id]

    def _index(self) -> Dict[str, Node]:
        # frozen dataclass, so cache through object.__setattr__
        idx = self.__dict__.get("_node_index")
        if idx is None:
            idx = {nd.id: nd for nd in self.nodes}
            object.__setattr__(self, "_node_index", idx)
        return idx

    @property
    def base_station(self) -> str:
        return next(nd.id for nd in self.nodes if nd.kind == BASE_STATION)

    @property
    def facilities(self) -> List[str]:
        return [nd.id for nd in self.nodes if nd.is_facility]

    @property
    def edge_routers(self) -> List[str]:
        return [nd.id for nd in self.nodes if nd.kind == CR_ROUTER and nd.edge]

    def session(self, sid: str) -> PrimarySession:
        for s in self.sessions:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def distance(self, a: str, b: str) -> float:
        na, nb = self.node(a), self.node(b)
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def in_range(self, tx: str, rx: str) -> bool:
        ntx, nrx = self.node(tx), self.node(rx)
        return self.distance(tx, rx) <= self.radio.r_t(ntx.entity, nrx.entity) * (1 + 1e-12)

    def capacity(self, tx: str, rx: str, kind: str) -> float:
        if (tx, rx) in self.capacities:
            return self.capacities[(tx, rx)]
        return {CR_LINK: self.rate_cr, PU_IN: self.rate_pcr, PU_OUT: self.rate_pcr,
                PRIMARY_LINK: self.rate_primary}[kind]

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def without_sessions(self) -> "Scenario":
        """Same secondary network with every primary user removed (idle spectrum)."""
        keep = tuple(nd for nd in self.nodes if nd.is_facility)
        caps = {k: v for k, v in self.capacities.items() if k[0] in {n.id for n in keep}
                and k[1] in {n.id for n in keep}}
        return replace(self, nodes=keep, sessions=(), capacities=caps)


def interferes(tx: Node, rx: Node, radio: RadioParams) -> bool:
    """True when ``rx`` lies within the interference range of ``tx`` (boundary inclusive)."""
    if tx.id == rx.id:
        raise ScenarioError("interference check needs two distinct nodes")
    d = math.hypot(tx.x - rx.x, tx.y - rx.y)
    return d <= radio.r_i(tx.entity, rx.entity) * (1 + 1e-12)


def derive_links(scenario: Scenario) -> List[Link]:
    """All CR links, PU-related links and primary links of a scenario.

    Order is deterministic: CR links by (tx, rx) in node order, then per session
    its inbound PU-related links, outbound PU-related links and primary hops.
    """
    sc = scenario
    fac = sc.facilities
    links: List[Link] = []
    for i in fac:
        for j in fac:
            if i != j and sc.in_range(i, j):
                links.append(Link(i, j, CR_LINK, sc.capacity(i, j, CR_LINK)))
    for s in sc.sessions:
        for j in fac:
            if sc.in_range(s.source, j):
                links.append(Link(s.source, j, PU_IN, sc.capacity(s.source, j, PU_IN), s.id))
        for i in fac:
            if sc.in_range(i, s.dest):
                links.append(Link(i, s.dest, PU_OUT, sc.capacity(i, s.dest, PU_OUT), s.id))
        for a, b in zip(s.path, s.path[1:]):
            links.append(Link(a, b, PRIMARY_LINK, sc.capacity(a, b, PRIMARY_LINK), s.id))
    return links


def link_index(links: Sequence[Link]) -> Dict[Tuple[str, str], Link]:
    return {(lk.tx, lk.rx): lk for lk in links}
