"""Scenario JSON format and canonical scenario generators.

The JSON document carries explicit units in its field names::

    {"schema": "nlcoop-scenario/1",
     "radio": {"gamma": 4.63, "pathloss_n": 3,
               "p_t_w": {"C": 2, "b": 2, "P": 2},
               "p_r_w": {...}, "p_i_w": {...}},
     "rates_bps": {"cr": 3e6, "pcr": 3e6, "primary": 1e6},
     "alpha": 1, "rho": 1, "llc_frame_s": 0.01,
     "nodes": [{"id": "b", "kind": "bs", "x_m": 0, "y_m": 0}, ...],
     "sessions": [{"id": "1", "path": ["Ps1", "Pd1"],
                   "length_s": 30, "volume_bits": 2e7}, ...],
     "capacities_bps": [{"tx": "A", "rx": "B", "rate_bps": 1e6}]}
"""
from __future__ import annotations

import json
import math
from typing import Any, Dict, Optional, Sequence, TextIO

from .netmodel import (
    BASE_STATION, CR_ROUTER, PU_DEST, PU_RELAY, PU_SOURCE, Node, PrimarySession,
    RadioParams, Scenario, ScenarioError,
)

SCHEMA = "nlcoop-scenario/1"

GRID_SPACING = 200.0
GRID_LENGTHS = (30.0, 30.0, 30.0, 60.0, 60.0)
GRID_VOLUME = 20e6

# Session endpoints in units of the grid spacing: each endpoint sits at the
# centre of a grid cell (100*sqrt(2) m from its four corner facilities) and
# source/destination occupy neighbouring cells (200 m apart).
GRID_SESSIONS = (
    ((0.5, 0.5), (1.5, 0.5)),
    ((3.5, 0.5), (3.5, 1.5)),
    ((0.5, 3.5), (1.5, 3.5)),
    ((3.5, 2.5), (3.5, 3.5)),
    ((0.5, 1.5), (0.5, 2.5)),
)
# multi-hop variant: session 4 runs Ps4 -> Pr4 -> Pd4
GRID_R1_SESSION4 = ((3.5, 2.5), (3.5, 3.5), (2.5, 3.5))


def scenario_to_dict(sc: Scenario) -> Dict[str, Any]:
    r = sc.radio
    return {
        "schema": SCHEMA,
        "radio": {"gamma": r.gamma, "pathloss_n": r.pathloss_n,
                  "p_t_w": dict(r.p_t), "p_r_w": dict(r.p_r), "p_i_w": dict(r.p_i)},
        "rates_bps": {"cr": sc.rate_cr, "pcr": sc.rate_pcr, "primary": sc.rate_primary},
        "alpha": sc.alpha,
        "rho": sc.rho,
        "llc_frame_s": sc.llc_frame,
        "nodes": [{"id": n.id, "kind": n.kind, "x_m": n.x, "y_m": n.y,
                   **({"edge": True} if n.edge else {}),
                   **({"session": n.session} if n.session is not None else {})}
                  for n in sc.nodes],
        "sessions": [{"id": s.id, "path": list(s.path), "length_s": s.length_s,
                      "volume_bits": s.volume_bits} for s in sc.sessions],
        "capacities_bps": [{"tx": tx, "rx": rx, "rate_bps": v}
                           for (tx, rx), v in sorted(sc.capacities.items())],
    }


def _num(obj: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    if key not in obj:
        if default is None:
            raise ScenarioError(f"missing field {key!r}")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ScenarioError(f"field {key!r} must be a finite number")
    return float(val)


def scenario_from_dict(doc: Dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA!r}")
    try:
        rd = doc.get("radio", {})
        defaults = RadioParams()
        radio = RadioParams(
            gamma=_num(rd, "gamma", defaults.gamma),
            pathloss_n=_num(rd, "pathloss_n", defaults.pathloss_n),
            p_t={k: float(v) for k, v in rd.get("p_t_w", defaults.p_t).items()},
            p_r={k: float(v) for k, v in rd.get("p_r_w", defaults.p_r).items()},
            p_i={k: float(v) for k, v in rd.get("p_i_w", defaults.p_i).items()},
        )
        rates = doc.get("rates_bps", {})
        nodes = tuple(Node(str(n["id"]), n["kind"], _num(n, "x_m"), _num(n, "y_m"),
                           bool(n.get("edge", False)), n.get("session"))
                      for n in doc.get("nodes", []))
        sessions = tuple(PrimarySession(str(s["id"]), tuple(str(p) for p in s["path"]),
                                        _num(s, "length_s"), _num(s, "volume_bits"))
                         for s in doc.get("sessions", []))
        caps = {(str(c["tx"]), str(c["rx"])): _num(c, "rate_bps")
                for c in doc.get("capacities_bps", [])}
        if any(v <= 0 for v in caps.values()):
            raise ScenarioError("link capacity overrides must be positive")
        return Scenario(nodes, sessions, radio,
                        rate_cr=_num(rates, "cr", 3e6), rate_pcr=_num(rates, "pcr", 3e6),
                        rate_primary=_num(rates, "primary", 1e6),
                        alpha=_num(doc, "alpha", 1.0), rho=_num(doc, "rho", 1.0),
                        llc_frame=_num(doc, "llc_frame_s", 0.01), capacities=caps)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc


def dump_scenario(sc: Scenario, fh: TextIO) -> None:
    json.dump(scenario_to_dict(sc), fh, indent=2, sort_keys=True)
    fh.write("\n")


def load_scenario(fh: TextIO) -> Scenario:
    try:
        doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def grid_router_id(col: int, row: int, size: int = 5) -> str:
    """CR routers are numbered row by row from the origin, skipping the BS."""
    k = row * size + col
    centre = (size * size) // 2
    if k == centre:
        return "b"
    return f"CR{k + 1 if k < centre else k}"


def generate_grid_scenario(spacing_m: float = GRID_SPACING, alpha: float = 1.0, rho: float = 1.0,
                           rate_cr: float = 3e6, rate_pcr: float = 3e6, rate_primary: float = 1e6,
                           lengths_s: Sequence[float] = GRID_LENGTHS,
                           volumes_bits: Sequence[float] | float = GRID_VOLUME,
                           n_sessions: int = 5, multihop: bool = False,
                           radio: Optional[RadioParams] = None,
                           llc_frame: float = 0.01) -> Scenario:
    """5x5 grid of facilities with the BS in the centre and CR1/CR24 as edge routers.

    ``multihop`` routes session 4 through a PU relay (source, relay and
    destination in three neighbouring cells). ``n_sessions=0`` gives the pure
    secondary network.
    """
    if not 0 <= n_sessions <= len(GRID_SESSIONS):
        raise ScenarioError(f"n_sessions must be in 0..{len(GRID_SESSIONS)}")
    if spacing_m <= 0:
        raise ScenarioError("spacing must be positive")
    if isinstance(volumes_bits, (int, float)):
        volumes_bits = [float(volumes_bits)] * n_sessions
    if len(lengths_s) < n_sessions or len(volumes_bits) < n_sessions:
        raise ScenarioError("need a length and a volume per session")
    radio = radio or RadioParams.uniform(2.0, 1e-6, 1.34e-7, gamma=4.63, n=3.0)
    nodes = []
    for row in range(5):
        for col in range(5):
            nid = grid_router_id(col, row)
            kind = BASE_STATION if nid == "b" else CR_ROUTER
            nodes.append(Node(nid, kind, col * spacing_m, row * spacing_m,
                              edge=nid in ("CR1", "CR24")))
    sessions = []
    for k in range(n_sessions):
        sid = str(k + 1)
        pts = GRID_R1_SESSION4 if (multihop and k == 3) else GRID_SESSIONS[k]
        path = []
        for h, (gx, gy) in enumerate(pts):
            if h == 0:
                nid, kind = f"Ps{sid}", PU_SOURCE
            elif h == len(pts) - 1:
                nid, kind = f"Pd{sid}", PU_DEST
            else:
                nid, kind = f"Pr{sid}", PU_RELAY
            nodes.append(Node(nid, kind, gx * spacing_m, gy * spacing_m, session=sid))
            path.append(nid)
        sessions.append(PrimarySession(sid, tuple(path), float(lengths_s[k]), float(volumes_bits[k])))
    return Scenario(tuple(nodes), tuple(sessions), radio, rate_cr=rate_cr, rate_pcr=rate_pcr,
                    rate_primary=rate_primary, alpha=alpha, rho=rho, llc_frame=llc_frame)


def toy_scenario(volume_bits: float = 1e6, length_s: float = 30.0) -> Scenario:
    """Four CR routers A-B-C-D and one session Ps->Pd; all marked spacings equal R_T = R_I/2.

    B is the base station and A the edge router.
    """
    radio = RadioParams.from_ranges(1.0, 2.0)
    nodes = (
        Node("A", CR_ROUTER, 0.0, 1.0, edge=True),
        Node("B", BASE_STATION, 0.0, 0.0),
        Node("C", CR_ROUTER, 1.0, 0.0),
        Node("D", CR_ROUTER, 2.0, 0.0),
        Node("Ps", PU_SOURCE, -1.0, 1.0, session="1"),
        Node("Pd", PU_DEST, -1.0, 0.0, session="1"),
    )
    return Scenario(nodes, (PrimarySession("1", ("Ps", "Pd"), length_s, volume_bits),), radio)
