"""Frame-based link-level cooperation (LLC) baseline.

Each primary session splits its data evenly over fixed-length frames. In a
frame a decode-and-forward relay facility carries the payload in two
sequential hops; if that beats the direct primary link the rest of the frame
is granted to the relay alone. A multi-hop session splits the frame into one
subframe per primary hop and applies the same rule in each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .netmodel import CR_LINK, PRIMARY_LINK, PU_IN, PU_OUT, PrimarySession, Scenario


@dataclass(frozen=True)
class LlcConfig:
    frame_len: float = 0.01
    exclusivity: bool = True   # leftover time goes to one relay only

    def __post_init__(self):
        if not self.frame_len > 0:
            raise ValueError("frame_len must be positive")
        if not self.exclusivity:
            raise ValueError("the LLC baseline is defined with exclusive access only")

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "LlcConfig":
        return cls(frame_len=scenario.llc_frame)


@dataclass(frozen=True)
class HopPlan:
    tx: str
    rx: str
    subframe: float
    relay: Optional[str]
    delivery: float          # relayed time per subframe (inf without a relay)
    direct: float            # direct primary-link time per subframe
    cooperate: bool
    leftover: float          # seconds per frame granted to the relay
    relay_rate: float        # relay's CR rate straight to the BS, 0 if it cannot reach it


@dataclass(frozen=True)
class LlcPlan:
    session: str
    n_frames: int
    payload_bits: float      # per frame
    hops: Tuple[HopPlan, ...] = field(default_factory=tuple)

    @property
    def secondary_bits_per_frame(self) -> float:
        return sum(h.leftover * h.relay_rate for h in self.hops if h.cooperate)


def frame_count(length_s: float, frame_len: float) -> int:
    # guard against 30 / 0.01 landing just above an integer
    return max(1, math.ceil(length_s / frame_len - 1e-9))


def _best_relay(scenario: Scenario, tx: str, rx: str, bits: float):
    """Facility minimising bits/r_in + bits/r_out; ties go to the smaller id."""
    best = None
    for j in sorted(scenario.facilities):
        if not (scenario.in_range(tx, j) and scenario.in_range(j, rx)):
            continue
        t = bits / scenario.capacity(tx, j, PU_IN) + bits / scenario.capacity(j, rx, PU_OUT)
        if best is None or t < best[1]:
            best = (j, t)
    return best


def llc_frame_plan(scenario: Scenario, session: PrimarySession,
                   config: Optional[LlcConfig] = None) -> LlcPlan:
    cfg = config or LlcConfig.for_scenario(scenario)
    n = frame_count(session.length_s, cfg.frame_len)
    d_f = session.volume_bits / n
    hops = list(zip(session.path, session.path[1:]))
    sub = cfg.frame_len / len(hops)
    bs = scenario.base_station
    plans = []
    for a, b in hops:
        direct = d_f / scenario.capacity(a, b, PRIMARY_LINK)
        found = _best_relay(scenario, a, b, d_f)
        if found is None:
            plans.append(HopPlan(a, b, sub, None, math.inf, direct, False, 0.0, 0.0))
            continue
        relay, t = found
        coop = t < sub and t < direct
        rate = 0.0
        if relay != bs and scenario.in_range(relay, bs):
            rate = scenario.capacity(relay, bs, CR_LINK)
        plans.append(HopPlan(a, b, sub, relay, t, direct, coop,
                             sub - t if coop else 0.0, rate))
    return LlcPlan(session.id, n, d_f, tuple(plans))


def llc_active_throughput(scenario: Scenario, config: Optional[LlcConfig] = None,
                          control_interval: Optional[float] = None) -> float:
    """Secondary rate while PUs are active, averaged over the control interval.

    Only the relay holding the leftover time may transmit, and its data counts
    only if it reaches the BS directly. Sessions share one band, so the best
    session's leftover is used rather than the sum.
    """
    cfg = config or LlcConfig.for_scenario(scenario)
    if not scenario.sessions:
        return 0.0
    T = control_interval or min(s.length_s for s in scenario.sessions)
    best = 0.0
    for s in scenario.sessions:
        plan = llc_frame_plan(scenario, s, cfg)
        busy = min(plan.n_frames * cfg.frame_len, T) / T
        best = max(best, plan.secondary_bits_per_frame / cfg.frame_len * busy)
    return best


def llc_throughput(scenario: Scenario, idle: float, rho: Optional[float] = None,
                   config: Optional[LlcConfig] = None,
                   control_interval: Optional[float] = None) -> float:
    """rho-weighted blend of the LLC active rate and the idle-spectrum optimum ``idle``."""
    rho = scenario.rho if rho is None else rho
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    return rho * llc_active_throughput(scenario, config, control_interval) + (1 - rho) * idle


def llc_completion_time(session: PrimarySession, config: LlcConfig) -> float:
    """The last frame ends the transfer regardless of how fast each frame is served."""
    return frame_count(session.length_s, config.frame_len) * config.frame_len


def relay_candidates(scenario: Scenario, session: PrimarySession) -> List[str]:
    """Facilities that can relay the session's first hop in two steps."""
    a, b = session.path[0], session.path[1]
    return [j for j in sorted(scenario.facilities)
            if scenario.in_range(a, j) and scenario.in_range(j, b)]
