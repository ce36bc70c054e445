import math

import pytest

from nlcoop.llc import (
    LlcConfig, frame_count, llc_active_throughput, llc_completion_time, llc_frame_plan,
    llc_throughput, relay_candidates,
)
from nlcoop.netmodel import (
    BASE_STATION, CR_ROUTER, PU_DEST, PU_RELAY, PU_SOURCE, Node, PrimarySession, RadioParams,
    Scenario,
)
from nlcoop.scenarios import generate_grid_scenario


def relay_scenario(volume_bits=30e6, length_s=30.0, bs_xy=(0.5, 1.2)):
    """One relay R between Ps and Pd; the BS is reachable from R only."""
    radio = RadioParams.from_ranges(1.0, 2.0)
    nodes = (Node("B", BASE_STATION, *bs_xy), Node("R", CR_ROUTER, 0.5, 0.5, edge=True),
             Node("Ps", PU_SOURCE, 0.0, 0.0, session="1"), Node("Pd", PU_DEST, 1.0, 0.0, session="1"))
    return Scenario(nodes, (PrimarySession("1", ("Ps", "Pd"), length_s, volume_bits),), radio)


def test_frame_count_exact_multiples():
    assert frame_count(30.0, 0.01) == 3000
    assert frame_count(60.0, 0.01) == 6000
    assert frame_count(0.015, 0.01) == 2
    assert frame_count(0.001, 0.01) == 1


def test_leftover_third_of_frame():
    # direct hop fills the frame at 1 Mbit/s; two 3 Mbit/s hops take 2/3 of it
    sc = relay_scenario()
    plan = llc_frame_plan(sc, sc.sessions[0], LlcConfig(0.01))
    (hop,) = plan.hops
    assert plan.n_frames == 3000 and plan.payload_bits == pytest.approx(1e4)
    assert hop.relay == "R" and hop.cooperate
    assert hop.direct == pytest.approx(0.01)
    assert hop.delivery == pytest.approx(0.02 / 3)
    assert hop.leftover == pytest.approx(0.01 / 3)
    assert hop.relay_rate == 3e6
    assert llc_active_throughput(sc, LlcConfig(0.01)) == pytest.approx(1e6)


def test_leftover_unused_when_relay_cannot_reach_bs():
    sc = relay_scenario(bs_xy=(5.0, 5.0))
    assert llc_frame_plan(sc, sc.sessions[0]).hops[0].relay_rate == 0.0
    assert llc_active_throughput(sc) == 0.0


def test_no_cooperation_when_relay_slower_than_frame():
    sc = relay_scenario(volume_bits=60e6)   # relayed payload needs 4/3 of a frame
    hop = llc_frame_plan(sc, sc.sessions[0]).hops[0]
    assert not hop.cooperate and hop.leftover == 0.0
    assert llc_active_throughput(sc) == 0.0


def test_multihop_splits_frame():
    radio = RadioParams.from_ranges(1.0, 2.0)
    nodes = (Node("B", BASE_STATION, 1.0, 1.2), Node("R1", CR_ROUTER, 0.5, 0.5),
             Node("R2", CR_ROUTER, 1.5, 0.5),
             Node("Ps", PU_SOURCE, 0, 0, session="1"), Node("Pr", PU_RELAY, 1, 0, session="1"),
             Node("Pd", PU_DEST, 2, 0, session="1"))
    sc = Scenario(nodes, (PrimarySession("1", ("Ps", "Pr", "Pd"), 30.0, 6e6),), radio)
    plan = llc_frame_plan(sc, sc.sessions[0], LlcConfig(0.01))
    assert [h.subframe for h in plan.hops] == [0.005, 0.005]
    assert [h.relay for h in plan.hops] == ["R1", "R2"]
    # 2000 bits per frame: relay needs 4/3 ms of each 5 ms subframe
    for h in plan.hops:
        assert h.cooperate and h.leftover == pytest.approx(0.005 - 4000 / 3e6)
    expect = 2 * (0.005 - 4000 / 3e6) * 3e6 / 0.01
    assert llc_active_throughput(sc, LlcConfig(0.01)) == pytest.approx(expect)


def test_completion_invariant_in_volume():
    cfg = LlcConfig(0.01)
    for volume in (1e6, 2e7, 3e7):
        s = PrimarySession("1", ("Ps", "Pd"), 30.0, volume)
        assert llc_completion_time(s, cfg) == pytest.approx(30.0)


def test_expected_throughput_blend():
    sc = relay_scenario()
    assert llc_throughput(sc, idle=3e6, rho=0.5) == pytest.approx(0.5 * 1e6 + 0.5 * 3e6)
    with pytest.raises(ValueError):
        llc_throughput(sc, idle=1.0, rho=2.0)


def test_grid_relays_do_not_reach_bs():
    sc = generate_grid_scenario()
    for s in sc.sessions:
        assert len(relay_candidates(sc, s)) == 2
        for hop in llc_frame_plan(sc, s).hops:
            assert hop.relay_rate == 0.0
    assert llc_active_throughput(sc) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        LlcConfig(0.0)
    with pytest.raises(ValueError):
        LlcConfig(0.01, exclusivity=False)
    assert math.isclose(LlcConfig.for_scenario(relay_scenario()).frame_len, 0.01)
