import io
import itertools
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from nlcoop.conflict import LINK_VERTEX, ConflictGraph, Vertex, build_conflict_graph
from nlcoop.llc import frame_count
from nlcoop.lp import LE, OPTIMAL, LinearProgram, solve_lp, verify_solution
from nlcoop.mis import enumerate_all_mis, is_maximal_independent, sio_mis
from nlcoop.netmodel import Link, derive_links
from nlcoop.nlc import expected_throughput, solve_nlc
from nlcoop.scaling import chernoff_bound, f_delta, grid_route, throughput_value
from nlcoop.scenarios import dump_scenario, load_scenario, toy_scenario
from oracles import brute_force_mis


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    adj = np.zeros((n, n), dtype=bool)
    for (u, v), b in zip(pairs, bits):
        adj[u, v] = adj[v, u] = b
    names = ["a", "b", "c", "d"]
    verts = [Vertex(k, LINK_VERTEX, link=Link(names[k % 4], names[(k + 1) % 4], "cr", 1.0))
             for k in range(n)]
    return ConflictGraph(verts, adj)


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_enumeration_equals_subset_filter(g):
    assert set(enumerate_all_mis(g).sets) == brute_force_mis(g.adj)


@given(graphs(), st.integers(1, 6), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_sio_outputs_maximal_independent_sets(g, budget, seed):
    found = sio_mis(g, ["a"], ["c"], budget=budget, seed=seed)
    assert 1 <= len(found) <= budget
    assert all(is_maximal_independent(g, s) for s in found)


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=4),
       st.lists(st.floats(0.5, 3.0), min_size=2, max_size=4))
@settings(max_examples=40, deadline=None)
def test_optimum_passes_replay_and_bound(c, caps):
    n = min(len(c), len(caps))
    lp = LinearProgram()
    for j in range(n):
        lp.add_var(f"x{j}", 0.0, caps[j], obj=c[j])
    lp.add_constraint({j: 1.0 for j in range(n)}, LE, 2.0)
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL and verify_solution(lp, sol.x)
    assert sol.objective <= sum(ci * ui for ci, ui in zip(c[:n], caps[:n])) + 1e-9
    # greedy fill by objective is optimal for a single budget row
    left, best = 2.0, 0.0
    for ci, ui in sorted(zip(c[:n], caps[:n]), reverse=True):
        take = min(ui, left)
        best += ci * take
        left -= take
    assert math.isclose(sol.objective, best, rel_tol=1e-7, abs_tol=1e-9)


@given(st.floats(0.0, 27e6))
@settings(max_examples=10, deadline=None)
def test_toy_objective_linear_in_volume(volume):
    sc = toy_scenario(volume_bits=volume)
    g = build_conflict_graph(sc, derive_links(sc))
    sol = solve_nlc(sc, g, enumerate_all_mis(g))
    assert math.isclose(sol.objective, 3e6 - volume / 10.0, rel_tol=1e-7, abs_tol=1e-3)
    assert sol.verify()


@given(st.floats(0, 1e7), st.floats(0, 1e7), st.floats(0, 1), st.floats(0, 1))
def test_expected_throughput_monotone_in_rho(a, b, r1, r2):
    active, idle = min(a, b), max(a, b)
    lo, hi = sorted((r1, r2))
    assert expected_throughput(active, idle, hi) <= expected_throughput(active, idle, lo) + 1e-6


@given(st.floats(0.01, 100), st.floats(0.01, 10), st.floats(1.01, 3))
def test_chernoff_decreasing(mu, delta, k):
    assert chernoff_bound(mu * k, delta) <= chernoff_bound(mu, delta)
    assert chernoff_bound(mu, delta * k) <= chernoff_bound(mu, delta)
    assert f_delta(delta) >= 0


@given(st.floats(10, 1e9), st.floats(0.05, 0.95), st.floats(0.01, 1.0), st.floats(0.1, 10))
def test_throughput_positive_and_w_monotone(n, b, frac, w):
    d = max(1e-6, b * frac)
    v1 = throughput_value(n, b, d, W=w)
    v2 = throughput_value(n, b, d, W=2 * w)
    assert 0 < v1 <= v2 <= n ** (b - 1) * (1 + 1e-12)


@given(st.tuples(st.integers(0, 7), st.integers(0, 7)), st.tuples(st.integers(0, 7), st.integers(0, 7)))
def test_grid_route_is_shortest(a, b):
    path = grid_route(a, b, (8, 8))
    assert len(path) == abs(a[0] - b[0]) + abs(a[1] - b[1]) + 1
    assert len(set(path)) == len(path)


@given(st.floats(0.001, 100), st.sampled_from([0.001, 0.01, 0.02, 0.05]))
def test_frames_cover_session(length, frame):
    n = frame_count(length, frame)
    assert n * frame >= length * (1 - 1e-9)
    assert (n - 1) * frame < length


@given(st.floats(1e5, 1e7), st.floats(1.0, 4.0), st.floats(0.0, 1.0))
@settings(max_examples=25)
def test_scenario_json_roundtrip(rate, alpha, rho):
    sc = toy_scenario().with_(rate_cr=rate, alpha=alpha, rho=rho)
    buf = io.StringIO()
    dump_scenario(sc, buf)
    assert load_scenario(io.StringIO(buf.getvalue())) == sc
