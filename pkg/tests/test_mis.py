import io
import random

import numpy as np
import pytest

from nlcoop.conflict import build_conflict_graph
from nlcoop.mis import (
    GuardExceeded, MisCollection, all_independent_sets, augmented_sio, enumerate_all_mis,
    is_independent, is_maximal_independent, read_mis, scheduling_index, search_mis, sio_mis,
)
from nlcoop.netmodel import derive_links
from oracles import brute_force_mis, random_conflict_graph


def test_toy_mis_matches_brute_force(toy):
    _, g, mis = toy
    assert set(mis.sets) == brute_force_mis(g.adj)
    assert len(mis) == 7


@pytest.mark.parametrize("seed", range(15))
def test_bron_kerbosch_matches_subset_filter(seed):
    rng = random.Random(seed)
    g, _, _ = random_conflict_graph(rng, rng.randint(1, 10), rng.randint(0, 2), rng.uniform(0.1, 0.8))
    assert set(enumerate_all_mis(g).sets) == brute_force_mis(g.adj)


@pytest.mark.parametrize("seed", range(15))
def test_sio_sets_are_maximal(seed):
    rng = random.Random(100 + seed)
    g, sessions, names = random_conflict_graph(rng, rng.randint(2, 11), rng.randint(1, 3), 0.4)
    every = brute_force_mis(g.adj)
    found = sio_mis(g, names[:1], names[-1:], budget=8, seed=seed)
    assert 1 <= len(found) <= 8
    assert set(found.sets) <= every
    aug = augmented_sio(g, sessions, names[:1], names[-1:], budget=8, seed=seed)
    assert set(aug.sets) <= every
    assert set(found.sets) <= set(aug.sets)
    assert aug.stats["inner_iterations"] == 2 ** len(sessions) - 1


def test_sio_deterministic_in_seed(grid):
    g = build_conflict_graph(grid, derive_links(grid))
    a = sio_mis(g, grid.edge_routers, ["b"], budget=10, seed=3)
    b = sio_mis(g, grid.edge_routers, ["b"], budget=10, seed=3)
    assert a.sets == b.sets


def test_grid_augmented_count(grid):
    g = build_conflict_graph(grid, derive_links(grid))
    aug = augmented_sio(g, grid.sessions, grid.edge_routers, ["b"], budget=30, seed=0)
    assert aug.stats["inner_iterations"] == 31
    assert all(is_maximal_independent(g, s) for s in aug.sets)
    assert len(aug) == 670


def test_scheduling_index_zero_on_shortest_path(toy):
    sc, g, _ = toy
    idx = scheduling_index(g, ["A"], ["B"])
    lab = g.labels()
    assert idx[lab.index("A->B")] == 0
    assert idx[lab.index("B->A")] == 1      # shares both endpoints
    assert idx[lab.index("C->D")] == 2
    assert idx[lab.index("S:1")] > idx.max() - 1


def test_independence_checks(toy):
    _, g, mis = toy
    for s in mis:
        assert is_independent(g, s) and is_maximal_independent(g, s)
    assert not is_maximal_independent(g, ())
    lab = g.labels()
    assert not is_independent(g, [lab.index("A->B"), lab.index("B->C")])


def test_all_independent_sets_count():
    rng = random.Random(5)
    g, _, _ = random_conflict_graph(rng, 8, 1, 0.3)
    sets = all_independent_sets(g)
    brute = [m for m in range(1 << len(g))
             if not any(g.adj[u, v] for u in range(len(g)) for v in range(u + 1, len(g))
                        if (m >> u) & 1 and (m >> v) & 1)]
    assert len(sets) == len(brute)
    assert () in sets


def test_guards():
    rng = random.Random(0)
    g, sessions, names = random_conflict_graph(rng, 20, 0, 0.3)
    with pytest.raises(GuardExceeded):
        enumerate_all_mis(g, max_vertices=10)
    with pytest.raises(GuardExceeded):
        all_independent_sets(g, max_vertices=10)
    with pytest.raises(ValueError):
        sio_mis(g, names, names, budget=0)
    with pytest.raises(ValueError):
        search_mis(g, sessions, names, names, mode="nope")


def test_collection_dedup_and_union(toy):
    _, g, mis = toy
    twice = MisCollection(g, list(mis.sets) + list(mis.sets))
    assert len(twice) == len(mis)
    assert not twice.add(mis.sets[0])
    assert len(mis.union(twice)) == len(mis)
    assert len(mis.containing("1")) + len(mis.excluding("1")) == len(mis)


def test_mis_file_roundtrip(toy):
    _, g, mis = toy
    buf = io.StringIO()
    mis.write(buf)
    again = read_mis(io.StringIO(buf.getvalue()), g)
    assert sorted(again.sets) == sorted(mis.sets)
    with pytest.raises(ValueError, match="unknown vertex"):
        read_mis(io.StringIO("A->B ghost\n"), g)


def test_empty_graph_has_one_empty_set():
    rng = random.Random(1)
    g, _, _ = random_conflict_graph(rng, 0, 0, 0.5)
    assert sio_mis(g, [], [], budget=3).sets == [()]
    assert np.array_equal(g.adj, np.zeros((0, 0), dtype=bool))
