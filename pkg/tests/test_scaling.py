import math

import numpy as np
import pytest

from nlcoop.scaling import (
    REGIME_ALL_BS, REGIME_DENSE_BS, REGIME_SPARSE_BS, ScalingParams, bs_layout, chernoff_bound,
    cx_cy, dest_load_bound, dest_load_monte_carlo, f_delta, grid_route, monte_carlo_tail,
    route_load_monte_carlo, sampling_margin, scaling_rows, step2_throughput, subsquare_flow_bound,
    tail_bound, throughput_class, throughput_value, varsigma,
)


def test_f_delta_values():
    assert f_delta(1.0) == pytest.approx(2 * math.log(2) - 1, abs=1e-12)
    assert f_delta(0.0) == 0.0
    with pytest.raises(ValueError):
        f_delta(-0.1)


def test_chernoff_example():
    assert chernoff_bound(10, 1) == pytest.approx(math.exp(-10 * (2 * math.log(2) - 1)))
    assert tail_bound(10, 1).bound == pytest.approx(0.0210061, rel=1e-5)
    with pytest.raises(ValueError):
        chernoff_bound(0, 1)
    with pytest.raises(ValueError):
        chernoff_bound(1, 0)


@pytest.mark.parametrize("eta, p, delta", [(50, 0.2, 0.5), (200, 0.05, 1.0), (20, 0.5, 0.3)])
def test_monte_carlo_below_bound(eta, p, delta):
    freq = monte_carlo_tail(eta, p, delta, trials=20_000, seed=1)
    bound = chernoff_bound(eta * p, delta)
    assert freq <= bound + sampling_margin(bound, 20_000)


def test_monte_carlo_heterogeneous_probabilities():
    p = np.linspace(0.05, 0.4, 30)
    freq = monte_carlo_tail(30, p, 0.6, trials=10_000, seed=2)
    assert freq <= chernoff_bound(p.sum(), 0.6) + sampling_margin(chernoff_bound(p.sum(), 0.6), 10_000)
    with pytest.raises(ValueError):
        monte_carlo_tail(30, p, 0.6, trials=100)
    with pytest.raises(ValueError):
        monte_carlo_tail(3, 1.0, 0.6, trials=10_000)


def test_regimes_and_params():
    assert ScalingParams(1e4, 0.8, 0.8).regime == REGIME_ALL_BS
    assert ScalingParams(1e4, 0.8, 0.6).regime == REGIME_DENSE_BS
    assert ScalingParams(1e4, 0.8, 0.4).regime == REGIME_SPARSE_BS
    for bad in [dict(b=0.5, d=0.6), dict(b=1.0, d=0.5), dict(b=0.5, d=0.0)]:
        with pytest.raises(ValueError):
            ScalingParams(1e4, **bad)
    with pytest.raises(ValueError):
        ScalingParams(1.0, 0.5, 0.2)


def test_varsigma_and_dest_load():
    p = ScalingParams(1e4, 0.8, 0.4)
    assert varsigma(p) == 1e4        # 2n(1 - n^-0.4) exceeds n
    assert dest_load_bound(p) == pytest.approx(2e4 / 1e4 ** 0.4)
    assert varsigma(ScalingParams(1e4, 0.8, 0.8)) == 0.0


def test_dest_load_monte_carlo_within_bound():
    mc = dest_load_monte_carlo(ScalingParams(1e4, 0.8, 0.4), trials=200, seed=3)
    assert mc["fraction_within"] >= 0.99
    assert mc["worst_max"] <= mc["bound"]
    assert mc["bs"] == int(1e4 ** 0.4)


def test_cx_cy_branches():
    dense = ScalingParams(1e6, 0.8, 0.6)
    cx, cy = cx_cy(dense)
    assert cy == pytest.approx(1e6 ** 0.2)
    assert cx <= 2 * 1e6 ** 0.6 + 1e-9
    sparse = ScalingParams(1e6, 0.8, 0.3, c1=2.5)
    assert cx_cy(sparse)[1] == 2.5
    assert subsquare_flow_bound(ScalingParams(1e6, 0.8, 0.8)) == 0.0
    assert step2_throughput(ScalingParams(1e6, 0.8, 0.8)) == math.inf
    assert step2_throughput(dense) == pytest.approx(1.0 / subsquare_flow_bound(dense))


def test_throughput_class_examples():
    tc = throughput_class(ScalingParams(1e6, 0.8, 0.8))
    assert tc.exponent == pytest.approx(-0.2) and not tc.w_dependent
    tc = throughput_class(ScalingParams(1e6, 0.8, 0.6, W=1.0))
    assert tc.exponent == pytest.approx(-0.6) and tc.binding.startswith("W*")
    tc = throughput_class(ScalingParams(1e6, 0.8, 0.3, W=1e9))
    assert tc.binding == "n^(b-1)" and tc.value == pytest.approx(1e6 ** -0.2)


@pytest.mark.parametrize("b", [0.3, 0.6, 0.9])
@pytest.mark.parametrize("n", [1e3, 1e6])
def test_continuity_at_half_b(b, n):
    at = throughput_value(n, b, b / 2)
    above = throughput_value(n, b, b / 2 + 1e-13)
    assert abs(at - above) <= 1e-9 * max(1.0, at)


def test_grid_route_shape():
    path = grid_route((1, 1), (3, 4), (5, 5))
    assert path[0] == (1, 1) and path[-1] == (3, 4)
    assert len(path) == 2 + 3 + 1
    assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(path, path[1:]))
    assert path[3] == (1, 4)       # vertical leg first
    assert grid_route((2, 2), (2, 2), (3, 3)) == [(2, 2)]
    with pytest.raises(ValueError):
        grid_route((0, 0), (5, 0), (5, 5))


def test_bs_layout_rows_and_columns():
    mask = bs_layout(16, 4)
    assert (mask.sum(axis=0) == 4).all() and (mask.sum(axis=1) == 4).all()
    with pytest.raises(ValueError):
        bs_layout(10, 4)


def test_route_load_deterministic():
    a = route_load_monte_carlo(8, 2, 3, trials=3, seed=4)
    b = route_load_monte_carlo(8, 2, 3, trials=3, seed=4)
    assert np.array_equal(a, b)
    assert (a >= 3).all()


def test_scaling_rows_columns():
    rows = scaling_rows([ScalingParams(1e4, 0.8, d) for d in (0.2, 0.6, 0.8)])
    assert [r["regime"] for r in rows] == [REGIME_SPARSE_BS, REGIME_DENSE_BS, REGIME_ALL_BS]
    assert math.isnan(rows[2]["C_x"])


@pytest.mark.parametrize("eta, p, delta", [(200, 0.1, 1.0), (100, 0.5, 0.5)])
def test_monte_carlo_reference_points(eta, p, delta):
    trials = 100_000
    freq = monte_carlo_tail(eta, p, delta, trials=trials, seed=7)
    bound = chernoff_bound(eta * p, delta)
    assert freq <= bound + sampling_margin(bound, trials)


def test_monte_carlo_huge_delta_never_hits():
    assert monte_carlo_tail(50, 0.1, 50 / 5.0, trials=10_000, seed=3) == 0.0
