"""Per-SU throughput scaling: tail bounds, load lemmas and the regime formulas.

Closed forms are evaluated on real-valued ``n``; Monte Carlo helpers use
integer counts obtained by flooring (e.g. ``floor(n**d)`` base stations).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

REGIME_ALL_BS = "d=b"
REGIME_DENSE_BS = "b/2<d<b"
REGIME_SPARSE_BS = "d<=b/2"


@dataclass(frozen=True)
class ScalingParams:
    n: float
    b: float
    d: float
    W: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0

    def __post_init__(self):
        if not (0 < self.d <= self.b < 1):
            raise ValueError(f"need 0 < d <= b < 1, got b={self.b}, d={self.d}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.W <= 0 or min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError("W and the constants c1..c3 must be positive")

    @property
    def regime(self) -> str:
        if self.d == self.b:
            return REGIME_ALL_BS
        return REGIME_DENSE_BS if self.d > self.b / 2 else REGIME_SPARSE_BS


@dataclass(frozen=True)
class TailBound:
    mu: float
    delta: float
    bound: float


def f_delta(delta: float) -> float:
    """(1+delta) ln(1+delta) - delta, the Chernoff rate function."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return (1 + delta) * math.log1p(delta) - delta


def chernoff_bound(mu: float, delta: float) -> float:
    """Upper bound on P(X >= (1+delta) mu) for a sum of independent Bernoullis."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.exp(-mu * f_delta(delta))


def tail_bound(mu: float, delta: float) -> TailBound:
    return TailBound(mu, delta, chernoff_bound(mu, delta))


def monte_carlo_tail(eta: int, p: Union[float, Sequence[float]], delta: float,
                     trials: int = 100_000, seed: int = 0) -> float:
    """Fraction of trials with X >= (1+delta) E[X], X a sum of ``eta`` Bernoullis.

    ``p`` may be one probability or one per term.
    """
    if trials < 10_000:
        raise ValueError("use at least 10^4 trials")
    rng = np.random.default_rng(seed)
    probs = np.broadcast_to(np.asarray(p, dtype=float), (eta,))
    if np.any((probs <= 0) | (probs >= 1)):
        raise ValueError("probabilities must lie in (0, 1)")
    mu = float(probs.sum())
    threshold = (1 + delta) * mu
    if np.all(probs == probs[0]):
        x = rng.binomial(eta, probs[0], size=trials)
    else:
        x = np.empty(trials, dtype=np.int64)
        chunk = max(1, 2_000_000 // eta)
        for lo in range(0, trials, chunk):
            hi = min(trials, lo + chunk)
            x[lo:hi] = (rng.random((hi - lo, eta)) < probs).sum(axis=1)
    # tiny slack so that (1+delta)*mu landing on an integer counts as reached
    return float(np.mean(x >= threshold - 1e-9))


def sampling_margin(prob: float, trials: int, k: float = 3.0) -> float:
    """k standard deviations of a Bernoulli frequency estimate."""
    return k * math.sqrt(max(prob * (1 - prob), 0.0) / trials)


def varsigma(params: ScalingParams) -> float:
    """Upper bound on flows addressed to a BS in another subsquare."""
    n, b, d = params.n, params.b, params.d
    return min(n, 2 * n * (1 - n ** (d - b)))


def dest_load_bound(params: ScalingParams) -> float:
    """Flows per BS holding with high probability: 2*varsigma / n**d."""
    return 2 * varsigma(params) / params.n ** params.d


def dest_load_monte_carlo(params: ScalingParams, trials: int = 1000, seed: int = 0) -> Dict[str, float]:
    """Throw floor(varsigma) flows uniformly on floor(n**d) BSs; report max-load statistics."""
    rng = np.random.default_rng(seed)
    flows = int(math.floor(varsigma(params)))
    n_bs = max(1, int(math.floor(params.n ** params.d)))
    bound = dest_load_bound(params)
    # uniform assignment of the flows is one multinomial draw per trial
    probs = np.full(n_bs, 1.0 / n_bs)
    maxima = np.array([rng.multinomial(flows, probs).max() for _ in range(trials)], dtype=float)
    return {"flows": flows, "bs": n_bs, "bound": bound,
            "mean_max": float(maxima.mean()), "worst_max": float(maxima.max()),
            "fraction_within": float(np.mean(maxima <= bound)), "seed": seed}


def cx_cy(params: ScalingParams) -> Tuple[float, float]:
    """Flows from sources sharing an x-coordinate, BSs sharing a y-coordinate."""
    n, b, d = params.n, params.b, params.d
    if d > b / 2:
        cx = min(2 * n ** (1.5 - b) - 2 * n ** (1 + d - 1.5 * b), 2 * n ** (1 - b / 2))
        cy = n ** (d - b / 2)
    else:
        cx = min(2 * n ** (1.5 - b) - 2 * params.c2 * n ** (1 - b), 2 * n ** (1 - b / 2))
        cy = params.c1
    return cx, cy


def subsquare_flow_bound(params: ScalingParams) -> float:
    """Bound on flows crossing one subsquare: C_x + (2 varsigma / n^d) C_y.

    With d == b every flow ends in its own subsquare, so no flow crosses any.
    """
    if params.regime == REGIME_ALL_BS:
        return 0.0
    cx, cy = cx_cy(params)
    return cx + dest_load_bound(params) * cy


def step2_throughput(params: ScalingParams) -> float:
    """Per-flow rate of the CR-router-to-BS step: c3 W / phi."""
    phi = subsquare_flow_bound(params)
    return math.inf if phi == 0 else params.c3 * params.W / phi


@dataclass(frozen=True)
class ThroughputClass:
    regime: str
    exponent: float              # order of n in the bandwidth-limited term
    w_dependent: bool
    binding: str                 # "n^(b-1)" or "W*n^(...)"
    value: float                 # min of the two terms at the given n and W


def throughput_class(params: ScalingParams) -> ThroughputClass:
    """Per-SU throughput order and which term of the minimum binds."""
    n, b, d, W = params.n, params.b, params.d, params.W
    access = n ** (b - 1)
    regime = params.regime
    if regime == REGIME_ALL_BS:
        return ThroughputClass(regime, b - 1, False, "n^(b-1)", access)
    e = b / 2 - 1 if regime == REGIME_DENSE_BS else d - 1
    backhaul = W * n ** e
    if access <= backhaul:
        return ThroughputClass(regime, e, True, "n^(b-1)", access)
    return ThroughputClass(regime, e, True, f"W*n^({e:g})", backhaul)


def throughput_value(n: float, b: float, d: float, W: float = 1.0) -> float:
    """Regime formula evaluated directly, usable on either side of d = b/2."""
    return throughput_class(ScalingParams(n, b, d, W)).value


def grid_route(src: Tuple[int, int], dst: Tuple[int, int],
               grid_dims: Tuple[int, int]) -> List[Tuple[int, int]]:
    """L-shaped subsquare path: along src's column to dst's row, then along that row."""
    nx, ny = grid_dims
    for x, y in (src, dst):
        if not (0 <= x < nx and 0 <= y < ny):
            raise ValueError(f"subsquare {(x, y)} outside a {nx}x{ny} grid")
    (x0, y0), (x1, y1) = src, dst
    path = [(x0, y0)]
    step = 1 if y1 > y0 else -1
    for y in range(y0 + step, y1 + step, step) if y1 != y0 else ():
        path.append((x0, y))
    step = 1 if x1 > x0 else -1
    for x in range(x0 + step, x1 + step, step) if x1 != x0 else ():
        path.append((x, y1))
    return path


def bs_layout(side: int, per_row: int) -> np.ndarray:
    """Boolean side x side mask with ``per_row`` BSs in every row and column."""
    if side % per_row:
        raise ValueError("per_row must divide the grid side")
    gap = side // per_row
    mask = np.zeros((side, side), dtype=bool)
    for y in range(side):
        for j in range(per_row):
            mask[y, (y % gap) + j * gap] = True
    return mask


def route_load_monte_carlo(side: int, per_row: int, flows_per_subsquare: int,
                           trials: int = 20, seed: int = 0) -> np.ndarray:
    """Max per-subsquare relay load over random BS targets, one value per trial.

    Flows from a BS subsquare stay there; every other subsquare sends each
    flow to a uniformly chosen BS along :func:`grid_route`.
    """
    rng = np.random.default_rng(seed)
    mask = bs_layout(side, per_row)
    bs = np.argwhere(mask)              # rows of (y, x)
    out = np.empty(trials)
    for t in range(trials):
        load = np.zeros((side, side), dtype=np.int64)
        for y in range(side):
            for x in range(side):
                if mask[y, x]:
                    continue
                targets = rng.integers(0, len(bs), size=flows_per_subsquare)
                counts = np.bincount(targets, minlength=len(bs))
                for k in counts.nonzero()[0]:
                    cnt = int(counts[k])
                    ty, tx = bs[k]
                    for px, py in grid_route((x, y), (int(tx), int(ty)), (side, side)):
                        load[py, px] += cnt
        out[t] = load.max()
    return out


def scaling_rows(points: Sequence[ScalingParams]) -> List[Dict[str, object]]:
    """One CSV-ready row of closed-form values per parameter point."""
    rows = []
    for p in points:
        tc = throughput_class(p)
        cx, cy = cx_cy(p) if p.regime != REGIME_ALL_BS else (math.nan, math.nan)
        rows.append({"n": p.n, "b": p.b, "d": p.d, "W": p.W, "c1": p.c1, "c2": p.c2, "c3": p.c3,
                     "regime": tc.regime, "varsigma": varsigma(p),
                     "dest_load_bound": dest_load_bound(p), "C_x": cx, "C_y": cy,
                     "phi_bound": subsquare_flow_bound(p), "xi": tc.value,
                     "binding": tc.binding, "exponent": tc.exponent})
    return rows
