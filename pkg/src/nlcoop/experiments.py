"""Pipeline glue, parameter sweeps and result emission."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from . import __version__
from .conflict import ConflictGraph, build_conflict_graph
from .llc import LlcConfig, llc_active_throughput, llc_completion_time
from .lp import OPTIMAL, SolverError
from .mis import DEFAULT_BUDGET, MIS_MODES, MisCollection, search_mis, sio_mis
from .netmodel import Scenario, derive_links
from .nlc import (
    NlcSolution, expected_throughput, idle_collection, select_control_interval, solve_nlc,
)
from .scenarios import scenario_to_dict

log = logging.getLogger(__name__)

SWEEP_VARS = ("D", "r_PCR", "r_CR", "T_common", "alpha", "rho", "budget")
COMPARE_MODES = ("nlc", "llc", "both")

# MIS collections depend on geometry only, so sweeps over rates, volumes and
# lengths reuse them. Keys hold everything that shapes the conflict graph.
_MIS_CACHE: Dict[tuple, List[Tuple[int, ...]]] = {}


def _geometry_key(sc: Scenario, mode: str, budget: int, seed: int) -> tuple:
    return (sc.nodes, tuple((s.id, s.path) for s in sc.sessions), sc.radio.gamma,
            sc.radio.pathloss_n, tuple(sorted(sc.radio.p_t.items())),
            tuple(sorted(sc.radio.p_r.items())), tuple(sorted(sc.radio.p_i.items())),
            mode, budget, seed)


@dataclass
class Pipeline:
    """Links, conflict graph and MIS collection for one scenario."""
    scenario: Scenario
    graph: ConflictGraph
    mis: MisCollection

    @classmethod
    def build(cls, scenario: Scenario, mode: str = "augmented", budget: int = DEFAULT_BUDGET,
              seed: int = 0, mis: Optional[MisCollection] = None) -> "Pipeline":
        graph = build_conflict_graph(scenario, derive_links(scenario))
        if mis is None:
            key = _geometry_key(scenario, mode, budget, seed)
            if key not in _MIS_CACHE:
                found = search_mis(graph, scenario.sessions, scenario.edge_routers,
                                   [scenario.base_station], mode, budget, seed)
                _MIS_CACHE[key] = list(found.sets)
            mis = MisCollection(graph, list(_MIS_CACHE[key]))
        return cls(scenario, graph, mis)

    def idle(self, mode: str, budget: int, seed: int) -> "Pipeline":
        """Same network with the spectrum free of PUs."""
        sc = self.scenario.without_sessions()
        graph = build_conflict_graph(sc, derive_links(sc))
        if mode == "exact":
            base = search_mis(graph, (), sc.edge_routers, [sc.base_station], "exact")
        else:
            base = sio_mis(graph, sc.edge_routers, [sc.base_station], budget, seed)
        return Pipeline(sc, graph, idle_collection(graph, self.mis, base))


def apply_sweep(sc: Scenario, var: str, value: float) -> Scenario:
    if var == "D":
        sessions = tuple(s.__class__(s.id, s.path, s.length_s, float(value)) for s in sc.sessions)
        return sc.with_(sessions=sessions)
    if var == "T_common":
        sessions = tuple(s.__class__(s.id, s.path, float(value), s.volume_bits) for s in sc.sessions)
        return sc.with_(sessions=sessions)
    if var == "r_PCR":
        return sc.with_(rate_pcr=float(value))
    if var == "r_CR":
        return sc.with_(rate_cr=float(value))
    if var == "alpha":
        return sc.with_(alpha=float(value))
    if var == "rho":
        return sc.with_(rho=float(value))
    if var == "budget":
        return sc
    raise ValueError(f"unknown sweep variable {var!r}; choose from {SWEEP_VARS}")


@dataclass
class ExperimentSpec:
    scenario: Scenario
    sweep: str
    values: Sequence[float]
    compare: str = "nlc"
    mis_mode: str = "augmented"
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    tolerance: float = 1e-9
    label: str = ""
    jobs: int = 1

    def __post_init__(self):
        if self.sweep not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep!r}; choose from {SWEEP_VARS}")
        if not self.values or not all(math.isfinite(float(v)) for v in self.values):
            raise ValueError("sweep values must be a non-empty list of finite numbers")
        if self.compare not in COMPARE_MODES:
            raise ValueError(f"compare must be one of {COMPARE_MODES}")
        if self.mis_mode not in MIS_MODES:
            raise ValueError(f"MIS mode must be one of {MIS_MODES}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


def evaluate(scenario: Scenario, compare: str = "both", mis_mode: str = "augmented",
             budget: int = DEFAULT_BUDGET, seed: int = 0, tolerance: float = 1e-9,
             mis: Optional[MisCollection] = None) -> Dict[str, Any]:
    """Run the full pipeline on one scenario and return a flat result row."""
    t0 = time.perf_counter()
    sc = scenario
    sids = [s.id for s in sc.sessions]
    row: Dict[str, Any] = {
        "alpha": sc.alpha, "rho": sc.rho, "rate_cr_bps": sc.rate_cr, "rate_pcr_bps": sc.rate_pcr,
        "rate_primary_bps": sc.rate_primary,
        "lengths_s": ";".join(f"{s.length_s:g}" for s in sc.sessions),
        "volumes_bits": ";".join(f"{s.volume_bits:g}" for s in sc.sessions),
        "mis_mode": mis_mode, "budget": budget, "seed": seed, "status": "ok", "error": "",
    }
    try:
        pipe = Pipeline.build(sc, mis_mode, budget, seed, mis)
        idle_pipe = pipe.idle(mis_mode, budget, seed)
        idle = solve_nlc(idle_pipe.scenario, idle_pipe.graph, idle_pipe.mis,
                         tolerance=tolerance, completion=False)
        row["Q"] = len(pipe.mis)
        row["idle_bps"] = idle.objective
        if compare in ("nlc", "both"):
            sol = solve_nlc(sc, pipe.graph, pipe.mis, tolerance=tolerance)
            if sol.status != OPTIMAL:
                raise SolverError(f"NLC problem reported {sol.status}")
            if not sol.verify(tolerance):
                raise SolverError("NLC solution fails constraint replay")
            row["T_s"] = sol.interval.T
            row["fallback"] = int(sol.interval.fallback)
            row["theta"] = "".join(str(t) for t in sol.theta)
            row["nlc_active_bps"] = sol.objective
            row["nlc_expected_bps"] = expected_throughput(sol.objective, idle.objective, sc.rho)
            row["lps_solved"] = sol.lps_solved
            for sid in sids:
                c = sol.completion.get(sid)
                row[f"nlc_completion_s[{sid}]"] = "" if c is None else c
        if compare in ("llc", "both"):
            cfg = LlcConfig.for_scenario(sc)
            T = select_control_interval(sc, pipe.graph).T
            active = llc_active_throughput(sc, cfg, T)
            row["llc_active_bps"] = active
            row["llc_expected_bps"] = expected_throughput(active, idle.objective, sc.rho)
            for s in sc.sessions:
                row[f"llc_completion_s[{s.id}]"] = llc_completion_time(s, cfg)
    except (SolverError, ValueError) as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["_wall_ms"] = (time.perf_counter() - t0) * 1e3
    return row


def _run_point(args):
    spec, idx, value = args
    sc = apply_sweep(spec.scenario, spec.sweep, value)
    budget = int(value) if spec.sweep == "budget" else spec.budget
    row = {"label": spec.label, "sweep": spec.sweep, "value": float(value), "point": idx}
    row.update(evaluate(sc, spec.compare, spec.mis_mode, budget, spec.seed, spec.tolerance))
    return row


def run_experiment(spec: ExperimentSpec) -> List[Dict[str, Any]]:
    """One row per sweep value, in sweep order, independent of ``jobs``."""
    tasks = [(spec, i, v) for i, v in enumerate(spec.values)]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            rows = list(pool.map(_run_point, tasks))
    else:
        rows = [_run_point(t) for t in tasks]
    return sorted(rows, key=lambda r: r["point"])


FIXED_COLUMNS = ("label", "sweep", "value", "point", "alpha", "rho", "rate_cr_bps", "rate_pcr_bps",
                 "rate_primary_bps", "lengths_s", "volumes_bits", "mis_mode", "budget", "seed", "Q",
                 "T_s", "fallback", "theta", "idle_bps", "nlc_active_bps", "nlc_expected_bps",
                 "llc_active_bps", "llc_expected_bps", "lps_solved", "status", "error")


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return str(v)


def csv_columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    extra = sorted({k for r in rows for k in r if k not in FIXED_COLUMNS and not k.startswith("_")})
    present = {k for r in rows for k in r}
    return [c for c in FIXED_COLUMNS if c in present] + extra


def rows_to_csv(rows: Sequence[Dict[str, Any]]) -> str:
    cols = csv_columns(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def run_metadata(**params) -> Dict[str, Any]:
    return {"package": "nlcoop", "version": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, **params}


def emit_plotdata(rows: Sequence[Dict[str, Any]], path: os.PathLike | str,
                  metadata: Optional[Dict[str, Any]] = None) -> Tuple[Path, Path]:
    """Write ``path`` as CSV and ``path`` with a .json suffix as run metadata.

    The CSV holds only deterministic values; wall-clock timings go to the
    sidecar so that identical runs produce identical CSV bytes.
    """
    if not rows:
        raise ValueError("no rows to emit")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    side = path.with_suffix(".json")
    meta = dict(metadata or run_metadata())
    meta["rows"] = len(rows)
    meta["columns"] = csv_columns(rows)
    meta["wall_ms"] = [r.get("_wall_ms") for r in rows]
    side.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path, side


def solution_report(sol: NlcSolution, pipe: Pipeline) -> Dict[str, Any]:
    """JSON-ready description of an NLC solution."""
    sc = pipe.scenario
    labels = pipe.graph.labels()
    iv = sol.interval
    rep: Dict[str, Any] = {
        "status": sol.status,
        "objective_bps": sol.objective,
        "theta": {s.id: t for s, t in zip(sc.sessions, sol.theta)},
        "control_interval_s": iv.T,
        "breakpoints_s": list(iv.breakpoints),
        "session_order": list(iv.order),
        "fallback": iv.fallback,
        "Q": len(pipe.mis),
        "lps_solved": sol.lps_solved,
    }
    if sol.status != OPTIMAL:
        return rep
    intervals = []
    for m in range(1, len(iv.breakpoints)):
        shares = [{"q": q, "share": float(sol.lam[m - 1, q]),
                   "mis": sorted(labels[v] for v in pipe.mis.sets[q])}
                  for q in np.flatnonzero(sol.lam[m - 1] > 0).tolist()]
        intervals.append({"m": m, "start_s": iv.breakpoints[m - 1], "end_s": iv.breakpoints[m],
                          "shares": shares})
    rep["lambda"] = intervals
    rep["upsilon_bps"] = sol.upsilon
    rep["secondary_flows"] = [{"router": r, "tx": a, "rx": b, "rate_bps": v}
                              for (r, (a, b)), v in sorted(sol.f.items())]
    rep["primary_flows"] = [{"session": s, "tx": a, "rx": b, "rate_bps": v}
                            for (s, (a, b)), v in sorted(sol.fp.items())]
    rep["completion_s"] = dict(sol.completion)
    return rep


def scenario_metadata(sc: Scenario) -> Dict[str, Any]:
    return {"scenario": scenario_to_dict(sc)}
