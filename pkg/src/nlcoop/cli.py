"""Command-line entry point: ``nlcoop <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .conflict import build_conflict_graph
from .experiments import (
    COMPARE_MODES, SWEEP_VARS, ExperimentSpec, Pipeline, apply_sweep, emit_plotdata, evaluate, rows_to_csv,
    run_experiment, run_metadata, scenario_metadata, solution_report,
)
from .llc import LlcConfig, llc_active_throughput, llc_completion_time, llc_frame_plan
from .lp import SolverError
from .mis import DEFAULT_BUDGET, MIS_MODES, read_mis
from .netmodel import ScenarioError, derive_links
from .nlc import select_control_interval, solve_nlc
from .scaling import ScalingParams, dest_load_monte_carlo, scaling_rows
from .scenarios import dump_scenario, generate_grid_scenario, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("nlcoop")


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path in (None, "-"):
        yield sys.stdout
    else:
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8") as fh:
            yield fh


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh)


def _pipeline(args, sc) -> Pipeline:
    if not getattr(args, "mis_file", None):
        return Pipeline.build(sc, args.mis_mode, args.budget, args.seed)
    graph = build_conflict_graph(sc, derive_links(sc))
    with open(args.mis_file, encoding="utf-8") as fh:
        return Pipeline(sc, graph, read_mis(fh, graph))


# -- subcommands ---------------------------------------------------------------

def cmd_gen_grid(args) -> int:
    lengths = args.lengths or [30, 30, 30, 60, 60]
    sc = generate_grid_scenario(alpha=args.alpha, rho=args.rho, rate_cr=args.rate_cr,
                                rate_pcr=args.rate_pcr, rate_primary=args.rate_primary,
                                lengths_s=lengths, volumes_bits=args.volume,
                                n_sessions=args.sessions, multihop=args.multihop)
    with _output(args.out) as fh:
        dump_scenario(sc, fh)
    return EXIT_OK


def cmd_links(args) -> int:
    sc = _load(args.scenario)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tx", "rx", "kind", "capacity_bps", "session"])
        for lk in derive_links(sc):
            w.writerow([lk.tx, lk.rx, lk.kind, repr(lk.capacity), lk.session or ""])
    return EXIT_OK


def cmd_graph(args) -> int:
    sc = _load(args.scenario)
    g = build_conflict_graph(sc, derive_links(sc))
    with _output(args.out) as fh:
        g.write_edgelist(fh)
    return EXIT_OK


def cmd_mis(args) -> int:
    sc = _load(args.scenario)
    pipe = Pipeline.build(sc, args.mis_mode, args.budget, args.seed)
    with _output(args.out) as fh:
        pipe.mis.write(fh)
    log.info("%d maximal independent sets", len(pipe.mis))
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = _load(args.scenario)
    pipe = _pipeline(args, sc)
    sol = solve_nlc(sc, pipe.graph, pipe.mis, branch_and_bound=args.branch_and_bound,
                    tolerance=args.tolerance)
    if sol.status != "optimal":
        raise SolverError(f"optimizer returned {sol.status}")
    if not sol.verify(args.tolerance):
        raise SolverError("solution fails constraint replay")
    rep = solution_report(sol, pipe)
    with _output(args.out) as fh:
        json.dump(rep, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.csv:
        row = evaluate(sc, "nlc", args.mis_mode, args.budget, args.seed, args.tolerance, pipe.mis)
        Path(args.csv).write_text(rows_to_csv([row]), encoding="utf-8")
    if args.dump_lp:
        with open(args.dump_lp, "w", encoding="utf-8") as fh:
            sol.model.fixed_lp(sol.theta).write(fh)
    return EXIT_OK


def cmd_llc(args) -> int:
    sc = _load(args.scenario)
    cfg = LlcConfig(frame_len=args.frame or sc.llc_frame)
    graph = build_conflict_graph(sc, derive_links(sc))
    T = select_control_interval(sc, graph).T
    plans = []
    for s in sc.sessions:
        p = llc_frame_plan(sc, s, cfg)
        plans.append({"session": s.id, "frames": p.n_frames, "payload_bits": p.payload_bits,
                      "completion_s": llc_completion_time(s, cfg),
                      "hops": [{"tx": h.tx, "rx": h.rx, "relay": h.relay, "cooperate": h.cooperate,
                                "delivery_s": h.delivery, "direct_s": h.direct,
                                "leftover_s": h.leftover, "relay_bs_rate_bps": h.relay_rate}
                               for h in p.hops]})
    out = {"frame_s": cfg.frame_len, "control_interval_s": T,
           "active_throughput_bps": llc_active_throughput(sc, cfg, T), "sessions": plans}
    with _output(args.out) as fh:
        json.dump(out, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _load(args.scenario)
    row = evaluate(sc, "both", args.mis_mode, args.budget, args.seed, args.tolerance)
    if row["status"] != "ok":
        raise SolverError(row["error"])
    with _output(args.out) as fh:
        fh.write(rows_to_csv([row]))
    return EXIT_OK


def cmd_scaling(args) -> int:
    points = [ScalingParams(n, b, d, args.W, args.c1, args.c2, args.c3)
              for n in args.n for b in args.b for d in args.d if 0 < d <= b < 1]
    if not points:
        raise ValueError("no parameter point satisfies 0 < d <= b < 1")
    rows = scaling_rows(points)
    if args.trials:
        for k, (r, p) in enumerate(zip(rows, points)):
            mc = dest_load_monte_carlo(p, trials=args.trials, seed=args.seed + k)
            r["dest_load_mc_fraction_within"] = mc["fraction_within"]
            r["dest_load_mc_worst"] = mc["worst_max"]
            r["mc_seed"] = args.seed + k
    with _output(args.out) as fh:
        fh.write(rows_to_csv(rows))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            doc = json.load(fh)
        base = _load(doc["scenario"]) if "scenario" in doc else generate_grid_scenario(
            multihop=bool(doc.get("multihop", False)))
        sweep, values = doc["sweep"], [float(v) for v in doc["values"]]
        compare = doc.get("compare", args.compare)
        label = doc.get("label", "")
        overrides = {k: doc[k] for k in ("alpha", "rho", "rate_cr", "rate_pcr", "rate_primary") if k in doc}
        if overrides:
            base = base.with_(**{k: float(v) for k, v in overrides.items()})
        if "volume_bits" in doc:
            base = apply_sweep(base, "D", float(doc["volume_bits"]))
    else:
        if not (args.sweep and args.values):
            raise ValueError("experiment needs --spec or both --sweep and --values")
        base = _load(args.scenario) if args.scenario else generate_grid_scenario(multihop=args.multihop)
        sweep, values, compare, label = args.sweep, args.values, args.compare, args.label
    spec = ExperimentSpec(base, sweep, values, compare, args.mis_mode, args.seed, args.budget,
                          args.tolerance, label, args.jobs)
    rows = run_experiment(spec)
    if args.out in (None, "-"):
        sys.stdout.write(rows_to_csv(rows))
    else:
        meta = run_metadata(seed=args.seed, sweep=sweep, values=list(values), compare=compare,
                            mis_mode=args.mis_mode, budget=args.budget, tolerance=args.tolerance,
                            label=label, **scenario_metadata(base))
        csv_path, side = emit_plotdata(rows, args.out, meta)
        log.info("wrote %s and %s", csv_path, side)
        if args.figures:
            from .plotting import render_sweep
            fig = render_sweep(rows, Path(args.out).with_suffix(".png"), title=label or None)
            log.info("wrote %s", fig)
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log.error("point %s=%s failed: %s", r["sweep"], r["value"], r["error"])
    return EXIT_SOLVER if failed and len(failed) == len(rows) else EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized MIS search (default 0)")
    common.add_argument("--tolerance", type=float, default=1e-9, help="LP feasibility tolerance")
    common.add_argument("--mis-mode", choices=MIS_MODES, default="augmented")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="MISs per SIO search")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nlcoop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-grid", parents=[common], help="write the 5x5 grid scenario as JSON")
    g.add_argument("--sessions", type=int, default=5)
    g.add_argument("--multihop", action="store_true", help="route session 4 through a PU relay")
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--rho", type=float, default=1.0)
    g.add_argument("--rate-cr", type=float, default=3e6)
    g.add_argument("--rate-pcr", type=float, default=3e6)
    g.add_argument("--rate-primary", type=float, default=1e6)
    g.add_argument("--volume", type=float, default=20e6, help="bits per session")
    g.add_argument("--lengths", type=_floats, default=None, help="seconds, comma-separated")
    g.set_defaults(func=cmd_gen_grid)

    for name, func, text in (("links", cmd_links, "list derived links as CSV"),
                             ("graph", cmd_graph, "write the conflict graph edge list"),
                             ("mis", cmd_mis, "write the MIS collection")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("scenario")
        s.set_defaults(func=func)

    s = sub.add_parser("solve", parents=[common], help="solve the NLC problem, JSON report")
    s.add_argument("scenario")
    s.add_argument("--mis-file", help="use a MIS collection written by 'mis'")
    s.add_argument("--csv", help="also write a one-row CSV summary here")
    s.add_argument("--dump-lp", help="write the LP of the chosen selection here")
    s.add_argument("--branch-and-bound", action="store_true",
                   help="best-first search over selections instead of enumeration")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("llc", parents=[common], help="frame plans and throughput of the LLC baseline")
    s.add_argument("scenario")
    s.add_argument("--frame", type=float, default=None, help="frame length in seconds")
    s.set_defaults(func=cmd_llc)

    s = sub.add_parser("compare", parents=[common], help="NLC vs LLC summary row")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("scaling", parents=[common], help="scaling-law table")
    s.add_argument("--n", type=_floats, default=[1e4, 1e6, 1e8])
    s.add_argument("--b", type=_floats, default=[0.8])
    s.add_argument("--d", type=_floats, default=[0.2, 0.4, 0.6, 0.8])
    s.add_argument("--W", type=float, default=1.0)
    s.add_argument("--c1", type=float, default=1.0)
    s.add_argument("--c2", type=float, default=1.0)
    s.add_argument("--c3", type=float, default=1.0)
    s.add_argument("--trials", type=int, default=0, help="dest-load Monte Carlo trials per point")
    s.set_defaults(func=cmd_scaling)

    s = sub.add_parser("experiment", parents=[common], help="parameter sweep to CSV")
    s.add_argument("--spec", help="JSON experiment description")
    s.add_argument("--scenario", help="scenario JSON (default: grid)")
    s.add_argument("--multihop", action="store_true")
    s.add_argument("--sweep", choices=SWEEP_VARS)
    s.add_argument("--values", type=_floats)
    s.add_argument("--compare", choices=COMPARE_MODES, default="both")
    s.add_argument("--label", default="")
    s.add_argument("--figures", action="store_true", help="also render a PNG next to the CSV")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ScenarioError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
