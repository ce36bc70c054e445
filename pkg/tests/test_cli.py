import csv
import io
import json

import pytest

from nlcoop import experiments
from nlcoop.cli import EXIT_INPUT, EXIT_OK, main
from nlcoop.experiments import ExperimentSpec, emit_plotdata, run_experiment
from nlcoop.scenarios import dump_scenario, toy_scenario


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.json"
    with open(path, "w") as fh:
        dump_scenario(toy_scenario(), fh)
    return str(path)


def test_pipeline_commands(tmp_path, toy_file):
    links, graph, mis = (str(tmp_path / n) for n in ("links.csv", "g.txt", "mis.txt"))
    assert main(["links", toy_file, "--out", links]) == EXIT_OK
    assert main(["graph", toy_file, "--out", graph]) == EXIT_OK
    assert main(["mis", toy_file, "--mis-mode", "exact", "--out", mis]) == EXIT_OK
    assert len(open(mis).read().splitlines()) == 7
    rep, row, lp = (str(tmp_path / n) for n in ("rep.json", "row.csv", "lp.txt"))
    assert main(["solve", toy_file, "--mis-file", mis, "--out", rep, "--csv", row,
                 "--dump-lp", lp]) == EXIT_OK
    report = json.load(open(rep))
    assert report["objective_bps"] == pytest.approx(2.9e6)
    assert open(lp).read().startswith("maximize")
    assert next(csv.DictReader(open(row)))["status"] == "ok"


def test_gen_grid_and_compare(tmp_path, capsys):
    grid = str(tmp_path / "grid.json")
    assert main(["gen-grid", "--sessions", "2", "--out", grid]) == EXIT_OK
    assert main(["compare", grid, "--mis-mode", "sio", "--budget", "5"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["status"] == "ok" and rows[0]["llc_active_bps"] == "0.0"


def test_llc_and_scaling_output(toy_file, capsys):
    assert main(["llc", toy_file, "--frame", "0.02"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["frame_s"] == 0.02 and doc["sessions"][0]["frames"] == 1500
    assert main(["scaling", "--n", "1e4", "--d", "0.4,0.8", "--trials", "20"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["regime"] for r in rows] == ["d<=b/2", "d=b"]


@pytest.mark.parametrize("argv", [
    ["solve", "missing.json"],
    ["scaling", "--b", "0.5", "--d", "0.9"],
    ["experiment", "--sweep", "D"],
    ["nonsense"],
])
def test_bad_input_exits_2(argv):
    assert main(argv) == EXIT_INPUT


def test_malformed_scenario_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "nlcoop-scenario/1", "nodes": [{"id": "x"}]}')
    assert main(["solve", str(bad)]) == EXIT_INPUT


def test_experiment_cli_writes_sidecar(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["experiment", "--sweep", "D", "--values", "1e6,2e7", "--mis-mode", "sio",
                 "--budget", "4", "--out", str(out)])
    assert code == EXIT_OK
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["rows"] == 2 and len(side["wall_ms"]) == 2
    assert "_wall_ms" not in out.read_text()


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(toy_scenario(), "nope", [1.0])
    with pytest.raises(ValueError):
        ExperimentSpec(toy_scenario(), "D", [])
    with pytest.raises(ValueError):
        ExperimentSpec(toy_scenario(), "D", [1.0], compare="x")


def test_sweep_rows_byte_identical(tmp_path):
    spec = ExperimentSpec(toy_scenario(), "D", [0.0, 1e6, 4e7], compare="both", mis_mode="exact")
    paths = []
    for k in range(2):
        experiments._MIS_CACHE.clear()
        p = tmp_path / f"run{k}.csv"
        emit_plotdata(run_experiment(spec), p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = list(csv.DictReader(open(paths[0])))
    assert [float(r["nlc_active_bps"]) for r in rows] == pytest.approx([3e6, 2.9e6, 0.0], abs=1e-3)
