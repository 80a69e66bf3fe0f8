"""End-to-end command-line behavior: outputs, exit codes, composability."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from support import A, C, make_demo
from tdasim import save_scenario
from tdasim.cli import main


@pytest.fixture()
def demo_file(tmp_path):
    path = tmp_path / "demo.json"
    save_scenario(make_demo(), path)
    return str(path)


@pytest.fixture()
def attacked_file(tmp_path):
    path = tmp_path / "attacked.json"
    save_scenario(make_demo({A: 5, C: 6}), path)
    return str(path)


def run_ok(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return out


# ---------------------------------------------------------------------------
# happy paths

def test_generate_is_deterministic(tmp_path, capsys):
    one = run_ok(capsys, ["generate", "--preset", "table2-row1", "--seed", "1"])
    two = run_ok(capsys, ["generate", "--preset", "table2-row1", "--seed", "1"])
    assert one == two
    doc = json.loads(one)
    assert len(doc["nodes"]) == 7
    assert len(doc["windows"]) == 10
    assert len(doc["attack"]) == 2


def test_generate_out_matches_stdout(tmp_path, capsys):
    text = run_ok(capsys, ["generate", "--preset", "table2-row1", "--seed", "2"])
    out = tmp_path / "s.json"
    run_ok(capsys, ["generate", "--preset", "table2-row1", "--seed", "2",
                    "--out", str(out)])
    assert out.read_text() == text


def test_graph_json(demo_file, capsys):
    doc = json.loads(run_ok(capsys, ["graph", "--scenario", demo_file]))
    assert len(doc["vertices"]) == 22
    assert len(doc["edges"]) == 39


def test_graph_dot(demo_file, capsys):
    dot = run_ok(capsys, ["graph", "--scenario", demo_file, "--format", "dot"])
    assert dot.startswith("digraph")
    assert '"B^3.2" -> "B^5.1"' in dot or '"B^5.1" -> "B^3.2"' in dot


def test_simulate_benign(demo_file, capsys):
    doc = json.loads(run_ok(capsys, ["simulate", "--scenario", demo_file]))
    assert doc["delivered"] is True
    assert [h["node"] for h in doc["hops"]] == [0, 1, 2, 3, 6]
    assert [h["t"] for h in doc["hops"]] == [0.0, 6.0, 26.0, 27.0, 91.0]


def test_detect_both_modes(attacked_file, capsys):
    doc = json.loads(run_ok(capsys, ["detect", "--scenario", attacked_file]))
    assert doc["global"]["flagged"] == ["A", "C"]
    assert doc["local"]["flagged"] == ["A", "C"]


def test_detect_single_mode(attacked_file, capsys):
    doc = json.loads(
        run_ok(capsys, ["detect", "--scenario", attacked_file, "--mode", "global"])
    )
    assert doc["mode"] == "global"
    assert doc["flagged"] == ["A", "C"]
    assert doc["fp_weight"] == 151.0


def test_metrics_scenario(attacked_file, capsys):
    doc = json.loads(run_ok(capsys, ["metrics", "--scenario", attacked_file]))
    assert doc["flagged"] == {"global": ["A", "C"], "local": ["A", "C"]}
    assert doc["precision"] == {"global": 1.0, "local": 1.0}
    assert doc["runtime"] == {}  # reports must not embed wall-clock noise


def test_metrics_eor_csv(capsys):
    text = run_ok(capsys, ["metrics", "--eor", "--hops", "4,5,7,10,15",
                           "--format", "csv"])
    lines = text.strip().splitlines()
    assert lines[0] == "hops,global,local,hotd"
    assert lines[1] == "4,0.035714,0.028571,0.187500"
    assert lines[-1] == "15,0.114286,0.028571,0.600000"


def test_metrics_eor_json(capsys):
    doc = json.loads(run_ok(capsys, ["metrics", "--eor", "--hops", "4,15"]))
    assert doc["hops"] == [4, 15]
    assert doc["eor"]["local"] == [40 / 1400, 40 / 1400]
    assert doc["eor"]["hotd"][0] == pytest.approx(0.1875)


def test_metrics_runs_batch(capsys):
    batch = json.loads(run_ok(capsys, [
        "metrics", "--preset", "table2-row1", "--seed", "5", "--runs", "3",
    ]))
    assert [r["seed"] for r in batch["runs"]] == [5, 6, 7]
    single = json.loads(run_ok(capsys, [
        "metrics", "--preset", "table2-row1", "--seed", "6",
    ]))
    middle = {k: v for k, v in batch["runs"][1].items() if k != "seed"}
    assert middle == single
    for row in batch["runs"]:
        assert row["precision"] == {"global": 1.0, "local": 1.0}
        assert row["recall"]["local"] == 1.0


def test_all_composes_exactly_like_the_stages(attacked_file, tmp_path, capsys):
    outdir = tmp_path / "bundle"
    assert main(["all", "--scenario", attacked_file, "--out", str(outdir)]) == 0
    capsys.readouterr()
    expected = {
        "scenario.json": None,
        "graph.json": ["graph", "--scenario", attacked_file],
        "trace.json": ["simulate", "--scenario", attacked_file],
        "detect.json": ["detect", "--scenario", attacked_file],
        "metrics.json": ["metrics", "--scenario", attacked_file],
    }
    assert {p.name for p in outdir.iterdir()} == set(expected)
    for name, argv in expected.items():
        if argv is None:
            continue
        assert (outdir / name).read_text() == run_ok(capsys, argv), name


def test_all_from_preset_composes(tmp_path, capsys):
    outdir = tmp_path / "bundle"
    assert main(["all", "--preset", "table2-row1", "--seed", "4",
                 "--out", str(outdir)]) == 0
    capsys.readouterr()
    scenario = run_ok(capsys, ["generate", "--preset", "table2-row1", "--seed", "4"])
    assert (outdir / "scenario.json").read_text() == scenario
    saved = tmp_path / "s.json"
    saved.write_text(scenario)
    detect = run_ok(capsys, ["detect", "--scenario", str(saved)])
    assert (outdir / "detect.json").read_text() == detect


def test_console_entry_point(demo_file):
    proc = subprocess.run(
        [sys.executable, "-m", "tdasim.cli", "simulate", "--scenario", demo_file],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["delivered"] is True


# ---------------------------------------------------------------------------
# exit codes

@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["unknown-subcommand"],
        ["generate"],  # no preset
        ["simulate"],  # no scenario
        ["graph"],
        ["detect"],
        ["metrics"],  # neither scenario nor preset
        ["metrics", "--eor"],  # --eor without --hops
        ["metrics", "--eor", "--hops", "4,x"],
        ["metrics", "--eor", "--hops", "0,4"],
        ["metrics", "--runs", "2"],  # --runs without --preset
        ["all"],  # no out
        ["graph", "--format", "yaml"],
        ["detect", "--mode", "sideways"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    capsys.readouterr()


def test_scenario_and_preset_conflict_exits_1(demo_file, capsys):
    code = main(["metrics", "--scenario", demo_file, "--preset", "table2-row1"])
    assert code == 1
    capsys.readouterr()


def test_metrics_csv_without_eor_exits_1(demo_file, capsys):
    assert main(["metrics", "--scenario", demo_file, "--format", "csv"]) == 1
    capsys.readouterr()


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "nope.json")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_invalid_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": []}')
    assert main(["graph", "--scenario", str(bad)]) == 2
    capsys.readouterr()


def test_unknown_preset_exits_2(capsys):
    assert main(["generate", "--preset", "table9-row9"]) == 2
    err = capsys.readouterr().err
    assert "unknown preset" in err


def test_detect_on_dropped_message_exits_2(tmp_path, capsys):
    path = tmp_path / "dropped.json"
    save_scenario(make_demo({C: 1000}), path)
    assert main(["detect", "--scenario", str(path)]) == 2
    err = capsys.readouterr().err
    assert "dropped" in err
