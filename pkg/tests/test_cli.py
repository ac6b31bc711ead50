import csv
import json

import pytest

from fronthaul.cli import main

SMALL = {
    "topology": {"L": 100, "g_s": 10, "g_m": 2, "region_side": 600},
    "mmw": {"n_draws": 2},
    "sweep": {"W": [2], "G": [15], "p": [0.1]},
    "resilience_runs": 3,
}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL), encoding="utf-8")
    return p


def test_plan_writes_solutions(tmp_path, config, capsys):
    out = tmp_path / "plan"
    assert main(["plan", "--config", str(config), "--out", str(out), "--seed", "4"]) == 0
    text = capsys.readouterr().out
    assert "optimized" in text and "heuristic" in text
    plan = json.loads((out / "plan.json").read_text())
    assert set(plan["plans"]) == {"optimized", "all_fiber", "all_mmw", "heuristic"}
    assert (out / "budgets.csv").exists() and (out / "plan_optimized.csv").exists()


def test_sweep_command(tmp_path, config, capsys):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(config), "--out", str(out), "--realizations", "2",
                 "--fs", "both", "--scheme", "hs"]) == 0
    with open(out / "records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 4
    assert {r["scheme"] for r in rows} == {"hs"} and {r["fs"] for r in rows} == {"7.2x", "8"}
    assert json.loads((out / "run_meta.json").read_text())["runtime_s"]["wall"] > 0
    assert "16 records" in capsys.readouterr().out


def test_resilience_command(tmp_path, config):
    out = tmp_path / "res"
    assert main(["resilience", "--config", str(config), "--out", str(out), "--realizations", "2"]) == 0
    with open(out / "resilience_summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["scheme"] for r in rows} == {"rs", "hs"}
    assert all(int(r["runs"]) == 6 for r in rows)
    assert (out / "plotdata" / "failure_vs_p.csv").exists()


def test_linkbudget_command(capsys):
    assert main(["linkbudget", "50", "600", "--draws", "2"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0][:4] == ["d_m", "rate_fiber_bps", "rate_mmw_bps", "rate_fso_bps"]
    assert rows[1][1] == "10000000000"
    assert "O" in rows[1][4] and "O" not in rows[2][4]


def test_traffic_field_command(tmp_path, capsys):
    out = tmp_path / "tf"
    assert main(["traffic-field", "--out", str(out), "--grid", "4"]) == 0
    with open(out / "traffic_grid.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert all(1e9 <= int(r["demand_bps"]) <= 9.5e9 for r in rows)
    assert "hotspots" in capsys.readouterr().out


def test_bad_config_exits_with_code_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"sla": 2}', encoding="utf-8")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert "sla" in capsys.readouterr().err
    assert main(["sweep", "--config", str(tmp_path / "missing.json")]) == 2


def test_console_script_help(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    assert "linkbudget" in capsys.readouterr().out
