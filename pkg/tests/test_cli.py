import json
import shutil
from pathlib import Path

import pytest
import yaml

from hubplan.cli import main, read_result
from hubplan.hub_model import build_topology, load_hub

DATA = Path(__file__).resolve().parents[1] / "data" / "desk_a"


@pytest.fixture
def work(tmp_path):
    for name in ("hub.yaml", "scenarios.csv"):
        shutil.copy(DATA / name, tmp_path / name)
    shutil.copytree(DATA / "series", tmp_path / "series")
    return tmp_path


def manifest(work, name="run.yaml", **keys):
    doc = {"hub": "hub.yaml", "scenarios": "scenarios.csv", "seed": 0, "output": "out"}
    doc.update(keys)
    path = work / name
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def test_validate_ok(work, capsys):
    code = main(["validate", "--hub", str(work / "hub.yaml"), "--scenarios", str(work / "scenarios.csv"),
                 "--series", f"heat={work / 'series' / 'heat.csv'}"])
    assert code == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_bad_hub_is_a_data_error(work, capsys):
    text = (work / "hub.yaml").read_text().replace("heat: 0.9", "heat: -0.9")
    (work / "bad.yaml").write_text(text)
    assert main(["validate", "--hub", str(work / "bad.yaml")]) == 1
    assert "line" in capsys.readouterr().out


def test_usage_errors(work, capsys):
    assert main([]) == 2
    assert main(["solve"]) == 2
    assert main(["solve", "--manifest", str(manifest(work)), "--bogus"]) == 2
    assert main(["solve", "--manifest", str(manifest(work, framework="F7"))]) == 2
    assert "invalid framework id 'F7'" in capsys.readouterr().err
    assert main(["solve", "--manifest", str(manifest(work, colour="red"))]) == 2


def test_missing_file_is_a_data_error(work):
    path = manifest(work, hub="nope.yaml")
    assert main(["solve", "--manifest", str(path)]) == 1


def test_solve_f1_and_round_trip(work, capsys):
    path = manifest(work, framework="F1")
    assert main(["solve", "--manifest", str(path)]) == 0
    out = capsys.readouterr().out
    assert "total cost: 41,355.6" in out
    assert "max annual emissions: 146.8111 t" in out
    assert "complexity, built model" in out
    files = sorted(p.name for p in (work / "out").iterdir())
    assert files == ["dispatch.csv", "result.json", "summary.txt"]
    topo = build_topology(load_hub(work / "hub.yaml"))
    from hubplan.scenarios import scenarios_from_csv
    scen = scenarios_from_csv((work / "scenarios.csv").read_text()).with_energies(topo.energies)
    res = read_result(work / "out" / "result.json", topo, scen)
    doc = json.loads((work / "out" / "result.json").read_text())
    doc.pop("manifest")
    assert res.as_dict() | {"wall_time": None} == doc
    # grid capacity is free, so any gas grid of at least 1.25 MW is optimal
    assert res.plan.units == {"AB": 1} and res.plan.grid["gas"] >= 5


def test_solve_is_deterministic(work):
    path = manifest(work, framework="F3", emission_cap=100)
    assert main(["solve", "--manifest", str(path), "--output", str(work / "a")]) == 0
    assert main(["solve", "--manifest", str(path), "--output", str(work / "b")]) == 0
    for name in ("result.json", "summary.txt", "dispatch.csv"):
        assert (work / "a" / name).read_bytes() == (work / "b" / name).read_bytes()


def test_infeasible_cap_exits_with_data_error(work, capsys):
    path = manifest(work, framework="F1", emission_cap=60)
    assert main(["solve", "--manifest", str(path)]) == 1
    assert "below the minimum achievable 73 t/yr" in capsys.readouterr().out


def test_budget_exhaustion_exits_3(work, capsys):
    path = manifest(work, framework="F3", emission_cap=100, heuristic=False,
                    budgets={"node_limit": 1})
    assert main(["solve", "--manifest", str(path)]) == 3
    assert "status: node_limit" in capsys.readouterr().out


def test_reduce_days_and_series_manifest(work, capsys):
    series = [f"{m}={work / 'series' / f'{m}.csv'}" for m in ("elec", "gas", "heat")]
    args = ["reduce-days", "--k", "1", "--out", str(work / "red.csv")]
    for s in series:
        args += ["--series", s]
    assert main(args) == 0
    assert "probability 1" in capsys.readouterr().out
    path = manifest(work, scenarios=None, series={m: f"series/{m}.csv" for m in ("elec", "gas", "heat")},
                    reduce={"k": 1})
    assert main(["solve", "--manifest", str(path)]) == 0


def test_pareto_writes_frontiers(work, capsys):
    path = manifest(work, frameworks=["F1", "F3"], resolution=2)
    assert main(["pareto", "--manifest", str(path)]) == 0
    out = work / "out"
    assert sorted(p.name for p in out.iterdir()) == ["frontier_F1.csv", "frontier_F3.csv",
                                                      "frontier_combined.csv"]
    rows = (out / "frontier_combined.csv").read_text().splitlines()
    assert len(rows) == 3
    for row in rows[1:]:
        _, f1, f3 = row.split(",")
        assert float(f1) <= float(f3) + 1e-6
    first = (out / "frontier_combined.csv").read_bytes()
    assert main(["pareto", "--manifest", str(path)]) == 0
    assert (out / "frontier_combined.csv").read_bytes() == first


def test_pareto_resolution_one(work):
    path = manifest(work, framework="F1")
    assert main(["pareto", "--manifest", str(path), "--resolution", "1"]) == 0
    assert len((work / "out" / "frontier_F1.csv").read_text().splitlines()) == 2


def test_report_table(work, capsys):
    path = manifest(work, framework="F1")
    assert main(["solve", "--manifest", str(path)]) == 0
    capsys.readouterr()
    assert main(["report", "--manifest", str(path), str(work / "out" / "result.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["target", "total", "investment", "net", "operational"]
    assert lines[2].split() == ["baseline", "41,355.6", "800.0", "40,555.6"]
