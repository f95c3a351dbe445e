from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from lakefuse.cli import run
from lakefuse.jsonio import read_json

FIXTURES = Path(__file__).parent / "fixtures"


def _copy_example1_lake(dest: Path) -> Path:
    dest.mkdir(parents=True, exist_ok=True)
    for name in ["t2_vaccination.csv", "t3_cases.csv", "t9_weather.csv"]:
        shutil.copy(FIXTURES / "example1" / name, dest / name)
    return dest


def _copy_example4_set(dest: Path) -> Path:
    dest.mkdir(parents=True, exist_ok=True)
    for name in ["t4_vaccines.csv", "t5_approvals.csv", "t6_vaccine_facts.csv"]:
        shutil.copy(FIXTURES / "example4" / name, dest / name)
    return dest


def test_index_builds_artifacts(tmp_path, capsys):
    lake = _copy_example1_lake(tmp_path / "lake")
    assert run(["index", "--lake", str(lake), "--seed", "7"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tables"] == 3
    assert (lake / "lake.manifest.json").exists()
    assert (lake / "join.index.bin").exists()
    assert (lake / "join.index.json").exists()


def test_discover_writes_results(tmp_path, capsys):
    lake = _copy_example1_lake(tmp_path / "lake")
    query = FIXTURES / "example1" / "t1_covid.csv"
    out_file = tmp_path / "results.json"
    code = run(
        [
            "discover",
            "--lake",
            str(lake),
            "--query",
            str(query),
            "--method",
            "unionable-match",
            "--k",
            "3",
            "--out",
            str(out_file),
        ]
    )
    assert code == 0
    obj = read_json(out_file)
    assert obj["results"][0]["table_id"] == "t2_vaccination.csv"
    printed = json.loads(capsys.readouterr().out)
    assert printed["results"] == obj["results"]


def test_discover_missing_lake_exits_1(tmp_path, capsys):
    code = run(
        [
            "discover",
            "--lake",
            str(tmp_path / "nope"),
            "--query",
            str(FIXTURES / "example1" / "t1_covid.csv"),
            "--method",
            "unionable-match",
        ]
    )
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["code"] == "unreadable_file"


def test_unknown_flag_exits_1(capsys):
    assert run(["discover", "--bogus", "x"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["code"] == "usage"


def test_unknown_method_exits_1(tmp_path, capsys):
    lake = _copy_example1_lake(tmp_path / "lake")
    code = run(
        [
            "discover",
            "--lake",
            str(lake),
            "--query",
            str(FIXTURES / "example1" / "t1_covid.csv"),
            "--method",
            "nope",
        ]
    )
    assert code == 1
    assert json.loads(capsys.readouterr().err)["code"] == "unknown_method"


def test_align_and_integrate_set(tmp_path, capsys):
    set_dir = _copy_example4_set(tmp_path / "set")
    mapping_file = tmp_path / "mapping.json"
    assert run(["align", "--set", str(set_dir), "--tau", "0.5", "--out", str(mapping_file)]) == 0
    mapping_obj = read_json(mapping_file)
    assert len(mapping_obj) == 5
    capsys.readouterr()

    out_csv = tmp_path / "fd.csv"
    code = run(
        [
            "integrate",
            "--set",
            str(set_dir),
            "--operator",
            "fd",
            "--mapping",
            str(mapping_file),
            "--out",
            str(out_csv),
        ]
    )
    assert code == 0
    assert out_csv.exists()
    assert Path(str(out_csv) + ".lineage.json").exists()
    summary = json.loads(capsys.readouterr().out)
    assert summary["operator"] == "fd"
    text = out_csv.read_text()
    assert "Johnson & Johnson" in text and "FDA" in text


def test_integrate_from_results_with_selection(tmp_path, capsys):
    lake = _copy_example1_lake(tmp_path / "lake")
    results = tmp_path / "results.json"
    run(
        [
            "discover",
            "--lake",
            str(lake),
            "--query",
            str(FIXTURES / "example1" / "t1_covid.csv"),
            "--method",
            "unionable-match",
            "--k",
            "3",
            "--out",
            str(results),
        ]
    )
    capsys.readouterr()
    out_csv = tmp_path / "out.csv"
    code = run(
        [
            "integrate",
            "--from-results",
            str(results),
            "--select",
            "t2_vaccination.csv,t3_cases.csv",
            "--operator",
            "fd",
            "--out",
            str(out_csv),
        ]
    )
    assert code == 0
    header = out_csv.read_text().splitlines()[0]
    assert header.startswith("I0")


def test_integrate_unknown_operator_exits_1(tmp_path, capsys):
    set_dir = _copy_example4_set(tmp_path / "set")
    code = run(
        ["integrate", "--set", str(set_dir), "--operator", "nope", "--out", str(tmp_path / "o.csv")]
    )
    assert code == 1
    assert json.loads(capsys.readouterr().err)["code"] == "unknown_operator"


def test_analyze_pearson_on_linear_fixture(tmp_path, capsys):
    table = tmp_path / "t.csv"
    table.write_text("x,y\n1,2\n2,4\n3,6\n")
    spec = tmp_path / "spec.json"
    spec.write_text('{"kind": "correlate", "x": "x", "y": "y"}')
    out = tmp_path / "result.json"
    code = run(["analyze", "--table", str(table), "--spec", str(spec), "--out", str(out)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["result"]["coefficient"] == pytest.approx(1.0)
    assert read_json(out)["result"]["coefficient"] == pytest.approx(1.0)


def test_analyze_engine_error_exits(tmp_path, capsys):
    table = tmp_path / "t.csv"
    table.write_text("x,y\nA,2\nB,4\n")
    spec = tmp_path / "spec.json"
    spec.write_text('{"kind": "correlate", "x": "x", "y": "y"}')
    code = run(["analyze", "--table", str(table), "--spec", str(spec)])
    assert code == 1
    assert json.loads(capsys.readouterr().err)["code"] == "insufficient_pairs"


def test_gen_query_deterministic(capsys):
    assert run(["gen-query", "--prompt", "city stats", "--rows", "2", "--cols", "2"]) == 0
    first = capsys.readouterr().out
    assert run(["gen-query", "--prompt", "city stats", "--rows", "2", "--cols", "2"]) == 0
    second = capsys.readouterr().out
    assert first == second
    obj = json.loads(first)
    assert len(obj["rows"]) == 2


def test_cli_service_artifact_parity(tmp_path, capsys):
    """The same discovery through CLI and service yields byte-identical artifacts."""
    from fastapi.testclient import TestClient

    from lakefuse.config import Config
    from lakefuse.service import create_app
    from lakefuse.tables import ingest_lake

    lake_dir = _copy_example1_lake(tmp_path / "lake")
    cli_results = tmp_path / "cli_results.json"
    run(
        [
            "discover",
            "--lake",
            str(lake_dir),
            "--query",
            str(FIXTURES / "example1" / "t1_covid.csv"),
            "--method",
            "unionable-match",
            "--k",
            "3",
            "--out",
            str(cli_results),
        ]
    )
    capsys.readouterr()

    state = tmp_path / "state"
    config = Config(lake_root=str(lake_dir), state_root=str(state))
    client = TestClient(create_app(config, lake=ingest_lake(lake_dir)))
    sid = client.post("/sessions").json()["session_id"]
    client.post(
        f"/sessions/{sid}/query-table",
        content=(FIXTURES / "example1" / "t1_covid.csv").read_bytes(),
        headers={"content-type": "text/csv"},
    )
    client.post(f"/sessions/{sid}/discover", json={"method": "unionable-match", "k": 3})
    service_results = state / "sessions" / sid / "results.unionable-match.json"

    cli_obj = read_json(cli_results)
    # normalize provenance: the session stores the upload under its own name
    cli_obj.pop("lake_root")
    cli_obj["query"].pop("path")
    cli_obj["query"]["table_id"] = "query.csv"
    from lakefuse.jsonio import dumps_canonical

    assert dumps_canonical(cli_obj) == service_results.read_text()


def test_analyze_aggregate_writes_csv_sidecar(tmp_path, capsys):
    table = tmp_path / "t.csv"
    table.write_text("g,m\na,1\na,3\nb,5\n")
    spec = tmp_path / "spec.json"
    spec.write_text('{"kind": "aggregate", "group_by": ["g"], "measure": "m", "func": "mean"}')
    out = tmp_path / "result.json"
    assert run(["analyze", "--table", str(table), "--spec", str(spec), "--out", str(out)]) == 0
    csv_out = out.with_suffix(".csv")
    assert csv_out.read_text() == "g,mean_m\na,2.0\nb,5.0\n"
    assert read_json(out)["spec"]["kind"] == "aggregate"
