"""Command-line behavior: exit codes, output files, seed handling."""

import json

import pytest
import yaml

from rrmsim.cli import CSV_COLUMNS, main

from conftest import SCENARIO_DIR


@pytest.fixture
def tiny_yaml(tmp_path):
    doc = {
        "name": "tiny",
        "network": {"cells": [{"id": "c1", "prbs_per_slot": 20}]},
        "ues": [{"id": "u1", "position": [30.0, 0.0]}],
        "traffic": {
            "flows": [
                {
                    "id": "f1",
                    "ue": "u1",
                    "service": "eMBB",
                    "generator": {"kind": "full_buffer", "packet_bits": 4000},
                }
            ]
        },
        "sim": {"horizon_slots": 60, "seed": 3},
    }
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def _read_outputs(outdir):
    return {
        name: (outdir / name).read_text()
        for name in ("metrics.csv", "summary.json", "events.log")
    }


def test_run_writes_three_files_and_exits_zero(tiny_yaml, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", str(tiny_yaml), "--out", str(out)])
    assert rc == 0
    files = _read_outputs(out)
    assert files["metrics.csv"].splitlines()[0] == ",".join(CSV_COLUMNS)
    doc = json.loads(files["summary.json"])
    assert doc["scenario"] == "tiny"
    assert doc["seed"] == 3
    assert doc["report"]["slots"] == 60
    assert files["events.log"].count("\n") == len(files["events.log"].splitlines())
    assert str(out) in capsys.readouterr().out
    assert not list(out.glob("*.tmp"))


def test_rerun_is_byte_identical(tiny_yaml, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(tiny_yaml), "--out", str(a)]) == 0
    assert main(["run", str(tiny_yaml), "--out", str(b)]) == 0
    assert _read_outputs(a) == _read_outputs(b)


def test_seed_override_changes_summary(tiny_yaml, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(tiny_yaml), "--seed", "42", "--out", str(out)]) == 0
    doc = json.loads((out / "summary.json").read_text())
    assert doc["seed"] == 42


def test_seed_range_makes_one_directory_per_seed(tiny_yaml, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(tiny_yaml), "--seeds", "4..6", "--out", str(out)]) == 0
    seeds = []
    for sub in sorted(out.iterdir()):
        doc = json.loads((sub / "summary.json").read_text())
        seeds.append((sub.name, doc["seed"]))
    assert seeds == [("seed-4", 4), ("seed-5", 5), ("seed-6", 6)]


def test_seed_and_seeds_together_is_a_usage_error(tiny_yaml, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", str(tiny_yaml), "--seed", "1", "--seeds", "1..2", "--out", str(out)])
    assert rc == 2
    assert not out.exists()
    assert "mutually exclusive" in capsys.readouterr().err


def test_backwards_seed_range_is_rejected(tiny_yaml, tmp_path):
    rc = main(["run", str(tiny_yaml), "--seeds", "9..3", "--out", str(tmp_path / "o")])
    assert rc == 2


def test_invalid_scenario_exits_two_and_writes_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: broken\nnetwork:\n  cells: []\nturbo_mode: 9\n")
    out = tmp_path / "out"
    rc = main(["run", str(bad), "--out", str(out)])
    assert rc == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert "turbo_mode" in err


def test_unreadable_file_is_a_parse_error(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "absent.yaml"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "parse error" in capsys.readouterr().err


def test_validate_prints_ok_and_touches_nothing(tiny_yaml, tmp_path, capsys):
    before = set(tmp_path.iterdir())
    rc = main(["validate", str(tiny_yaml)])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "ok"
    assert set(tmp_path.iterdir()) == before


def test_validate_reports_each_failure_path(tmp_path, capsys):
    doc = {
        "name": "x",
        "network": {"cells": [{"id": "c1", "carrier_hz": 1.0e5}]},
        "ues": [{"id": "u1"}],
        "traffic": {"flows": [{"id": "f1", "ue": "nobody", "service": "eMBB"}]},
    }
    p = tmp_path / "x.yaml"
    p.write_text(yaml.safe_dump(doc))
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "network.cells[0]" in err
    assert "traffic.flows[0].ue" in err


def test_every_shipped_scenario_validates(capsys):
    for path in sorted(SCENARIO_DIR.glob("*.yaml")):
        assert main(["validate", str(path)]) == 0, path.name
    assert capsys.readouterr().out.count("ok") >= 5


def test_csv_rows_parse_back_to_numbers(tiny_yaml, tmp_path):
    out = tmp_path / "out"
    main(["run", str(tiny_yaml), "--out", str(out)])
    lines = (out / "metrics.csv").read_text().splitlines()
    assert len(lines) == 1 + 6  # header + one row per flow per MAC epoch
    row = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert row["flow"] == "f1"
    assert int(row["epoch"]) == 0
    assert float(row["arrived_bits"]) >= float(row["delivered_bits"]) >= 0.0
