import csv
import json

import pytest

from crosstalk_qec.circuits import Circuit
from crosstalk_qec.cli import CSV_COLUMNS, main
from crosstalk_qec.decoder import DetectorGraph


def _run(tmp_path, name, *args):
    out = tmp_path / name
    assert main([*args, "--out", str(out)]) == 0
    return out.read_bytes()


def test_memory_csv_columns(tmp_path):
    data = _run(tmp_path, "m.csv", "memory", "--p", "0.01", "--shots", "200")
    rows = list(csv.reader(data.decode().splitlines()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][1] == "3" and rows[1][4] == "none" and rows[1][-1] == ""


def test_memory_json_and_wall_time(tmp_path):
    data = _run(tmp_path, "m.json", "memory", "--p", "0.01", "--shots", "50", "--format", "json",
                "--wall-time")
    row = json.loads(data)["rows"][0]
    assert row["shots"] == 50 and row["wall_time"] > 0


def test_threads_do_not_change_output(tmp_path):
    args = ["memory", "--p", "0.004", "--theta", "0.05", "--crosstalk", "coherent",
            "--shots", "3", "--chi-max", "8", "--seed", "4"]
    assert _run(tmp_path, "a.csv", *args, "--threads", "1") == \
        _run(tmp_path, "b.csv", *args, "--threads", "3")


def test_sweep_reports_crossings(tmp_path):
    data = _run(tmp_path, "s.json", "sweep", "--shots", "100", "--p-grid", "0.004,0.02",
                "--format", "json")
    doc = json.loads(data)
    assert len(doc["rows"]) == 4 and len(doc["crossings"]) == 1


def test_dem_and_circuit_emit_parsable_text(tmp_path):
    g = DetectorGraph.from_text(_run(tmp_path, "g.txt", "dem", "--p", "0.01").decode())
    assert g.num_detectors == 28 and g.edges
    c = Circuit.from_text(_run(tmp_path, "c.txt", "circuit", "--rounds", "2", "--policy", "all").decode())
    assert c.n == 17


def test_schmidt_and_truncation(tmp_path):
    data = _run(tmp_path, "sc.json", "schmidt", "--p", "0.004", "--theta", "0.05", "--crosstalk",
                "random-sign", "--shots", "1", "--format", "json")
    doc = json.loads(data)
    assert doc["rows"][0]["rank"] == 0 and "fit" in doc
    data = _run(tmp_path, "tr.csv", "truncation", "--p", "0.004", "--theta", "0.05",
                "--crosstalk", "coherent", "--shots", "1", "--chi-list", "2,4")
    assert len(data.decode().splitlines()) == 3


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "noise.cfg"
    conf.write_text("p = 0.02\ncrosstalk_mode = pta\ntheta = 0.1\n")
    data = _run(tmp_path, "m.csv", "memory", "--config", str(conf), "--theta", "0.2", "--shots", "20")
    row = list(csv.DictReader(data.decode().splitlines()))[0]
    assert row["p"] == "0.02" and row["theta"] == "0.2" and row["mode"] == "pta"


def test_bad_arguments(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["memory", "--crosstalk", "nope"])
    assert main(["memory", "--p", "0.9"]) == 2
