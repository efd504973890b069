import csv
import io
import json
import subprocess
import sys

import pytest

from valgeo.cli import CliConfig, build_parser, run
from valgeo.geometry import ToleranceConfig


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


@pytest.fixture
def squares(tmp_path):
    a = write(tmp_path / "sq1.json", {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]})
    b = write(tmp_path / "sq2.json", {"dim": 2, "vertices": [[0.5, 0], [1.5, 0], [1.5, 1], [0.5, 1]]})
    return a, b


def test_deviation_prints_value(squares, capsys):
    a, b = squares
    assert run(["deviation", "--kind", "meet", "--phi", "vol", "--a", a, "--b", b]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0)


def test_deviation_json_and_out(squares, tmp_path, capsys):
    a, b = squares
    out = tmp_path / "r.json"
    assert run(["deviation", "--kind", "join", "--phi", "sum:vol+v1", "--a", a, "--b", b,
                "--output", "json", "--out", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out.read_text())
    # hull [0,1.5]x[0,1]: 2(1.5 + 2.5) - 2 - 2 - 1 - 1
    assert printed["value"] == pytest.approx(2.0)
    assert printed["config"]["seed"] == 0


def test_deviation_csv(squares, capsys):
    a, b = squares
    assert run(["deviation", "--a", a, "--b", b, "--output", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert float(rows[0]["value"]) == pytest.approx(1.0)


def test_malformed_body_reports_location(tmp_path, squares, capsys):
    bad = write(tmp_path / "bad.json", {"dim": 2, "vertices": [[0, 0], [1, 0], [1, "x"]]})
    assert run(["deviation", "--a", bad, "--b", squares[1]]) == 2
    err = capsys.readouterr().err
    assert err.startswith("valgeo: error:") and "$.vertices[2][1]" in err


def test_truncated_json_reports_line_and_column(tmp_path, squares, capsys):
    bad = write(tmp_path / "trunc.json", '{"dim": 2,\n "vertices": [[0, 0], ')
    assert run(["hausdorff", "--a", bad, "--b", squares[1]]) == 2
    assert "trunc.json:2:" in capsys.readouterr().err


def test_missing_file_and_bad_spec(squares, capsys):
    a, b = squares
    assert run(["deviation", "--a", "/nonexistent.json", "--b", b]) == 2
    assert run(["deviation", "--phi", "v7", "--a", a, "--b", b]) == 2
    assert run(["deviation", "--phi", "bogus", "--a", a, "--b", b]) == 2


def test_usage_errors():
    assert run([]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["verify", "thm9"]) == 2
    assert run(["deviation", "--a", "x.json"]) == 2
    assert run(["--help"]) == 0


def test_hausdorff(squares, capsys):
    assert run(["hausdorff", "--a", squares[0], "--b", squares[1]]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.5)


def test_steiner_and_decompose(tmp_path, capsys):
    cube = write(tmp_path / "cube.json", {"dim": 3, "vertices": [[x, y, z] for x in (0, 1)
                                                                  for y in (0, 1) for z in (0, 1)]})
    assert run(["steiner", "--body", cube, "--output", "json"]) == 0
    got = json.loads(capsys.readouterr().out)
    for i, want in enumerate((1, 3, 3, 1)):
        assert got[f"V{i}"] == pytest.approx(want, abs=5e-3)
    assert run(["steiner", "--body", cube, "--radii", "0.1", "0.1", "0.2", "0.3"]) == 2
    capsys.readouterr()
    sq = write(tmp_path / "sq.json", {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]})
    assert run(["decompose", "--phi", "sum:vol+v1", "--body", sq, "--output", "json"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got["phi1"] == pytest.approx(2.0) and got["phi2"] == pytest.approx(1.0)


def test_path_length(tmp_path, capsys):
    sq = {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}
    big = {"dim": 2, "vertices": [[0, 0], [2, 0], [2, 2], [0, 2]]}
    p = write(tmp_path / "p.json", {"bodies": [sq, big]})
    assert run(["path-length", "--path", p]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(3.0)
    assert run(["path-length", "--path", write(tmp_path / "q.json", {"bodies": [sq]})]) == 2
    assert run(["path-length", "--path", write(tmp_path / "r.json", "{")]) == 2


def test_path_length_unconverged_exit(tmp_path, capsys):
    disc = {"dim": 2, "vertices": [[1, 0], [0, 1], [-1, 0], [0, -1]]}
    moved = {"dim": 2, "vertices": [[4, 0], [3, 1], [2, 0], [3, -1]]}
    p = write(tmp_path / "p.json", {"bodies": [disc, moved]})
    assert run(["path-length", "--phi", "v1", "--path", p, "--max-depth", "1"]) == 1
    assert "not converged" in capsys.readouterr().out


def test_verify_writes_reports(tmp_path, capsys):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert run(["verify", "thm3", "--seed", "0", "--out", str(out), "--csv", str(table)]) == 0
    assert "thm3: PASS" in capsys.readouterr().out
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["seed"] == 0
    rows = list(csv.DictReader(table.open()))
    assert {r["pass"] for r in rows} == {"1"}


def test_verify_seed_reproducible(capsys):
    assert run(["verify", "thm4", "--seed", "5", "--output", "json"]) == 0
    first = json.loads(capsys.readouterr().out)
    assert run(["verify", "thm4", "--seed", "5", "--output", "json"]) == 0
    second = json.loads(capsys.readouterr().out)
    first.pop("runtime_ms"), second.pop("runtime_ms")
    assert first == second


def test_config_roundtrip_through_argv():
    cfg = CliConfig(3, ToleranceConfig(1e-10, 2e-8, 3e-9), 17, "csv")
    ns = build_parser().parse_args(["hausdorff", "--a", "x", "--b", "y", *cfg.to_argv()])
    assert CliConfig.from_namespace(ns) == cfg
    assert CliConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        CliConfig(dimension=4)
    with pytest.raises(ValueError):
        CliConfig(output="xml")


def test_bad_tolerance_is_usage_error(squares):
    assert run(["deviation", "--a", squares[0], "--b", squares[1], "--eps-geom", "-1"]) == 2


def test_console_script_entry_point(squares):
    proc = subprocess.run([sys.executable, "-m", "valgeo.cli", "deviation", "--a", squares[0],
                           "--b", squares[1]], capture_output=True, text=True)
    assert proc.returncode == 0 and float(proc.stdout) == pytest.approx(1.0)
