from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from relstring import __version__
from relstring import scenarios as sc
from relstring.cli import main
from relstring.diagnostics import DiagnosticsReport


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def test_circle_run(tmp_path):
    out = tmp_path / "circle"
    code = main(["run", "--scenario", "circle", "--param", "R=1", "--grid", "256",
                 "--t0", "0", "--t1", "1.5707", "--frames", "50", "--out", str(out)])
    assert code == 0
    frames = sorted(out.glob("frames_*.csv"))
    assert len(frames) == 50
    header, data = _read_csv(frames[0])
    assert header == ["x", "gamma_1", "gamma_2", "gammat_1", "gammat_2", "gammax_1", "gammax_2"]
    assert data.shape == (256, 7)
    header, diag = _read_csv(out / "diagnostics.csv")
    assert header == DiagnosticsReport.columns()
    assert np.allclose(diag[:, 1], 2 * np.pi, rtol=1e-12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["config"]["tolerances"]["gauge"] == 1e-8
    assert manifest["expected"]["collapse_time"] == pytest.approx(np.pi / 2)


def test_square_run_energy(tmp_path):
    out = tmp_path / "square"
    code = main(["run", "--scenario", "square", "--param", "L=1", "--grid", "512",
                 "--t0", "0", "--t1", "0.999", "--frames", "100", "--out", str(out)])
    assert code == 0
    _, diag = _read_csv(out / "diagnostics.csv")
    t, energy = diag[:, 0], diag[:, 1]
    assert np.all(energy[t < 0.5] == 4.0)
    assert np.all(np.diff(energy[t >= 0.5]) <= 0)


def test_output_is_byte_deterministic(tmp_path, monkeypatch):
    args = ["run", "--scenario", "neu", "--param", "n=5", "--grid", "64", "--t1", "2", "--frames", "6"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("RELSTRING_THREADS", "4")
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in sorted((tmp_path / "a").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_floats_round_trip(tmp_path):
    out = tmp_path / "rt"
    assert main(["run", "--scenario", "ellipse", "--param", "N=512", "--grid", "32",
                 "--frames", "2", "--out", str(out)]) == 0
    text = (out / "frames_0001.csv").read_text().splitlines()[3].split(",")
    assert all(repr(float(v)) == v for v in text)


def test_json_output_writes_null_for_nan(tmp_path):
    out = tmp_path / "json"
    assert main(["run", "--scenario", "square", "--grid", "64", "--t0", "0.75", "--t1", "0.75",
                 "--frames", "1", "--format", "json", "--out", str(out)]) == 0
    records = json.loads((out / "diagnostics.json").read_text())
    assert records[0]["max_geometric_residual"] is None
    assert records[0]["conserved_energy"] == pytest.approx(2.0)


def test_sampled_input(tmp_path):
    s = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    path = tmp_path / "ellipse.csv"
    with open(path, "w") as fh:
        fh.write("s,x1,x2\n")
        for v in s:
            fh.write(f"{float(v)!r},{float(2 * math.cos(v))!r},{float(math.sin(v))!r}\n")
    out = tmp_path / "sampled"
    assert main(["run", "--input", str(path), "--grid", "128", "--t1", "1", "--frames", "3", "--out", str(out)]) == 0
    _, diag = _read_csv(out / "diagnostics.csv")
    assert np.ptp(diag[:, 1]) / diag[0, 1] < 1e-6


def test_missing_scenario_is_config_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--grid", "64"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["run", "--scenario", "circle", "--grid", "4"],
    ["run", "--scenario", "circle", "--t0", "2", "--t1", "1"],
    ["run", "--scenario", "circle", "--tol", "bogus=1"],
    ["run", "--scenario", "circle", "--param", "R"],
])
def test_bad_config_exits_2(args, tmp_path):
    assert main(args + ["--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("args", [
    ["run", "--scenario", "nope"],
    ["run", "--scenario", "cylinder", "--param", "eps=0.3"],
    ["run", "--scenario", "circle", "--param", "radius=2"],
])
def test_scenario_errors_exit_3(args, tmp_path):
    assert main(args + ["--out", str(tmp_path)]) == 3


def test_numerical_failure_exits_4(tmp_path, capsys):
    s = np.linspace(0, 1, 16, endpoint=False)
    path = tmp_path / "fast.csv"
    with open(path, "w") as fh:
        fh.write("s,x1,x2,v1,v2\n")
        for v in s:
            c, d = math.cos(2 * math.pi * v), math.sin(2 * math.pi * v)
            fh.write(f"{float(v)!r},{c!r},{d!r},{c!r},{d!r}\n")
    assert main(["run", "--input", str(path), "--out", str(tmp_path / "o")]) == 4
    assert "NotStrictlyAdmissible" in capsys.readouterr().err


def test_wiggly_table(tmp_path, capsys):
    flat = sc.flat_loop()
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"breakpoints": flat.breakpoints.tolist(), "slopes": flat.slopes.tolist()}))
    assert main(["wiggly", str(path), "--k", "2,4,8", "--out", str(tmp_path / "w")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "k,bound,eta,ell,sup_distance"
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    assert [r[0] for r in rows] == [2, 4, 8]
    assert all(r[4] <= r[1] for r in rows)
    assert rows[0][4] > rows[1][4] > rows[2][4]
    assert (tmp_path / "w" / "wiggly_k008.csv").exists()
    assert main(["wiggly", str(path), "--k", "3"]) == 4


def test_profile_table(capsys):
    assert main(["profile", "--scenario", "square", "--fractions", "0.05", "--grid", "256"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    spread = float(lines[1].split(",")[3])
    assert spread > 0.4


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    assert capsys.readouterr().out.split() == sc.scenario_names()


def test_verify_prints_one_line_per_criterion(capsys):
    code = main(["verify"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 11
    assert all(line.startswith(("[PASS]", "[FAIL]")) for line in lines)
    assert code == (0 if all(line.startswith("[PASS]") for line in lines) else 1)
