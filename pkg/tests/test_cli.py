import csv
import json
import logging
from pathlib import Path

import numpy as np
import pytest

from nodal_lane_emden.cli import main, validate_dir
from nodal_lane_emden.discretize import load_field, save_field

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """\
[exponents]
N = 4
q = 4

[symmetry]
j = 1

[solve]
R = 16.0
resolution = 64
gauge_radius = 1.0
max_iterations = {iters}
"""

SWEEP = """\
[exponents]
N = 5
q = "2"

[solve]
R = 20.0
resolution = 2000
gauge_radius = 0.1

[sweep]
given = "q"
values = {values}
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture(scope="module")
def bundled_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundled")
    code = main(["solve", str(CONFIGS / "n4_yamabe_signchanging.toml"), "--out", str(out)])
    return code, out


@pytest.fixture()
def small_run(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(iters=400))
    out = tmp_path / "out"
    code, _ = run(["solve", cfg, "--out", out], capsys)
    assert code == 0
    return out


# ------------------------------------------------------------ solve

def test_bundled_config_converges(bundled_run):
    code, out = bundled_run
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["converged"] and metrics["sign_change"]
    man = json.loads((out / "manifest.json").read_text())
    assert all(man["checks"].values())


def test_malformed_config(tmp_path, capsys):
    cfg = write(tmp_path, "[exponents]\nN = 4\nq = = 4\n")
    code, cap = run(["solve", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 2
    assert "line 3" in cap.err


def test_bad_field(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(iters=400).replace("resolution = 64", "resolution = \"many\""))
    code, cap = run(["solve", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 2
    assert "resolution" in cap.err


def test_unknown_field(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(iters=400) + "stepsize = 3\n")
    code, cap = run(["solve", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 2
    assert "stepsize" in cap.err


def test_missing_config(tmp_path, capsys):
    code, _ = run(["solve", tmp_path / "nope.toml"], capsys)
    assert code == 2


def test_nonconvergence_exit(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(iters=1))
    out = tmp_path / "o"
    code, _ = run(["solve", cfg, "--out", out], capsys)
    assert code == 3
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2
    assert (out / "u.lefd").exists() and (out / "manifest.json").exists()


def test_output_root_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NLE_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = write(tmp_path, SMALL.format(iters=1), name="tiny.toml")
    run(["solve", cfg], capsys)
    assert (tmp_path / "root" / "tiny" / "manifest.json").exists()


def test_ground_state_command(tmp_path, capsys):
    cfg = write(tmp_path, "[exponents]\nN = 4\np = 4\n\n[solve]\nR = 20.0\nresolution = 2000\n")
    code, cap = run(["ground-state", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 0
    assert "sign_change False" in cap.out


def test_determinism(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(iters=400))
    for d in ("a", "b"):
        assert run(["solve", cfg, "--out", tmp_path / d], capsys)[0] == 0
    for name in ("u.lefd", "v.lefd", "metrics.json", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seventeen_digits(small_run):
    metrics = json.loads((small_run / "metrics.json").read_text())
    raw = (small_run / "metrics.json").read_text()
    assert repr(metrics["energy"]) in raw or f"{metrics['energy']:.17g}" in raw


# ------------------------------------------------------------ validate

def test_validate_clean(small_run, capsys):
    code, cap = run(["validate", small_run], capsys)
    assert code == 0
    assert "FAIL" not in cap.out


def test_validate_flipped_byte(small_run, capsys):
    path = small_run / "u.lefd"
    data = bytearray(path.read_bytes())
    data[-5] ^= 0x01
    path.write_bytes(bytes(data))
    checks = validate_dir(small_run)
    assert not checks["hashes"][0]
    assert "u.lefd" in checks["hashes"][1]
    assert run(["validate", small_run], capsys)[0] == 1


def test_validate_broken_antisymmetry(small_run):
    u = load_field(small_run / "u.lefd")
    vals = u.values.copy()
    vals[10, 20] += 0.1 * np.abs(vals).max()
    save_field(u.with_values(vals), small_run / "u.lefd")
    checks = validate_dir(small_run)
    assert not checks["equivariance"][0]


def test_validate_not_a_run(tmp_path, capsys):
    assert run(["validate", tmp_path], capsys)[0] == 2


# ------------------------------------------------------------ kelvin / hyperbola

def test_kelvin_paneitz(capsys):
    code, cap = run(["kelvin", "--N", 5, "--q", 2, "--json"], capsys)
    assert code == 0
    rep = json.loads(cap.out)
    assert rep["constant_C"] == 0.0 and rep["is_zero"]
    assert rep["isometry_defect"] <= 1e-2


def test_kelvin_n6_q4(capsys):
    code, cap = run(["kelvin", "--N", 6, "--q", 4, "--json"], capsys)
    rep = json.loads(cap.out)
    assert rep["constant_C"] == pytest.approx(-6.648, abs=5e-3)
    assert rep["isometry_defect"] >= 0.05


def test_kelvin_sweep_n6(capsys):
    code, cap = run(["kelvin", "--sweep", "--N", 6], capsys)
    assert code == 0
    zero = [line.split()[0] for line in cap.out.splitlines()[1:-1] if line.endswith("True")]
    assert sorted(zero) == ["2", "3"]
    assert "zero rows: 2 of 50" in cap.out


@pytest.mark.parametrize("argv", [["kelvin", "--N", 5, "--q", 1],
                                  ["kelvin", "--N", 5],
                                  ["hyperbola", "--N", 5, "--p", 2, "--q", 3],
                                  ["hyperbola", "--N", 5, "--p", "x"]])
def test_usage_errors(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_hyperbola(capsys):
    code, cap = run(["hyperbola", "--N", 5, "--q", 2], capsys)
    assert code == 0
    assert "p   10" in cap.out and "(10)" in cap.out


# ------------------------------------------------------------ sweep

def test_sweep_three_points(tmp_path, capsys):
    cfg = write(tmp_path, SWEEP.format(values='["2", "7/3", "3"]'))
    code, _ = run(["sweep", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 0
    with open(tmp_path / "o" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 and all(r["converged"] == "True" for r in rows)


def test_sweep_empty(tmp_path, capsys):
    cfg = write(tmp_path, SWEEP.format(values="[]"))
    assert run(["sweep", cfg, "--out", tmp_path / "o"], capsys)[0] == 2


def test_sweep_duplicates(tmp_path, capsys, caplog):
    cfg = write(tmp_path, SWEEP.format(values='["2", "2.0", "3"]'))
    with caplog.at_level(logging.WARNING):
        code, _ = run(["sweep", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 0
    assert "duplicate" in caplog.text
    with open(tmp_path / "o" / "sweep.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_sweep_bad_row_recorded(tmp_path, capsys):
    cfg = write(tmp_path, SWEEP.format(values='["2", "1"]'))
    code, _ = run(["sweep", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 0
    with open(tmp_path / "o" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[1]["converged"] == "False" and rows[1]["error"]
