import csv
import json
import subprocess
import sys

import pytest

from stabtensor.cli import SUBCOMMANDS, main

SMALL = """[run]
seed = 4
depth = 32
samples = 5000
tail_n = 60
k_max = 4
trials = 8

[measure]
kind = gaussian
sigma = 1.0

[character]
q = 0.5
point = plateau:0

[points]
x1 = 0.7, -1.3
x2 = 0.25
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def run(cfg, sub, out, *extra):
    return main([sub, "--config", str(cfg), "--out", str(out), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_subcommands_pass_and_repeat(cfg, tmp_path, sub):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cfg, sub, a) == 0
    assert run(cfg, sub, b) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files and files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_changes_mc_output(cfg, tmp_path):
    run(cfg, "bochner", tmp_path / "a")
    run(cfg, "bochner", tmp_path / "b", "--seed", "5")
    assert (tmp_path / "a" / "bochner.csv").read_bytes() != (tmp_path / "b" / "bochner.csv").read_bytes()


def test_algebra_rows(cfg, tmp_path):
    run(cfg, "algebra-check", tmp_path)
    rows = read_csv(tmp_path / "algebra.csv")
    assert {r["check"] for r in rows} >= {"commutativity", "associativity", "involution", "grading"}
    assert all(r["failures"] == "0" for r in rows)


def test_excess_rows(cfg, tmp_path):
    run(cfg, "excess", tmp_path)
    rows = read_csv(tmp_path / "excess.csv")
    qc = {int(r["ell"]): float(r["value"]) for r in rows if r["operator"] == "Q_character"}
    assert qc == {1: 0.5, 2: 0.25, 3: 0.125}
    assert all(abs(float(r["value"]) - 1) < 1e-3 for r in rows if r["operator"] == "P")


def test_excess_constant_levels(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL + "\n[sequence]\nlevels = constant:1\n")
    assert run(p, "excess", tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "excess.csv")
    assert all(float(r["value"]) == 0 for r in rows if r["operator"] in ("P", "Q_product"))


def test_decompose_report(cfg, tmp_path):
    assert run(cfg, "decompose", tmp_path) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["schema"] == "itp-report/1" and data["pass"] is True
    assert {"tail.csv", "mc.csv", "pushforward.csv", "tail.gp"} <= {p.name for p in tmp_path.iterdir()}


def test_decompose_violation_exit_one(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL + "\n[sequence]\nlevels = constant:1\n")
    assert run(p, "decompose", tmp_path / "o") == 1


def test_spectrum_sandwich(cfg, tmp_path):
    run(cfg, "spectrum", tmp_path)
    rows = {r["element"]: r for r in read_csv(tmp_path / "sandwich.csv")}
    assert float(rows["F-F^2"]["char_sup_lower"]) == pytest.approx(0.25, abs=1e-6)
    assert len(read_csv(tmp_path / "spectrum.csv")) == 1000


def test_bad_config_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[character]\nq = 1.5\n")
    assert run(p, "bochner", tmp_path / "o") == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_arguments(cfg, tmp_path):
    assert run(cfg, "bochner", tmp_path, "--seed", "-1") == 2
    with pytest.raises(SystemExit) as exc:
        run(cfg, "bochner", tmp_path, "--depth", "0")
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_module_entry_point(cfg, tmp_path):
    out = subprocess.run([sys.executable, "-m", "stabtensor", "bochner", "--config", str(cfg),
                          "--out", str(tmp_path), "--samples", "2000"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "psd.csv").exists()
