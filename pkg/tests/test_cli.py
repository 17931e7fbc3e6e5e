"""End-to-end runs of the command-line front end."""
import math
import subprocess
import sys

import numpy as np
import pytest

from qumond.cli import main
from qumond.grid import VectorGrid, l2_norm, read_grid, write_grid
from qumond import oracles


def run(*argv):
    return main([str(a) for a in argv])


def csv_rows(path):
    lines = path.read_text().splitlines()
    lines = [ln for ln in lines if not ln.startswith("#")]
    head = lines[0].split(",")
    return head, [dict(zip(head, ln.split(","))) for ln in lines[1:]]


def summary(path):
    return {r["key"]: r["value"] for r in csv_rows(path)[1]}


def test_solve_writes_dumps(tmp_path):
    out = tmp_path / "solve"
    assert run("solve", "--density", "uniform-ball:1,0.5", "--n", 64, "--L", 2, "--lambda", "deep:1", "--out", out) == 0
    names = ["density", "potential_newton", "field_newton", "phantom", "field_mond"]
    for name in names:
        assert (out / f"{name}.grid").is_file()
    assert isinstance(read_grid(out / "field_mond.grid"), VectorGrid)
    s = summary(out / "summary.csv")
    assert float(s["mass"]) == pytest.approx(4 * math.pi / 3 * 0.125, rel=5e-3)
    assert float(s["extrapolation_change"]) <= 0.05


def test_solve_bad_density(tmp_path, capsys):
    assert run("solve", "--density", "none", "--out", tmp_path) == 2
    assert "density" in capsys.readouterr().err


def test_solve_zero_density(tmp_path):
    assert run("solve", "--density", "zero", "--n", 16, "--out", tmp_path) == 0
    for name in ["density", "potential_newton", "field_newton", "phantom", "field_mond"]:
        g = read_grid(tmp_path / f"{name}.grid")
        arr = g.array if isinstance(g, VectorGrid) else g.data
        assert np.all(arr == 0.0)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--density", "zero", "--n", "7"],
        ["solve", "--density", "zero", "--L", "-1"],
        ["solve", "--density", "zero", "--lambda", "mystery:1"],
        ["solve", "--density", "zero", "--n", "8", "--eps-schedule", "1,0.5"],
        ["solve"],
        ["verify", "--only", "lemma-9.9"],
        ["verify", "--only", "dyadic-blowup", "--q", "7"],
        ["rotation", "--density", "uniform-ball:1,0.5,0.3,0,0"],
        ["counterexample", "dyadic", "--points-per-shell", "2"],
        ["decompose"],
    ],
)
def test_config_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_argparse_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_decompose_generated(tmp_path):
    for kind in ("gradient", "zero", "mixed"):
        out = tmp_path / kind
        assert run("decompose", "--generate", kind, "--n", 64, "--out", out) == 0
        m = {r["metric"]: float(r["value"]) for r in csv_rows(out / "residuals.csv")[1]}
        if kind == "gradient":
            assert m["solenoidal_fraction"] <= 0.01
        if kind == "zero":
            assert np.all(read_grid(out / "irrotational.grid").array == 0.0)
            assert np.all(read_grid(out / "solenoidal.grid").array == 0.0)
        if kind == "mixed":
            assert m["irrotational_error"] <= 0.02 and m["solenoidal_error"] <= 0.02


def test_decompose_input_file(tmp_path):
    grad, _ = oracles.gradient_field(32, 2.0)
    write_grid(tmp_path / "v.grid", grad)
    assert run("decompose", "--input", tmp_path / "v.grid", "--out", tmp_path / "o") == 0
    irr = read_grid(tmp_path / "o" / "irrotational.grid")
    assert l2_norm(irr - grad) <= 0.02 * l2_norm(grad)
    write_grid(tmp_path / "s.grid", grad[0])
    assert run("decompose", "--input", tmp_path / "s.grid", "--out", tmp_path / "o") == 2


def test_verify_subset_and_report(tmp_path, capsys):
    assert run("verify", "--only", "poisson-identity", "--only", "signed-density", "--seed", 5, "--out", tmp_path) == 0
    text = (tmp_path / "verify.csv").read_text()
    assert text.startswith("# seed=5\ncheck_id,lemma,observed,bound,pass\n")
    head, rows = csv_rows(tmp_path / "verify.csv")
    assert [r["check_id"] for r in rows] == ["poisson-identity", "signed-harmonic-bound", "signed-log-growth"]
    assert all(r["pass"] == "true" for r in rows)
    assert capsys.readouterr().out == text


def test_verify_forced_failure(tmp_path):
    assert run("verify", "--only", "deep-mond-asymptote", "--tol", "0", "--out", tmp_path) == 3
    _, rows = csv_rows(tmp_path / "verify.csv")
    assert rows[0]["pass"] == "false"


def test_verify_single_blowup(tmp_path):
    code = run("verify", "--only", "dyadic-blowup", "--q", 4, "--out", tmp_path)
    _, rows = csv_rows(tmp_path / "verify.csv")
    assert [r["check_id"] for r in rows] == ["blowup-q4", "blowup-singular-q4"]
    assert code == (0 if all(r["pass"] == "true" for r in rows) else 3)


def test_verify_byte_identical(tmp_path):
    for k in (1, 2):
        assert run("verify", "--only", "lambda-holder", "--seed", 11, "--out", tmp_path / str(k)) == 0
    assert (tmp_path / "1" / "verify.csv").read_bytes() == (tmp_path / "2" / "verify.csv").read_bytes()


def test_solve_byte_identical(tmp_path):
    for k in (1, 2):
        assert run("solve", "--density", "gaussian:1,0.3,0.1,0,0", "--n", 16, "--out", tmp_path / str(k)) == 0
    for name in ("field_mond.grid", "summary.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_rotation(tmp_path):
    assert run("rotation", "--density", "uniform-ball:0.01,1", "--r-max", 100, "--out", tmp_path) == 0
    _, rows = csv_rows(tmp_path / "rotation.csv")
    M = 0.01 * 4 * math.pi / 3
    last = rows[-1]
    assert float(last["r"]) == pytest.approx(100.0)
    assert float(last["v_mond"]) ** 4 / M == pytest.approx(1.0, abs=0.01)
    assert float(last["v_newton"]) == pytest.approx(math.sqrt(M / 100.0))
    assert run("rotation", "--density", "zero", "--r-min", 0.1, "--r-max", 10, "--out", tmp_path / "z") == 0
    _, rows = csv_rows(tmp_path / "z" / "rotation.csv")
    assert all(float(r["v_newton"]) == 0.0 and float(r["v_mond"]) == 0.0 for r in rows)


def test_counterexample_outputs(tmp_path):
    assert run("counterexample", "dyadic", "--n-list", "4,8", "--q", 4, "--out", tmp_path) == 0
    head, rows = csv_rows(tmp_path / "dyadic.csv")
    assert head == ["n", "q", "norm"] and len(rows) == 2
    assert run("counterexample", "signed", "--N", 10, "--out", tmp_path) == 0
    head, rows = csv_rows(tmp_path / "signed.csv")
    assert head == ["N", "S_N", "harmonic_bound"] and len(rows) == 10
    assert float(rows[0]["S_N"]) == pytest.approx(9 * math.pi)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# test run\nn = 8\nL = 1.5\ndensity = gaussian:1,0.2\nout = {tmp_path / 'from-file'}\n")
    assert run("solve", "--config", cfg) == 0
    assert read_grid(tmp_path / "from-file" / "density.grid").n == 8
    assert run("solve", "--config", cfg, "--n", 16, "--out", tmp_path / "flag") == 0
    g = read_grid(tmp_path / "flag" / "density.grid")
    assert g.n == 16 and g.half_width == 1.5
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    assert run("solve", "--config", tmp_path / "bad.cfg", "--density", "zero") == 2


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qumond.cli", "counterexample", "signed", "--N", "2", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "S_N=" in proc.stdout
