"""Command line behavior: argument handling, exit codes, file output."""

import shutil
import subprocess
import sys

import pytest

from figgen.cli import main

from test_figgen_render import PNG_MAGIC, make_fit_curve_csv, make_stats_csv, \
    make_field_csv, make_yield_csv


def figgen_argv():
    exe = shutil.which("figgen")
    if exe:
        return [exe]
    return [sys.executable, "-m", "figgen.cli"]


def test_cli_renders_yield_png(tmp_path):
    p, _, _ = make_yield_csv(tmp_path / "yield.csv", n=5)
    out = tmp_path / "yield.png"
    rc = main(["yield", "--in", p, "--out", str(out)])
    assert rc == 0
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_cli_renders_mean_r_with_field_inset(tmp_path):
    p_stats, _, _ = make_stats_csv(tmp_path / "stats.csv")
    p_field = make_field_csv(tmp_path / "field.csv")
    out = tmp_path / "meanr.png"
    rc = main(["meanR", "--in", p_stats, p_field, "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_cli_renders_fit_with_axis_ranges(tmp_path):
    p, _ = make_fit_curve_csv(tmp_path / "fit_curve.csv")
    out = tmp_path / "fit.png"
    rc = main(
        ["fit", "--in", p, "--out", str(out), "--xlim", "14:28", "--ylim", "0:0.005"]
    )
    assert rc == 0
    assert out.exists()


def test_cli_schema_mismatch_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("delay_au,k0\n600.0,1.6\n")
    out = tmp_path / "out.png"
    rc = main(["yield", "--in", str(bad), "--out", str(out)])
    assert rc == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert "yield" in err and "delay_au" in err  # names missing + found columns


def test_cli_missing_input_file_exits_nonzero(tmp_path, capsys):
    rc = main(["yield", "--in", str(tmp_path / "nope.csv"), "--out",
               str(tmp_path / "o.png")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["waterfall", "--in", "a.csv", "--out", "x.png"])
    assert excinfo.value.code == 2


def test_cli_rejects_malformed_axis_range(tmp_path):
    p, _, _ = make_yield_csv(tmp_path / "yield.csv", n=3)
    with pytest.raises(SystemExit) as excinfo:
        main(["yield", "--in", p, "--out", "x.png", "--xlim", "0,10"])
    assert excinfo.value.code == 2


def test_cli_subprocess_roundtrip(tmp_path):
    p, _, _ = make_yield_csv(tmp_path / "yield.csv", n=4)
    out = tmp_path / "y.png"
    proc = subprocess.run(
        figgen_argv() + ["yield", "--in", p, "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert str(out) in proc.stdout
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_cli_subprocess_schema_mismatch_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_au,mean_R\n0.0,2.0\n")  # wrong schema for yield kind
    proc = subprocess.run(
        figgen_argv()
        + ["yield", "--in", str(bad), "--out", str(tmp_path / "o.png")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "missing required column" in proc.stderr
