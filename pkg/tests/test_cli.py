import json

import numpy as np
import pytest

from vdlab.cli import main
from vdlab.io import read_series_csv

SMALL_RUN = ["--grid-n", "16", "--box-l", "6", "--t-final", "2", "--outputs", "4"]


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert "error" in capsys.readouterr().err


def test_symbol_scan_stdout_and_files(tmp_path, capsys):
    assert main(["symbol-scan", "--r-min", "1", "--r-max", "1", "--samples", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("block,r,")
    row = lines[1].split(",")
    assert row[0] == "compressible"
    assert [float(x) for x in row[2:6]] == [-1.0, 1.0, -1.0, -1.0]
    out = tmp_path / "scan.csv"
    assert main(["symbol-scan", "--mu", "1", "--lambda", "-0.5", "--r-min", "1e-3",
                 "--r-max", "1e3", "--samples", "50", "--log", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 101
    summary = json.loads((tmp_path / "scan.csv.json").read_text())
    assert all(b["positive"] for b in summary["bounds"])


@pytest.mark.parametrize("argv", [
    ["symbol-scan", "--r-min", "2", "--r-max", "1"],
    ["symbol-scan", "--samples", "0"],
    ["symbol-scan", "--r-min", "0", "--log"],
    ["symbol-scan", "--mu", "-1"],
    ["symbol-scan", "--lambda", "-5"],
])
def test_symbol_scan_bad_input(argv):
    assert main(argv) == 2


def test_expansion_check(tmp_path, capsys):
    out = tmp_path / "exp.json"
    assert main(["expansion-check", "--mu", "0.5", "--lambda", "0.2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["taylor_order"] >= 2.9
    assert main(["expansion-check", "--taylor-min-order", "5"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_propagate_decay_fit_band_report_plot(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["propagate", *SMALL_RUN, "--mu", "1", "--lambda", "0", "--out", str(out),
                 "--r1", "0.5", "--r2", "1.0", "--spacing", "log", "--outputs", "12",
                 "--t-final", "20"]) == 0
    series = read_series_csv(out / "series.csv")
    assert "l2_high" in series.values and series.metadata["mu"] == "1.0"
    code = main(["decay-fit", str(out / "series.csv"), "--window", "1,20",
                 "--out", str(tmp_path / "fit.json")])
    assert code in (0, 1)
    table = json.loads((tmp_path / "fit.json").read_text())
    assert [r["norm"] for r in table["rows"]] == ["l2_total", "grad_dt", "linf_total"]
    assert code == (0 if table["passed"] else 1)
    # a box of half-width 6 wraps around near t = 1, so the window is flagged
    main(["decay-fit", str(out / "series.csv"), "--norms", "l2_total", "--window", "1,20"])
    err = capsys.readouterr().err
    assert "wrap-around" in err
    assert main(["band-report", str(out / "series.csv"), "--window", "1,20"]) in (0, 1)
    svg = tmp_path / "plot.svg"
    assert main(["plot", str(out / "series.csv"), "--out", str(svg)]) == 0
    assert svg.read_text().lstrip().startswith("<?xml")


def test_propagate_needs_out_and_valid_config(tmp_path):
    assert main(["propagate", *SMALL_RUN]) == 2
    assert main(["propagate", *SMALL_RUN, "--dt", "0.1", "--out", str(tmp_path)]) == 2
    assert main(["propagate", *SMALL_RUN, "--mode", "nonlinear", "--out", str(tmp_path)]) == 2
    assert main(["propagate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("grid_n = sixteen\n")
    assert main(["propagate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_propagate_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid_n = 16\nbox_l = 6\nt_final = 1\noutputs = 2\n")
    assert main(["propagate", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / "o")]) == 0
    assert read_series_csv(tmp_path / "o" / "series.csv").metadata["seed"] == "3"


def test_density_violation_exits_3(tmp_path, capsys):
    code = main(["propagate", *SMALL_RUN, "--mode", "nonlinear", "--dt", "0.1", "--amplitude", "40",
                 "--normalize", "l2", "--potential-weight", "1", "--out", str(tmp_path)])
    assert code == 3
    assert "t=" in capsys.readouterr().err
    assert (tmp_path / "series.csv").exists()


def test_zero_amplitude_run_is_fine(tmp_path):
    assert main(["propagate", *SMALL_RUN, "--amplitude", "0", "--out", str(tmp_path)]) == 0


def test_file_errors_exit_4(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,a\n1,x\n")
    assert main(["decay-fit", str(bad)]) == 4
    assert main(["decay-fit", str(tmp_path / "missing.csv")]) == 4
    assert main(["snapshot-info", str(tmp_path / "missing.vdl")]) == 4


def test_snapshot_info_and_truncation(tmp_path, capsys):
    assert main(["propagate", *SMALL_RUN, "--out", str(tmp_path)]) == 0
    snap = tmp_path / "snapshot_0003.vdl"
    capsys.readouterr()
    assert main(["snapshot-info", str(snap), "--verify"]) == 0
    head = json.loads(capsys.readouterr().out)
    assert head["n_points"] == 16 and head["finite"] and head["t"] == 2.0
    raw = snap.read_bytes()
    snap.write_bytes(raw[:-100])
    assert main(["snapshot-info", str(snap)]) == 4
    assert main(["snapshot-info", str(snap), "--verify"]) == 4


def test_helmholtz_check(capsys):
    assert main(["helmholtz-check", "--grid-n", "12", "--box-l", "2", "--seed", "4"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["helmholtz-check", "--grid-n", "7"]) == 2


def test_decay_fit_on_exact_power_law(tmp_path):
    t = np.geomspace(1, 60, 30)
    lines = ["t,l2_total,l2_grad,l2_dt,linf_total"]
    for ti in t:
        ti = float(ti)
        lines.append(f"{ti!r},{ti ** -0.75!r},{0.5 * ti ** -1.25!r},{0.5 * ti ** -1.25!r},"
                     f"{ti ** -1.5!r}")
    path = tmp_path / "s.csv"
    path.write_text("\n".join(lines) + "\n")
    assert main(["decay-fit", str(path)]) == 0
    assert main(["decay-fit", str(path), "--q", "2"]) == 1
    assert main(["decay-fit", str(path), "--norms", "l2_total,unknown"]) == 2
