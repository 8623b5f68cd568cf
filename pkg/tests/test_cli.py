"""Command-line driver: modes, file inventory, exit codes, determinism."""

import subprocess
import sys

import pytest

from spinslice import read_metrics
from spinslice.cli import main

BASE = """[beam]
energy_kev = 100
ell = 1
spin = down
waist_um = 10

[filter]
q = -1
b0_mt = 3
r0_um = 10
core_length_cm = 5

[grid]
n = 64
extent_um = 80

[slices]
count = 8

[run]
mode = far_field
"""


@pytest.fixture()
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_cfg(workspace, text, name="run.cfg"):
    p = workspace / name
    p.write_text(text)
    return str(p)


def test_far_field_run_writes_expected_files(workspace, capsys):
    cfg = write_cfg(workspace, BASE)
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    names = sorted(p.name for p in (workspace / "out").iterdir())
    assert names == ["exit_down.spsl", "far_down_down.pgm", "far_down_up.pgm",
                     "metrics.csv", "provenance.json"]
    metrics = read_metrics(workspace / "out" / "metrics.csv")
    assert metrics["sampling_ok"] == 1
    assert 0.0 < metrics["in_down_flipped_fraction"] < 1.0
    assert metrics["in_down_flipped_dominant_m"] == 0
    text = capsys.readouterr().out
    assert "mode:   far_field" in text
    assert "flipped fraction" in text


def test_rerun_metrics_are_byte_identical(workspace):
    cfg = write_cfg(workspace, BASE)
    assert main(["--config", cfg, "--output-dir", "a"]) == 0
    assert main(["--config", cfg, "--output-dir", "b"]) == 0
    assert ((workspace / "a" / "metrics.csv").read_bytes()
            == (workspace / "b" / "metrics.csv").read_bytes())


def test_spin_both_adds_separability(workspace):
    cfg = write_cfg(workspace, BASE.replace("spin = down", "spin = both"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    metrics = read_metrics(workspace / "out" / "metrics.csv")
    assert "separability_up" in metrics and "separability_down" in metrics
    names = {p.name for p in (workspace / "out").iterdir()}
    assert {"exit_up.spsl", "exit_down.spsl", "far_up_up.pgm",
            "far_down_down.pgm"} <= names


def test_near_field_writes_phase_maps(workspace):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = near_field"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    names = {p.name for p in (workspace / "out").iterdir()}
    assert {"near_down_down.pgm", "near_down_down_phase.pgm",
            "near_down_up.pgm", "near_down_up_phase.pgm"} <= names


def test_check_only_writes_report_only(workspace, capsys):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = check_only"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    names = sorted(p.name for p in (workspace / "out").iterdir())
    assert names == ["metrics.csv", "provenance.json"]
    assert "phase-step check: ok" in capsys.readouterr().out


def test_check_only_reports_failing_configs(workspace):
    bad = BASE.replace("count = 8", "count = 1").replace(
        "b0_mt = 3", "b0_mt = 500\ncompensation_offset = -1")
    cfg = write_cfg(workspace, bad.replace("mode = far_field",
                                           "mode = check_only"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    assert read_metrics(workspace / "out" / "metrics.csv")["sampling_ok"] == 0


def test_ray_trace_mode(workspace):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = ray_trace"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    names = sorted(p.name for p in (workspace / "out").iterdir())
    assert names == ["metrics.csv", "provenance.json", "rays.pgm"]
    metrics = read_metrics(workspace / "out" / "metrics.csv")
    assert metrics["rays_total"] == 4096
    assert metrics["rays_dropped"] == 0
    assert metrics["rays_rms_radius"] == pytest.approx(10e-6, rel=0.05)


def test_sweep_writes_survey(workspace):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = sweep"))
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    lines = (workspace / "out" / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == "b0_mt,corrected,flipped_fraction"
    assert len(lines) == 1 + 8  # four fields, both toggle settings
    fractions = [float(row.split(",")[2]) for row in lines[1:]]
    assert all(0.0 < f < 1.0 for f in fractions)
    # uncorrected rows sit above the corrected ones at the same field
    assert fractions[1] > fractions[0]


def test_exit_codes(workspace, capsys):
    assert main(["--config", "missing.cfg"]) == 2
    assert "error:" in capsys.readouterr().err
    cfg = write_cfg(workspace, BASE.replace("n = 64", "n = 200"), "bad.cfg")
    assert main(["--config", cfg]) == 2
    assert "power of two" in capsys.readouterr().err
    und = BASE.replace("count = 8", "count = 1").replace(
        "b0_mt = 3", "b0_mt = 500\ncompensation_offset = -1")
    cfg = write_cfg(workspace, und, "und.cfg")
    assert main(["--config", cfg]) == 3
    err = capsys.readouterr().err
    assert "refine sampling" in err and "binding constraint: a_z" in err
    assert main(["--config", cfg, "--override-sampling",
                 "--output-dir", "forced"]) == 0


def test_fringe_only_needs_soft_edges(workspace, capsys):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = fringe_only"))
    assert main(["--config", cfg]) == 2
    assert "fringe_cm" in capsys.readouterr().err
    soft = BASE.replace("mode = far_field", "mode = fringe_only").replace(
        "core_length_cm = 5", "core_length_cm = 5\nfringe_cm = 1")
    cfg = write_cfg(workspace, soft, "soft.cfg")
    assert main(["--config", cfg, "--output-dir", "out"]) == 0
    fraction = read_metrics(
        workspace / "out" / "metrics.csv")["in_down_flipped_fraction"]
    assert 0.0 < fraction < 1e-3  # ramps alone convert far less than the core


def test_threads_flag_is_accepted(workspace):
    cfg = write_cfg(workspace, BASE)
    assert main(["--config", cfg, "--output-dir", "out",
                 "--threads", "2", "--seed", "1"]) == 0


def test_console_script_runs(workspace):
    cfg = write_cfg(workspace, BASE.replace("mode = far_field",
                                            "mode = check_only"))
    proc = subprocess.run([sys.executable, "-c",
                           "import sys; from spinslice.cli import main; "
                           "sys.exit(main(sys.argv[1:]))",
                           "--config", cfg, "--output-dir", "out"],
                          capture_output=True, text=True, cwd=workspace)
    assert proc.returncode == 0
    assert "phase-step check" in proc.stdout
