import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from birot.cli import exit_code_for, main
from birot.config import ConfigError, ScenarioConfig, parse_config_text, serialize_config
from birot.fields import AxisValueError, GridSpec, QuadrantPoint, ScalarField, write_field
from birot.kernel import KernelConvergenceError, QuadratureSpec
from birot.scenarios import DiagonalAntisymmetricPair, FromFile, GaussianBlob, RingProduct

SMALL = """\
grid.r_max = 3.0
grid.s_max = 3.0
grid.n_r = 24
grid.n_s = 24
initial.kind = gaussian_blob
initial.center = 1.0 1.0
initial.width = 0.3
time.dt = 0.01
time.t_end = 0.03
output.figures = {figures}
output.dir = {out}
"""


def write_config(where, extra="", figures="false", replace=None, drop=()):
    """Config for a short small-grid run in ``where``.

    ``replace`` maps keys to new values, ``drop`` removes keys, ``extra`` is appended.
    """
    where.mkdir(exist_ok=True)
    out = where / "out"
    replace = replace or {}
    lines = []
    for line in SMALL.format(out=out, figures=figures).splitlines():
        key = line.split(" = ")[0]
        if key in drop:
            continue
        lines.append(f"{key} = {replace[key]}" if key in replace else line)
    path = where / "cfg.txt"
    path.write_text("\n".join(lines) + "\n" + extra)
    return path, out


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# config

@pytest.mark.parametrize("cfg", [
    ScenarioConfig(),
    ScenarioConfig(grid=GridSpec(3.0, 2.5, 30, 25, "node_centered"),
                   initial_data=DiagonalAntisymmetricPair(QuadrantPoint(1.1, 0.4), 0.2, -2.0),
                   dt=0.005, t_end=0.25, quad=QuadratureSpec("clenshaw_curtis", 48, 48, False, 0.1, 6),
                   seed_threshold=0.0, output_dir="runs/a b", emit_every=5, checkpoint_every=10,
                   probe_points=(QuadrantPoint(0.1, 0.2), QuadrantPoint(3.0, 1.0 / 3.0)),
                   figures=False, override_hypothesis=True),
    ScenarioConfig(initial_data=RingProduct(1.5, 0.75, 0.3, 0.1)),
    ScenarioConfig(initial_data=FromFile("data/zeta0.txt")),
])
def test_config_round_trip(cfg):
    text = serialize_config(cfg)
    assert parse_config_text(text) == cfg
    assert serialize_config(parse_config_text(text)) == text


def test_config_defaults_and_comments():
    cfg = parse_config_text("# only a comment\n\ntime.dt = 0.02  # trailing\n")
    assert cfg.dt == 0.02 and cfg.initial_data == GaussianBlob()


@pytest.mark.parametrize("text", [
    "grid.n_q = 3\n",
    "time.dt = fast\n",
    "time.dt = 0.5\ntime.t_end = 0.1\n",
    "initial.kind = vortex_sheet\n",
    "initial.kind = ring_product\ninitial.center = 1 1\n",
    "time.dt = 0.1\ntime.dt = 0.2\n",
    "grid.r_max = -1\n",
    "probes.points = 1 -2\n",
    "just words\n",
])
def test_invalid_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_scaled_config_divides_lengths_and_times():
    cfg = ScenarioConfig(probe_points=(QuadrantPoint(1.0, 2.0),)).scaled(2.0)
    assert cfg.grid.r_max == 2.0 and cfg.dt == 0.005 and cfg.t_end == 0.5
    assert cfg.initial_data.amplitude == 8.0 and cfg.probe_points[0] == (0.5, 1.0)


# ---------------------------------------------------------------------------
# run

def test_run_writes_every_artifact(tmp_path, capsys):
    path, out = write_config(tmp_path, "output.checkpoint_every = 2\nprobes.points = 2.5 0.5\n",
                             figures="true")
    assert main(["run", str(path)]) == 0
    for name in ("config.txt", "diagnostics.csv", "checkpoint_000002.txt", "checkpoint_final.txt",
                 "zeta_final.txt", "w_final.txt", "summary.json", "diagnostics.png",
                 "w_final.png", "w_initial.png"):
        assert (out / name).is_file(), name
    rows = read_rows(out / "diagnostics.csv")
    assert len(rows) == 4 and float(rows[-1]["time"]) == pytest.approx(0.03)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["steps"] == 3 and len(summary["probes"]) == 1
    assert "done:" in capsys.readouterr().out


def test_zero_amplitude_run_has_all_zero_diagnostics(tmp_path):
    path, out = write_config(tmp_path, "initial.amplitude = 0.0\n")
    assert main(["run", str(path), "--quiet"]) == 0
    for row in read_rows(out / "diagnostics.csv"):
        for name, value in row.items():
            if name == "length_L":
                assert float(value) == 1.0
            elif name != "time":
                assert float(value) == 0.0, name


def test_runs_are_bit_reproducible(tmp_path):
    a, out_a = write_config(tmp_path / "a")
    b, out_b = write_config(tmp_path / "b")
    assert main(["run", str(a), "--quiet"]) == 0
    assert main(["run", str(b), "--quiet"]) == 0
    assert (out_a / "diagnostics.csv").read_bytes() == (out_b / "diagnostics.csv").read_bytes()
    assert (out_a / "checkpoint_final.txt").read_bytes() == (out_b / "checkpoint_final.txt").read_bytes()


def _error(where):
    rec = json.loads((where / "error.json").read_text())
    return rec["exit_code"], rec


def test_invalid_config_exits_2_with_error_record(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("grid.n_q = 3\n")
    assert main(["run", str(path)]) == 2
    code, rec = _error(tmp_path)
    assert code == 2 and rec["error"] == "ConfigError"


def test_cfl_violation_exits_3(tmp_path):
    path, out = write_config(tmp_path, "initial.amplitude = 50.0\n", replace={"time.dt": 0.03})
    assert main(["run", str(path), "--quiet"]) == 3
    code, rec = _error(out)
    assert code == 3 and rec["speed"] > 0 and rec["limit"] > 0


def test_truncated_data_exits_5(tmp_path):
    path, out = write_config(tmp_path, replace={"initial.width": 2.0})
    assert main(["run", str(path), "--quiet"]) == 5
    assert _error(out)[0] == 5


def test_non_finite_initial_data_exits_6(tmp_path):
    g = GridSpec(3.0, 3.0, 24, 24)
    vals = GaussianBlob(width=0.3).zeta(g).values
    vals[10, 10] = np.inf
    write_field(tmp_path / "zeta0.txt", ScalarField(g, vals))
    path, out = write_config(tmp_path, f"initial.path = {tmp_path / 'zeta0.txt'}\n",
                             replace={"initial.kind": "from_file"},
                             drop=("initial.center", "initial.width"))
    assert main(["run", str(path), "--quiet"]) == 6
    assert _error(out)[0] == 6


def test_exit_code_table():
    assert exit_code_for(KernelConvergenceError("x", (1.0, 2.0))) == 4
    assert exit_code_for(AxisValueError("x")) == 7
    assert exit_code_for(RuntimeError("x")) == 1


# ---------------------------------------------------------------------------
# probe and verify

def test_probe_prints_velocity_from_checkpoint(tmp_path, capsys):
    path, out = write_config(tmp_path)
    assert main(["run", str(path), "--quiet"]) == 0
    capsys.readouterr()
    assert main(["probe", str(out / "checkpoint_final.txt"), "2.5", "0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("u_r = ") and lines[1].startswith("u_s = ")
    assert float(lines[0].split("=")[1]) != 0.0


def test_verify_lorentz_suite_passes(capsys):
    assert main(["verify", "lorentz"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS [11]")


def test_module_entry_point_respects_thread_setting(tmp_path):
    path, out = write_config(tmp_path)
    env = dict(os.environ, BIROT_NUM_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "birot", "run", str(path), "--quiet"],
                          env=env, capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    assert (out / "diagnostics.csv").is_file()
