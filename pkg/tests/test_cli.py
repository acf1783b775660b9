import hashlib
import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from llg_lattice.cli import (EXIT_CHECKS, EXIT_CONFIG, EXIT_ERROR, EXIT_OK, LOCK_NAME,
                             ExperimentConfig, list_presets, load_config, main, run)
from llg_lattice.io import read_pgm, read_snapshot
from llg_lattice.presets import PRESETS, ConfigError


def write_config(path, body):
    path.write_text(textwrap.dedent(body))
    return path


SMALL_DECAY = """
    [experiment]
    preset = energy-decay
    seed = 3
    [grid]
    n = 16
    [solver]
    t_end = 0.05
"""


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("energy-decay", "kernel-slopes", "concentration-bubble"):
        assert name in out
    assert len(list_presets().splitlines()) == len(PRESETS) == 12


def test_run_config_writes_artifacts_and_manifest(tmp_path, capsys):
    cfg = write_config(tmp_path / "run.ini", SMALL_DECAY)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert "ok:" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["seed"] == 3
    assert manifest["config"]["sections"]["grid"]["n"] == "16"
    names = {f["name"] for f in manifest["files"]}
    assert names == {"energy.csv", "initial.llgf", "final.llgf", "energy_density.pgm"}
    for f in manifest["files"]:
        assert hashlib.sha256((out / f["name"]).read_bytes()).hexdigest() == f["sha256"]
    # manifest is written last
    mtime = (out / "manifest.json").stat().st_mtime_ns
    assert all((out / n).stat().st_mtime_ns <= mtime for n in names)
    scale = manifest["pgm_scales"]["energy_density.pgm"]
    assert scale["min"] < scale["max"]
    assert read_pgm(out / "energy_density.pgm").shape == (16, 16)
    assert read_snapshot(out / "final.llgf").values.shape == (16, 16, 3)
    assert not (out / LOCK_NAME).exists()
    energy = np.loadtxt(out / "energy.csv", delimiter=",", skiprows=1)[:, 1]
    assert np.all(np.diff(energy) <= 0)


def test_negative_h_is_rejected_before_running(tmp_path, capsys):
    cfg = write_config(tmp_path / "bad.ini", """
        [experiment]
        preset = energy-decay
        [grid]
        h = -0.1
    """)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "grid.h" in err
    assert not out.exists()


@pytest.mark.parametrize("body, field", [
    ("[experiment]\npreset = nope\n", "experiment.preset"),
    ("[experiment]\nseed = 1\n", "experiment.preset"),
    ("[experiment]\npreset = energy-decay\nseed = x\n", "experiment.seed"),
    ("[experiment]\npreset = energy-decay\n[solver]\nalpha = -1\n", "solver.alpha"),
    ("[experiment]\npreset = energy-decay\n[target]\nsurface = cube\n", "target.surface"),
    ("[experiment]\npreset = energy-decay\n[grid]\nboundary = open\n", "grid.boundary"),
    ("[experiment]\npreset = energy-decay\n[bogus]\nx = 1\n", "config"),
])
def test_config_errors_name_the_field(tmp_path, body, field):
    cfg = tmp_path / "c.ini"
    cfg.write_text(body)
    with pytest.raises(ConfigError, match=f"^{field}"):
        config = load_config(cfg, out=tmp_path / "o")
        run(config)


def test_locked_directory_is_refused(tmp_path, capsys):
    out = tmp_path / "out"
    out.mkdir()
    (out / LOCK_NAME).write_text("123\n")
    assert main(["run", "--preset", "kernel-mass", "--out", str(out)]) == EXIT_ERROR
    assert "locked" in capsys.readouterr().err


def test_threads_env_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("LLG_LATTICE_THREADS", "zero")
    assert main(["run", "--preset", "kernel-mass", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "LLG_LATTICE_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("LLG_LATTICE_THREADS", "1")
    assert main(["run", "--preset", "kernel-mass", "--out", str(tmp_path), "--threads", "0"]) == EXIT_OK


def test_runtime_failure_is_recorded(tmp_path):
    # sphere-valued initial data is off the torus, so the run fails inside the solver
    cfg = write_config(tmp_path / "t.ini", SMALL_DECAY + "    [target]\n    surface = torus:2,1\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_ERROR
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert "OffManifoldError" in manifest["error"]
    assert {f["name"] for f in manifest["files"]} == {"initial.llgf"}


def test_failed_check_sets_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.ini", """
        [experiment]
        preset = energy-conservation
        [grid]
        n = 16
        [solver]
        t_end = 0.2
        dt_factor = 0.34
    """)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CHECKS
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == "checks_failed"
    assert manifest["checks"] == {"energy_conserved": False}


def test_input_hash_depends_on_inputs():
    a = ExperimentConfig("kernel-mass", 0)
    b = ExperimentConfig("kernel-mass", 1)
    c = ExperimentConfig("kernel-mass", 0, sections={"analysis": {"h": "0.03125"}})
    assert len({a.input_hash(), b.input_hash(), c.input_hash()}) == 3
    assert a.input_hash() == ExperimentConfig("kernel-mass", 0).input_hash()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "llg_lattice", "list-presets"],
                          capture_output=True, text=True, check=True)
    assert "small-energy-regularity" in proc.stdout
