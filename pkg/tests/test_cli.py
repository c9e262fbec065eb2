import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from strata_lab.cli_harness import (SUBCOMMANDS, ConfigError,
                                    ExperimentConfig, _fmt, config_hash, main,
                                    run)

SMALL = {
    "energies": [0.5],
    "n": 64,
    "n_ladder": [30],
    "eps_grid": [0.02, 0.05],
    "seed": 1,
}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("raw", [
    {"bogus_key": 1},
    {"eps": -0.01},
    {"eps": 0.6},                              # reaches outside the strip
    {"eps_grid": [0.05]},
    {"eps_grid": [-0.01, 0.05]},
    {"alpha": "bogus"},
    {"potential": "cos(2)"},
    {"energies": {"start": 0.0, "stop": 1.0, "qty": 3}},
    {"energies": {"start": 0.0, "stop": 1.0, "count": 0}},
    {"energies": 0.5},
    {"riesz": {"jensen_radii": [0.04, 0.01]}},
])
def test_config_rejections(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_raw(raw)


def test_config_energy_range_form():
    cfg = ExperimentConfig.from_raw(
        {"energies": {"start": -1.0, "stop": 1.0, "count": 5}})
    assert cfg.energies == tuple(np.linspace(-1.0, 1.0, 5))


def test_config_hash_ignores_out_dir_only():
    assert config_hash({}) == config_hash({"out_dir": "elsewhere"})
    assert config_hash({}) != config_hash({"seed": 1})
    assert config_hash(SMALL) == config_hash(dict(SMALL))


def test_fmt_is_locale_free():
    assert _fmt(True) == "1"
    assert _fmt(False) == "0"
    assert _fmt(None) == ""
    assert _fmt(5) == "5"
    assert _fmt(1.0 / 3.0) == "0.333333333333"


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        run("frobnicate", config=SMALL)


# ------------------------------------------------------------------ runs

def test_lyapunov_run_writes_expected_tables(tmp_path):
    man = run("lyapunov", config=SMALL, out_dir=str(tmp_path))
    assert man.ok
    assert man.subcommand == "lyapunov"
    assert man.config_hash == config_hash(SMALL)
    assert set(man.files) == {"lyapunov.csv"}
    assert (tmp_path / "manifest.json").exists()
    rows = read_rows(tmp_path / "lyapunov.csv")
    header, data = rows[0], rows[1:]
    assert "E" in header and "eps" in header
    # eps sweep includes the real phase plus the whole grid
    assert len(data) == 1 + len(SMALL["eps_grid"])
    meta = json.loads((tmp_path / "manifest.json").read_text())
    assert meta["subcommand"] == "lyapunov"
    assert meta["config_hash"] == man.config_hash


def test_reruns_and_threads_are_byte_identical(tmp_path):
    outs = {}
    for tag, threads in (("a", 1), ("b", 1), ("c", 2)):
        d = tmp_path / tag
        run("zeros", config=SMALL, out_dir=str(d), threads=threads)
        outs[tag] = {p.name: p.read_bytes() for p in d.glob("*.csv")}
    assert outs["a"] == outs["b"]
    assert outs["a"] == outs["c"]


def test_seed_override_changes_hash(tmp_path):
    man = run("lyapunov", config=SMALL, out_dir=str(tmp_path), seed=99)
    assert man.seed == 99
    assert man.config_hash == config_hash(dict(SMALL, seed=99))


def test_dry_run_writes_nothing(tmp_path):
    man = run("zeros", config=SMALL, out_dir=str(tmp_path), dry_run=True)
    assert len(man.tasks) > 0
    assert list(tmp_path.iterdir()) == []


def test_empty_energies_yield_headers_only(tmp_path):
    man = run("ids", config=dict(SMALL, energies=[]), out_dir=str(tmp_path))
    assert man.ok
    rows = read_rows(tmp_path / "ids.csv")
    assert len(rows) == 1  # header only


def test_gap_precondition_is_skipped_not_failed(tmp_path):
    man = run("verify-acc-zeros", config=dict(SMALL, energies=[1.5]),
              out_dir=str(tmp_path))
    assert man.ok
    assert [t["status"] for t in man.tasks] == ["skipped"]
    assert "slope break" in man.tasks[0]["error"]


def test_failed_task_keeps_other_outputs(tmp_path):
    # ids below its minimum size fails that task but still writes headers
    bad = dict(SMALL, ids={"n": 50, "samples": 2})
    man = run("ids", config=bad, out_dir=str(tmp_path))
    assert not man.ok
    assert man.n_failed == 1
    assert (tmp_path / "ids.csv").exists()


def test_ldt_run_writes_geometry_json(tmp_path):
    cfg = dict(SMALL, ldt={"threshold": 0.05, "grid_per_n": 4096,
                           "scan_count": 2})
    man = run("ldt", config=cfg, out_dir=str(tmp_path))
    assert man.ok
    assert (tmp_path / "ldt_geometry_0.json").exists()
    geom = json.loads((tmp_path / "ldt_geometry_0.json").read_text())
    assert geom["n"] == SMALL["n"]
    assert len(read_rows(tmp_path / "resonance_scan.csv")) >= 2


def test_strata_uniform_grid_writes_summary(tmp_path):
    cfg = dict(SMALL, energies={"start": -1.0, "stop": 1.0, "count": 5},
               strata={"tau_pos": 0.05, "spectrum_box": 120,
                       "spectrum_theta": 0.123})
    man = run("strata", config=cfg, out_dir=str(tmp_path))
    assert man.ok
    summary = json.loads((tmp_path / "strata_summary.json").read_text())
    assert summary["cell_width"] == pytest.approx(0.5)
    assert sum(summary["measure"].values()) == pytest.approx(0.5 * 5)


# ------------------------------------------------------------------ main

def test_main_green_exits_zero(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    code = main(["green", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "green_suite.csv").exists()


def test_main_config_error_exits_two(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"bogus_key": 1}))
    assert main(["lyapunov", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out")]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_main_missing_config_exits_two(tmp_path):
    assert main(["lyapunov", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 2


def test_main_failed_task_exits_three(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(dict(SMALL, ids={"n": 50, "samples": 2})))
    assert main(["ids", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out")]) == 3


def test_main_dry_run_exits_zero(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    assert main(["zeros", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out"), "--dry-run"]) == 0
    assert not (tmp_path / "out").exists() or not any(
        Path(tmp_path / "out").iterdir())


def test_module_entry_point(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    proc = subprocess.run(
        [sys.executable, "-m", "strata_lab.cli_harness", "lyapunov",
         "--config", str(cfg_path), "--out", str(tmp_path / "out")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
    assert (tmp_path / "out" / "lyapunov.csv").exists()


def test_subcommand_listing_is_stable():
    assert "all" in SUBCOMMANDS
    assert "lyapunov" in SUBCOMMANDS
    assert len(SUBCOMMANDS) == 12
