import json
import math

import numpy as np
import pytest

from fjmgt.cli import main
from fjmgt.errors import ConfigError, OutputError
from fjmgt.experiments import SweepEntry, SweepResult
from fjmgt.io import parse_config, parse_run, read_csv, read_trajectory, resolve_out_dir, write_csv, write_manifest
from fjmgt.kernels import Kernel
from fjmgt.solver import InitialData, Trajectory, solve_linear

BASE = """
[scenario]
scenario = "{scenario}"
tau = 0.01
{extra}

[discretization]
n_modes = 4
dt = 1e-3
T = 0.1
"""


def text(scenario="jmgt", extra=""):
    return BASE.format(scenario=scenario, extra=extra)


def test_jmgt_pair_autofilled():
    cfg = parse_config(text())
    assert (cfg.pair.k1, cfg.pair.k2, cfg.pair.power_a) == (Kernel.delta(), Kernel.one(), 1.0)
    assert cfg.tau == 0.01


def test_gfe1_pair_autofilled():
    cfg = parse_config(text("gfe1", "alpha = 0.3"))
    assert (cfg.pair.k1, cfg.pair.k2) == (Kernel.abel(0.7), Kernel.abel(0.3))
    assert cfg.pair.power_a == pytest.approx(0.3)


def test_unknown_key_named():
    with pytest.raises(ConfigError) as err:
        parse_config(text(extra="speed = 3"))
    assert "speed" in str(err.value)


def test_missing_dt_named():
    with pytest.raises(ConfigError) as err:
        parse_config('[scenario]\nscenario = "jmgt"\ntau = 0.1\n[discretization]\nT = 1.0\n')
    assert "dt" in str(err.value)


def test_gfe3_small_alpha_cites_resolvent():
    with pytest.raises(ConfigError) as err:
        parse_config(text("gfe3", "alpha = 0.5"))
    assert "resolvent" in str(err.value)


def test_all_problems_reported():
    with pytest.raises(ConfigError) as err:
        parse_config('[scenario]\nscenario = "jmgt"\nbogus = 1\n[extras]\n')
    msg = str(err.value)
    assert "bogus" in msg and "extras" in msg and "tau" in msg and "dt" in msg


def test_custom_kernels_and_data():
    spec = parse_run(
        '[scenario]\nscenario = "custom"\ntau = 0.0\nu0_modes = [0.5, 0.25]\n'
        '[kernels]\nkernel1 = "delta"\nkernel2 = "abel:0.4"\npower_a = 1.0\n'
        '[discretization]\nn_modes = 3\ndt = 0.01\nT = 0.1\n[output]\nout_dir = "x"\n')
    assert spec.config.pair.k2 == Kernel.abel(0.4)
    np.testing.assert_array_equal(spec.data.u0, [0.5, 0.25, 0.0])
    assert spec.out_dir == "x"


def test_u2_rejected_for_singular_leading_kernel():
    with pytest.raises(ConfigError):
        parse_config(text("gfe", "alpha = 0.5\nu2_modes = [1.0]"))


def test_trajectory_round_trip(tmp_path):
    cfg = parse_config(text(extra="u0_modes = [0.7, 0.1]"))
    tr = solve_linear(cfg, InitialData.from_modes(4, u0=[0.7, 0.1], u1=[0.3]))
    path = write_csv(tr, tmp_path / "t.csv")
    back = read_trajectory(path, tr.eigenvalues)
    for name in ("t", "x", "v", "w"):
        np.testing.assert_allclose(getattr(back, name), getattr(tr, name), rtol=1e-15, atol=0)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:4] == ["t", "mode_1_x", "mode_1_v", "mode_1_w"]


def test_empty_trajectory_header_only(tmp_path):
    empty = Trajectory(np.zeros(0), np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 2)), np.ones(2))
    path = write_csv(empty, tmp_path / "e.csv")
    assert path.read_text().splitlines() == ["t,mode_1_x,mode_1_v,mode_1_w,mode_2_x,mode_2_v,mode_2_w"]


def test_sweep_csv_rows(tmp_path):
    res = SweepResult(tuple(SweepEntry(t, t ** 0.5, 1.0, 0) for t in (1e-1, 1e-2, 1e-3, 1e-4)), 1.0)
    header, rows = read_csv(write_csv(res, tmp_path / "s.csv"))
    assert header[0] == "tau" and len(rows) == 4
    taus = [r[0] for r in rows]
    assert all(b < a for a, b in zip(taus, taus[1:]))


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError) as err:
        write_csv([], blocker / "sub" / "e.csv")
    assert str(blocker) in str(err.value)


def test_manifest_hash_deterministic(tmp_path):
    cfg = parse_config(text())
    a = json.loads(write_manifest(tmp_path / "a", cfg, "pass", 0.1).read_text())
    b = json.loads(write_manifest(tmp_path / "b", parse_config(text()), "pass", 0.2).read_text())
    assert a["config_hash"] == b["config_hash"] and len(a["config_hash"]) == 64
    assert a["config_hash"] != parse_config(text(extra="delta = 0.3")).content_hash()


def test_out_dir_precedence(monkeypatch):
    monkeypatch.setenv("FJMGT_OUT_DIR", "/env")
    assert str(resolve_out_dir(None)) == "/env"
    assert str(resolve_out_dir("cfg")) == "cfg"
    assert str(resolve_out_dir("cfg", "flag")) == "flag"


# CLI -------------------------------------------------------------------------------

def write(tmp_path, body, name="run.toml"):
    p = tmp_path / name
    p.write_text(body)
    return p


def test_cli_solve_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, text(extra="u0_modes = [0.7]"))
    assert main(["solve", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/trajectory.csv").read_bytes() == (tmp_path / "b/trajectory.csv").read_bytes()
    manifest = json.loads((tmp_path / "a/manifest.json").read_text())
    assert manifest["status"] == "pass"


def test_cli_sweep_converge_energy(tmp_path, capsys):
    cfg = write(tmp_path, text(extra="u0_modes = [0.7]\ntaus = [0.1, 0.01, 0.001]"))
    for cmd in ("sweep", "converge", "energy"):
        assert main([cmd, str(cfg), "--out", str(tmp_path / cmd), "--jobs", "2"]) == 0
    out = capsys.readouterr().out
    assert "fitted order" in out and "manufactured order" in out


def test_cli_kernel_validate(tmp_path, capsys):
    cfg = write(tmp_path, text("gfe1", "alpha = 0.3") + "\n[kernels]\ntrials = 64\n")
    assert main(["kernel", "validate", str(cfg), "--out", str(tmp_path / "k")]) == 0
    out = capsys.readouterr().out
    assert "H5_I" in out and "PASS" in out


def test_cli_certificate_failure_exit_1(tmp_path, capsys):
    # a negative leading kernel is not of positive type, so (H3) must fail
    body = ('[scenario]\nscenario = "custom"\ntau = 0.1\n'
            '[kernels]\nkernel1 = {grid = [0.0005, 1.0], values = [-1.0, -1.0]}\n'
            'kernel2 = "one"\npower_a = 1.0\ntrials = 64\n'
            '[discretization]\nn_modes = 4\ndt = 1e-3\nT = 0.1\n')
    cfg = write(tmp_path, body)
    assert main(["kernel", "validate", str(cfg), "--out", str(tmp_path / "k")]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    manifest = json.loads((tmp_path / "k/manifest.json").read_text())
    assert manifest["status"] == "fail"


def test_cli_config_error_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, text(extra="nope = 1"))
    assert main(["solve", str(cfg)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error[config]:")


def test_cli_solver_error_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, text(extra="u0_modes = [707.0]") + "\n[nonlinearity]\nmode = \"WB\"\nk1 = 1\nk2 = 1\nk3 = 1\n")
    assert main(["solve", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert capsys.readouterr().err.startswith("error[degenerate]:")


def test_cli_io_error_exit_4(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.toml")]) == 4
    assert capsys.readouterr().err.startswith("error[io]:")
