import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from magrod.analytic import delta_amplitude
from magrod.cli import ENV_OUTPUT, fmt, run


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def _meta(path, command):
    return json.loads((path / f"{command}.meta.json").read_text())


def test_number_format_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 123456789.0, math.pi):
        assert float(fmt(x)) == x
        assert "e" in fmt(x)
    assert fmt(3) == "3"


def test_melnikov_command(tmp_path):
    code = run(["melnikov", "--alpha", "0.5", "--mu", "1e-3", "--nu", "1e-4", "--grid", "64",
                "--output-dir", str(tmp_path)])
    assert code == 0
    header, data = _read(tmp_path / "melnikov_branch+1.csv")
    assert header == ["psi0", "M"] and len(data) == 64
    header, zeros = _read(tmp_path / "melnikov_zeros.csv")
    assert header == ["branch", "psi0", "slope", "simple"]
    for branch in (1, -1):
        kappas = np.sort(zeros[zeros[:, 0] == branch, 1])
        np.testing.assert_allclose(kappas, [0.0, math.pi], atol=1e-8)
    assert np.all(zeros[:, 3] == 1)


def test_delta_command(tmp_path):
    assert run(["delta", "--alpha-min", "0.3", "--alpha-max", "5", "--points", "100",
                "--output-dir", str(tmp_path)]) == 0
    header, data = _read(tmp_path / "delta.csv")
    assert header[:2] == ["alpha", "Delta"] and len(data) == 100
    np.testing.assert_allclose(data[:, 1], [delta_amplitude(a) for a in data[:, 0]], rtol=1e-15)
    np.testing.assert_allclose(data[:, 2], data[:, 1], rtol=1e-6)


def test_missing_equilibrium_is_domain_error(tmp_path, capsys):
    code = run(["equilibria", "--alpha", "0.5", "--mu", "0.015", "--nu", "0.01", "--eps", "0.01",
                "--output-dir", str(tmp_path)])
    assert code == 1
    assert "NoEquilibrium" in capsys.readouterr().err


def test_usage_errors_name_the_flag(tmp_path, capsys):
    assert run(["integrate", "--rtol", "0.5", "--output-dir", str(tmp_path)]) == 2
    assert "--rtol" in capsys.readouterr().err
    assert run(["integrate", "--state", "1,2", "--output-dir", str(tmp_path)]) == 2
    assert "--state" in capsys.readouterr().err
    assert run(["frobnicate"]) == 2
    assert run(["equilibria", "--B", "1.0", "--output-dir", str(tmp_path)]) == 2


def test_integrate_schema_and_determinism(tmp_path):
    argv = ["integrate", "--state", "1.0,0.3,0.1,0.8", "--t1", "20", "--samples", "50"]
    assert run(argv + ["--output-dir", str(tmp_path / "a")]) == 0
    assert run(argv + ["--output-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    header, data = _read(tmp_path / "a" / "trajectory.csv")
    assert header == ["t", "theta", "psi", "p_theta", "p_psi", "H", "F"]
    assert np.ptp(data[:, 5]) < 1e-8
    assert b"\r\n" not in a


def test_metadata_alone_reruns_the_command(tmp_path):
    first = tmp_path / "first"
    assert run(["eigs", "--alpha", "0.7", "--mu", "0.05", "--nu", "0.005", "--eps", "0.002",
                "--output-dir", str(first)]) == 0
    meta = _meta(first, "eigs")
    assert meta["params"]["alpha"] == 0.7 and meta["version"]
    argv = meta["rerun"]
    second = tmp_path / "second"
    argv[argv.index("--output-dir") + 1] = str(second)
    assert run(argv) == 0
    for name in meta["files"]:
        name = name.rsplit("/", 1)[-1]
        assert (first / name).read_bytes() == (second / name).read_bytes()
    # the metadata record also works as a config file
    third = tmp_path / "third"
    assert run(["eigs", "--config", str(first / "eigs.meta.json"), "--output-dir", str(third)]) == 0
    assert (first / "eigenvalues.csv").read_bytes() == (third / "eigenvalues.csv").read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalpha = 0.9\nmu = 0.05\nt1 = 5\nstate = 1.0,0.0,0.0,0.9\n")
    assert run(["integrate", "--config", str(cfg), "--mu", "0.06", "--output-dir", str(tmp_path)]) == 0
    meta = _meta(tmp_path, "integrate")
    assert meta["params"]["alpha"] == 0.9 and meta["params"]["mu"] == 0.06
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(["integrate", "--config", str(bad), "--output-dir", str(tmp_path)]) == 2


def test_json_format_and_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT, str(tmp_path))
    assert run(["equilibria", "--mu", "0.1", "--format", "json"]) == 0
    doc = json.loads((tmp_path / "equilibria.json").read_text())
    assert isinstance(doc, (list, dict))


def test_physical_parameters(tmp_path):
    argv = ["equilibria", "--B", "1.0", "--J", "1.0", "--K", "1.0", "--lam", "0.0", "--C1", "1.0",
            "--C2", "0.9", "--p-phi", "1.2", "--output-dir", str(tmp_path)]
    assert run(argv) == 0
    meta = _meta(tmp_path, "equilibria")
    assert meta["physical"]["C2"] == 0.9
    assert meta["params"]["alpha"] == pytest.approx(0.9 / 1.44)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "magrod", "homoclinic-analytic", "--alpha", "0.5",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "homoclinic_analytic" in proc.stdout
