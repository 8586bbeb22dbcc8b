import math
import os
import subprocess

import numpy as np
import pytest

import srbvol

CLI = os.environ.get("SRBVOL_CLI")


def test_norms_and_closed_form_det():
    assert srbvol.norm("lp:inf:2", np.array([3.0, -4.0])) == 4.0
    assert srbvol.norm("lp:1:2", np.array([3.0, -4.0])) == 7.0
    value, _ = srbvol.det("lp:inf:2", np.diag([2.0, 3.0]), np.eye(2))
    assert value == pytest.approx(6.0, rel=1e-14)


def test_unit_ball_volume_of_the_square():
    value, se = srbvol.unit_ball_coord_volume("lp:inf:2", np.eye(2), seed=3, rel_err=5e-3)
    assert abs(value - 4.0) <= 3 * se


def test_input_errors_surface_as_exceptions():
    with pytest.raises(srbvol.InputError):
        srbvol.norm("lp:0.5:2", np.zeros(2))
    with pytest.raises(srbvol.InputError):
        srbvol.lyapunov("henon")


def test_lyapunov_diagonal():
    rep = srbvol.lyapunov("diag_linear:2,0.5", steps=1000)
    assert rep["exponents"][0] == pytest.approx(math.log(2), abs=1e-9)
    assert rep["exponents"][1] == pytest.approx(-math.log(2), abs=1e-9)


def test_entropy_check_solenoid():
    rep = srbvol.entropy_check("solenoid", steps=20000)
    assert rep["exponent_sum"] == pytest.approx(math.log(2), abs=1e-3)


def test_srb_density_masses():
    rep = srbvol.srb_density(bins=16)
    assert sum(rep["predicted"]) == pytest.approx(1.0, abs=1e-9)
    assert min(rep["profile"]["q"]) > 0


def run_cli(*args, **kw):
    return subprocess.run([CLI, *args], capture_output=True, text=True, **kw)


@pytest.mark.skipif(CLI is None, reason="SRBVOL_CLI not set")
class TestCli:
    def test_examples(self):
        r = run_cli("det", "--space", "lp:inf:2", "--matrix", "2 0 0 3", "--basis", "e1,e2")
        assert r.returncode == 0 and r.stdout.splitlines()[0] == "6"
        r = run_cli("lyap", "--system", "diag_linear:2,0.5", "--steps", "1000")
        assert r.returncode == 0
        assert "lambda_1 0.693147" in r.stdout and "lambda_2 -0.693147" in r.stdout

    def test_exit_codes(self, tmp_path):
        assert run_cli("det", "--bogus").returncode == 1
        assert run_cli("nonsense").returncode == 1
        assert run_cli("det", "--space", "lp:inf:2", "--matrix", "1 2 3").returncode == 1
        # No expanding direction: numerical (hyperbolicity) failure.
        assert run_cli("unstable", "--system", "diag_linear:0.5,0.25", "--steps", "200").returncode == 2
        assert run_cli("--help").returncode == 0

    def test_config_and_environment(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"space": "lp:inf:2", "matrix": "2 0 0 5", "basis": "e1,e2"}')
        assert run_cli("det", "--config", str(cfg)).stdout.splitlines()[0] == "10"
        env = dict(os.environ, SRBVOL_MATRIX="3 0 0 3")
        assert run_cli("det", "--config", str(cfg), env=env).stdout.splitlines()[0] == "9"
        assert run_cli("det", "--config", str(cfg), "--matrix", "1 0 0 2", env=env).stdout.splitlines()[0] == "2"

    def test_artifacts_repeat_byte_for_byte(self, tmp_path):
        outs = []
        for workers in ("1", "2"):
            d = tmp_path / workers
            r = run_cli("srb-density", "--system", "solenoid", "--points", "200000", "--bins", "16",
                        "--steps", "5000", "--seed", "9", "--workers", workers, "--out", str(d), "--plot")
            assert r.returncode == 0, r.stderr
            outs.append([(d / f).read_bytes() for f in ("srb-density.csv", "srb-density.json", "srb-density.svg")])
        assert outs[0] == outs[1]
        csv = outs[0][0].decode()
        assert "# seed=9" in csv.splitlines()[:8]
