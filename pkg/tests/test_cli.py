import csv
import io
import os
import subprocess
import sys

import pytest

from etk import cli, make_system, rate_constants

HEADER = ("axis_name,tau_l_ps,e0_kjmol,lambda_kjmol,v_kjmol,temp_k,s_psinv,k_fwd_psinv,"
          "k_bwd_psinv,dg_kjmol,ds_kjmol_per_k,dh_kjmol,kappa,n_used,validity")


def run(args, **env):
    full = dict(os.environ, **env)
    return subprocess.run([sys.executable, "-m", "etk.cli", *args], capture_output=True,
                          text=True, env=full)


def call(args):
    buf = io.StringIO()
    code = cli.main(args, stdout=buf)
    return code, buf.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_rates_header_and_values():
    code, out = call(["rates", "--axis", "tau_l", "--log", "1e-3:100:4"])
    assert code == 0
    assert out.splitlines()[0] == HEADER
    data = rows(out)
    assert len(data) == 4
    assert [r["axis_name"] for r in data] == ["tau_l"] * 4
    assert data[0]["dg_kjmol"] == ""


def test_rows_regenerate_from_parameters():
    _, out = call(["rates", "--axis", "e0", "--lin", "-6:0:3", "--tau-l", "10", "--v", "0.01"])
    for r in rows(out):
        sys_ = make_system(float(r["e0_kjmol"]), float(r["lambda_kjmol"]), float(r["v_kjmol"]),
                           float(r["temp_k"]), float(r["tau_l_ps"]))
        assert float(r["k_fwd_psinv"]) == rate_constants(sys_).forward


def test_seventeen_significant_digits():
    _, out = call(["rates", "--axis", "v", "--lin", "0.5:1:2"])
    mantissa = rows(out)[0]["k_fwd_psinv"].split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) == 17


def test_byte_identical_across_workers():
    args = ["rates", "--axis", "tau_l", "--log", "1e-3:10:6"]
    serial = run(args, ETK_THREADS="1")
    parallel = run(args, ETK_THREADS="3")
    assert serial.returncode == parallel.returncode == 0
    assert serial.stdout == parallel.stdout
    assert run(args, ETK_THREADS="1").stdout == serial.stdout


def test_thermo_symmetric_row():
    code, out = call(["thermo", "--axis", "tau_l", "--log", "0.01:10:3", "--e0", "0"])
    assert code == 0
    assert all(abs(float(r["dg_kjmol"])) < 1e-6 for r in rows(out))


def test_thermo_two_dimensional():
    code, out = call(["thermo", "--axis", "lambda", "--lin", "1:6:2",
                      "--axis2", "tau_l", "--log2", "0.01:1:3"])
    data = rows(out)
    assert code == 0 and len(data) == 6
    assert data[0]["axis_name"] == "lambda:tau_l"
    assert [float(r["lambda_kjmol"]) for r in data[:3]] == [1.0] * 3


def test_outputs_selection():
    _, out = call(["rates", "--axis", "v", "--lin", "0.5:1:2", "--outputs", "k"])
    r = rows(out)[0]
    assert r["k_fwd_psinv"] and not r["k_bwd_psinv"] and not r["n_used"]


@pytest.mark.parametrize("args", [
    ["rates", "--axis", "tau_l", "--log", "1:2:1"],
    ["rates", "--axis", "tau_l", "--log", "0:2:5"],
    ["rates", "--axis", "tau_l", "--lin", "1:2"],
    ["rates", "--axis", "tau_l"],
    ["rates", "--axis", "bogus", "--lin", "1:2:3"],
    ["rates", "--axis", "v", "--lin", "1:2:3", "--outputs", "nope"],
])
def test_usage_errors(args):
    res = run(args)
    assert res.returncode == 2
    assert "usage" in res.stderr


def test_numerical_failure_names_point():
    res = run(["rates", "--axis", "lambda", "--lin", "-1:1:3"])
    assert res.returncode == 3
    assert "lambda=-1" in res.stderr


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "sys.conf"
    cfg.write_text("# weak coupling\ne0 = -3\nv = 0.01\ntau_l = 10\n")
    _, a = call(["rates", "--axis", "temperature", "--lin", "298:300:2", "--config", str(cfg)])
    assert float(rows(a)[0]["v_kjmol"]) == 0.01
    _, b = call(["rates", "--axis", "temperature", "--lin", "298:300:2", "--config", str(cfg),
                 "--v", "0.02"])
    assert float(rows(b)[0]["v_kjmol"]) == 0.02


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("colour = blue\n")
    assert run(["rates", "--axis", "v", "--lin", "1:2:2", "--config", str(cfg)]).returncode == 2


def test_gnuplot_script(tmp_path):
    out = tmp_path / "k.csv"
    gp = tmp_path / "k.gp"
    code, _ = call(["rates", "--axis", "tau_l", "--log", "0.01:1:2", "-o", str(out),
                    "--gnuplot", str(gp)])
    assert code == 0 and out.read_text().startswith(HEADER)
    script = gp.read_text()
    assert str(out) in script and "logscale x" in script


def test_propagate_csv(tmp_path):
    out = tmp_path / "traj.csv"
    code, _ = call(["propagate", "--depth", "8", "--t-end", "0.2", "--samples", "5",
                    "-o", str(out)])
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "t_ps,p_a,p_b,trace_err"
    assert float(lines[-1].split(",")[0]) == pytest.approx(0.2, rel=1e-12)


def test_verify_single_criterion():
    code, out = call(["verify", "--only", "kappa"])
    assert code == 0
    assert out.splitlines()[0].startswith("[PASS]  1 kappa calibration")
    assert call(["verify", "--only", "nope"])[0] == 2
