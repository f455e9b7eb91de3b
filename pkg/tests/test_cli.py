import json
import subprocess

import pytest

from hysim import Mode, RandomSource, RunConfig, run_stochastic
from hysim.cli import main

CYCLE_PERIOD = 269.460794123  # frozen oracle, as in the executor tests


def _lines(path):
    return path.read_text().splitlines()


# ---------------------------------------------------------------------------
# deterministic
# ---------------------------------------------------------------------------

def test_deterministic_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "det"
    assert main(["deterministic", "--horizon", "2000", "--dt", "0.5",
                 "--out", str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    assert not (out / "certificate.json").exists()
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["command"] == "deterministic"
    assert echo["horizon"] == 2000.0 and echo["dt"] == 0.5
    assert "wrote" in capsys.readouterr().out


def test_detect_period_certificate(tmp_path):
    out = tmp_path / "cert"
    assert main(["deterministic", "--horizon", "5000", "--dt", "0.5",
                 "--detect-period", "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert set(cert) == {"T", "l", "anchor", "error"}
    assert cert["l"] == 2
    assert abs(cert["T"] - CYCLE_PERIOD) < 1e-4
    assert set(cert["anchor"]) == {"T1", "T2", "P"}

    # too short a horizon: the certificate file still appears, holding null
    short = tmp_path / "short"
    assert main(["deterministic", "--horizon", "400", "--dt", "0.5",
                 "--detect-period", "--out", str(short)]) == 0
    assert json.loads((short / "certificate.json").read_text()) is None


def test_echo_reproduces_run_bitwise(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["deterministic", "--horizon", "1500", "--dt", "0.5",
                 "--out", str(a)]) == 0
    assert main(["deterministic", "--config", str(a / "config_echo.json"),
                 "--out", str(b)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_box_flags_reach_the_executor(tmp_path):
    out = tmp_path / "narrow"
    assert main(["deterministic", "--horizon", "1000", "--dt", "0.5",
                 "--t-upper", "4", "--out", str(out)]) == 0
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["box"] == {"t_lower": 0.0, "t_upper": 4.0}
    # a lower opening threshold is reached sooner than the canonical 145.6 s
    for line in _lines(out / "trajectory.csv")[1:]:
        fields = line.split(",")
        if fields[5] == "1":  # first row with valve 1 open
            assert 0.0 < float(fields[0]) < 145.0
            break
    else:
        pytest.fail("no valve opening found in trajectory.csv")


# ---------------------------------------------------------------------------
# stochastic
# ---------------------------------------------------------------------------

def test_stochastic_artifacts_and_manifest(tmp_path):
    out = tmp_path / "sto"
    assert main(["stochastic", "--horizon", "300", "--dt", "0.1", "--eps", "0.1",
                 "--n-traj", "3", "--seed", "9", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "stochastic"
    assert manifest["master_seed"] == 9 and manifest["n_traj"] == 3
    assert manifest["eps"] == 0.1 and manifest["scheme"] == "independent"
    assert [r["index"] for r in manifest["trajectories"]] == [0, 1, 2]
    for row in manifest["trajectories"]:
        assert row["stream"] == [9, row["index"]]
        assert (out / row["file"]).exists()

    # the named stream regenerates trajectory 1 byte for byte
    traj = run_stochastic([2.5, 2.5, 5.0], Mode(0, 0), horizon=300.0, eps=0.1,
                          source=RandomSource(9, 1), dt=0.1)
    assert manifest["trajectories"][1]["n_events"] == len(traj.events)
    regen = tmp_path / "regen.csv"
    traj.to_csv(regen)
    assert regen.read_bytes() == (out / "traj_001.csv").read_bytes()


def test_thread_count_never_changes_output(tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"threads_{threads}"
        monkeypatch.setenv("HYSIM_THREADS", threads)
        assert main(["stochastic", "--horizon", "200", "--dt", "0.1",
                     "--eps", "0.1", "--n-traj", "4", "--seed", "2",
                     "--out", str(out)]) == 0
        outs.append(out)
    for name in ("traj_000.csv", "traj_001.csv", "traj_002.csv",
                 "traj_003.csv", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


# ---------------------------------------------------------------------------
# intensity
# ---------------------------------------------------------------------------

def test_intensity_artifacts(tmp_path):
    out = tmp_path / "imap"
    assert main(["intensity", "--horizon", "300", "--dt", "0.1", "--eps", "0.1",
                 "--n-traj", "2", "--seed", "4", "--plane", "t1p",
                 "--out", str(out)]) == 0
    csv_lines = _lines(out / "intensity_t1p.csv")
    assert csv_lines[0].startswith("y\\x,")
    assert len(csv_lines) == 1 + 330  # one row per pressure bin
    pgm = _lines(out / "intensity_t1p.pgm")
    assert pgm[0] == "P2" and pgm[1].startswith("# max_count=")
    assert pgm[2] == "120 330" and pgm[3] == "255"
    assert len(pgm) == 4 + 330
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["command"] == "intensity" and echo["plane"] == "t1p"


def test_intensity_eps_zero_uses_noiseless_run(tmp_path):
    out = tmp_path / "det_map"
    assert main(["intensity", "--horizon", "300", "--dt", "0.5", "--eps", "0",
                 "--out", str(out)]) == 0
    assert (out / "intensity_t1t2.csv").exists()
    assert (out / "intensity_t1t2.pgm").exists()
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["eps"] == 0.0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_via_config_file(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "eps_list": [0.05, 0.1], "horizon": 400.0, "n_traj": 2,
        "dt": 0.1, "out": str(tmp_path / "sw"),
    }))
    assert main(["sweep", "--config", str(cfg)]) == 0
    lines = _lines(tmp_path / "sw" / "sweep.csv")
    assert lines[0] == "eps,mean_prevalence,stderr,n_traj,horizon,seed"
    assert len(lines) == 4  # noiseless row plus the two amplitudes
    assert [float(l.split(",")[0]) for l in lines[1:]] == [0.0, 0.05, 0.1]
    echo = json.loads((tmp_path / "sw" / "config_echo.json").read_text())
    assert echo["command"] == "sweep" and echo["eps_list"] == [0.05, 0.1]


# ---------------------------------------------------------------------------
# derive-params
# ---------------------------------------------------------------------------

def test_derive_params_table(tmp_path, capsys):
    assert main(["derive-params"]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["coefficient", "derived", "canonical", "delta"]
    rows = {line.split()[0]: line.split() for line in table[1:]}
    # the pressure relaxation rate reduces to the canonical value exactly
    assert float(rows["alpha"][3]) == 0.0
    # the coupling and valve-gain coefficients do not (documented discrepancy)
    assert float(rows["c"][3]) != 0.0
    assert float(rows["valve_gain"][3]) != 0.0

    out = tmp_path / "derived"
    assert main(["derive-params", "--out", str(out)]) == 0
    doc = json.loads((out / "derived_coefficients.json").read_text())
    assert set(doc) == {"derived", "canonical", "delta"}
    assert doc["delta"]["alpha"] == 0.0
    assert doc["delta"]["c"] > 0.0
    assert doc["delta"]["valve_gain"] == 1.0 / 23.0 - 1.0
    assert (out / "config_echo.json").exists()


# ---------------------------------------------------------------------------
# failure modes and plumbing
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["deterministic", "--config", "/nonexistent/nope.json"],
    ["deterministic", "--t-upper", "5", "--t-lower", "5"],
    ["deterministic", "--horizon", "0"],
    ["stochastic", "--n-traj", "0", "--horizon", "100"],
    ["stochastic", "--eps", "-0.1", "--horizon", "100"],
])
def test_bad_invocations_exit_1(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path / "x")]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_config_key_exits_1(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"horizont": 100}')
    assert main(["deterministic", "--config", str(cfg)]) == 1
    assert "horizont" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2


def test_default_output_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["deterministic", "--horizon", "300", "--dt", "0.5"]) == 0
    assert (tmp_path / "hysim_output" / "trajectory.csv").exists()


def test_console_script(tmp_path):
    out = tmp_path / "cli"
    proc = subprocess.run(
        ["hysim", "deterministic", "--horizon", "300", "--dt", "0.5",
         "--out", str(out)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert (out / "trajectory.csv").exists()
    assert "wrote" in proc.stdout
