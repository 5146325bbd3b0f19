import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from blockade_lab import cli
from blockade_lab.correlations import g2_series
from blockade_lab.params import SystemParams


def run_cli(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out), "--no-timestamp"])
    return code, out


def read_csv(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for row in body:
        for name, v in zip(header, row):
            cols[name].append(v)
    return cols


def floats(values):
    return np.array([float(v) for v in values])


def test_spectrum_uncoupled_lorentzian(tmp_path):
    code, out = run_cli(tmp_path, "spectrum", "--g0", "0", "--kappa", "0.1",
                        "--sweep", "delta0:-0.5:0.5:11")
    assert code == 0
    cols = read_csv(out)
    d = floats(cols["delta0/omega_m"])
    lor = 0.01 / (0.01 + d ** 2)
    np.testing.assert_allclose(floats(cols["S_series"]), lor, rtol=1e-12)
    np.testing.assert_allclose(floats(cols["S_integral"]), lor, rtol=1e-8)


def test_spectrum_sideband_peaks(tmp_path):
    code, out = run_cli(tmp_path, "spectrum", "--g0", "0.5", "--kappa", "0.1", "--Q", "150",
                        "--method", "series", "--sweep", "delta0:-1:3:801")
    assert code == 0
    cols = read_csv(out)
    d, s = floats(cols["delta0/omega_m"]), floats(cols["S_series"])
    for n in range(3):
        window = np.abs(d - (-0.25 + n)) < 0.3
        assert d[window][np.argmax(s[window])] == pytest.approx(-0.25 + n, abs=0.05)


def test_g2_uncoupled_is_constant_one(tmp_path):
    code, out = run_cli(tmp_path, "g2", "--g0", "0", "--kappa", "0.15", "--method", "series",
                        "--sweep", "delta0:-1:1:5")
    assert code == 0
    assert np.all(floats(read_csv(out)["g2_series"]) == 1.0)


def test_g2_single_point_matches_library(tmp_path):
    code, out = run_cli(tmp_path, "g2", "--g0", "0.5", "--kappa", "0.15", "--delta0", "-0.25",
                        "--method", "series")
    assert code == 0
    p = SystemParams.from_ratios(0.5, 0.15)
    expected = g2_series(-0.25, p).g2
    assert float(read_csv(out)["g2_series"][0]) == expected


def test_zpl_relative_sweep(tmp_path):
    _, out = run_cli(tmp_path, "g2", "--g0", "0.5", "--kappa", "0.15", "--method", "series",
                     "--zpl-relative", "--sweep", "delta0:0:0:2")
    assert floats(read_csv(out)["delta0/omega_m"]) == pytest.approx([-0.25, -0.25])


def test_g2_map_boundary(tmp_path):
    code, out = run_cli(tmp_path, "g2-map", "--sweep", "g0:0.5:0.5:2",
                        "--sweep", "kappa:0.1:2:2")
    assert code == 0
    cols = read_csv(out)
    by_kappa = dict(zip(floats(cols["kappa/omega_m"]), floats(cols["min_g2"])))
    assert by_kappa[0.1] < 1
    assert by_kappa[2.0] == pytest.approx(1.0, abs=0.01)


def test_output_is_deterministic_across_workers(tmp_path):
    args = ["g2", "--g0", "0.4", "--kappa", "0.2", "--method", "series",
            "--sweep", "delta0:-1:1:9"]
    _, a = run_cli(tmp_path, *args, name="a.csv")
    _, b = run_cli(tmp_path, *args, "--workers", "2", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_config_file_equivalent_to_flags(tmp_path):
    cfg = {"params": {"g0": 0.4, "kappa": "0.2", "T": "0 mK"}, "method": "series",
           "sweeps": [{"var": "delta0", "start": -1, "stop": 1, "points": 5}],
           "timestamp": False}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    _, a = run_cli(tmp_path, "g2", "--config", str(path), name="a.csv")
    _, b = run_cli(tmp_path, "g2", "--g0", "0.4", "--kappa", "0.2", "--method", "series",
                   "--sweep", "delta0:-1:1:5", name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    header = [l for l in a.read_text().splitlines() if l.startswith("# config:")][0]
    echoed = json.loads(header.split(":", 1)[1])
    assert echoed["params"]["g0"] == 0.4 and echoed["method"] == "series"


def test_flags_override_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"params": {"g0": 0.4, "kappa": 0.2}}))
    _, out = run_cli(tmp_path, "spectrum", "--config", str(path), "--kappa", "0.3")
    assert '"kappa":0.3' in out.read_text()


def test_unit_parsing():
    wm = 2 * math.pi * 1e6
    assert cli.parse_frequency("0.5", wm, "g0") == pytest.approx(0.5 * wm)
    assert cli.parse_frequency("100 kHz", wm, "g0") == pytest.approx(2 * math.pi * 1e5)
    assert cli.parse_frequency("3e6 rad/s", wm, "g0") == 3e6
    assert cli.parse_omega_m("1 MHz") == pytest.approx(wm)
    assert cli.parse_temperature("20 mK") == pytest.approx(0.02)
    assert cli.parse_q("inf") == math.inf
    with pytest.raises(cli.UsageError):
        cli.parse_frequency("1 furlong", wm, "kappa")


def test_sweep_axis():
    axis = cli.SweepAxis.parse("kappa:0.05:4:5:log")
    assert axis.values()[-1] == pytest.approx(4.0)
    with pytest.raises(cli.UsageError):
        cli.SweepAxis.parse("drive:0:1:3")
    with pytest.raises(cli.UsageError):
        cli.SweepAxis.parse("delta0:0:1:1")


def test_usage_errors_exit_two(tmp_path, capsys):
    assert cli.main(["g2", "--kappa", "-1"]) == 2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"colour": "blue"}))
    assert cli.main(["g2", "--config", str(path)]) == 2
    assert "colour" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["g2", "--method", "magic"])
    assert info.value.code == 2


def test_env_worker_default(tmp_path, monkeypatch):
    monkeypatch.setenv("BLOCKADE_LAB_WORKERS", "x")
    assert cli.main(["g2"]) == 2


def test_convergence_failure_exits_three(tmp_path):
    code, out = run_cli(tmp_path, "g2", "--g0", "0.5", "--kappa", "0.01", "--Q", "1e3",
                        "--method", "integral")
    assert code == 3
    cols = read_csv(out)
    assert math.isnan(float(cols["g2_integral"][0]))
    assert "ConvergenceError" in cols["error"][0]


def test_truncation_failure_exits_four(tmp_path):
    code, out = run_cli(tmp_path, "oracle-compare", "--g0", "1.2", "--kappa", "0.15",
                        "--n-phonon-max", "4", "--drives", "0.05,0.1")
    assert code == 4
    assert "TruncationError" in read_csv(out)["error"][0]


def test_oracle_compare_uncoupled_row(tmp_path):
    code, out = run_cli(tmp_path, "oracle-compare", "--g0", "0", "--kappa", "0.15",
                        "--sweep", "delta0:-0.2:0.2:3")
    assert code == 0
    cols = read_csv(out)
    assert floats(cols["dev_S"]).max() < 1e-8
    assert floats(cols["dev_g2"]).max() < 1e-8


def test_oracle_compare_blockade_point(tmp_path):
    code, out = run_cli(tmp_path, "oracle-compare", "--g0", "0.5", "--kappa", "0.15",
                        "--delta0", "-0.25")
    assert code == 0
    assert float(read_csv(out)["dev_g2"][0]) < 0.05


def test_oracle_compare_spectrum_across_sideband(tmp_path):
    code, out = run_cli(tmp_path, "oracle-compare", "--g0", "0.25", "--kappa", "0.1",
                        "--sweep", "delta0:-0.1625:0.9375:5")
    assert code == 0
    assert floats(read_csv(out)["dev_S"]).max() < 0.02


def test_console_entry_point_and_stdout_stream():
    proc = subprocess.run([sys.executable, "-m", "blockade_lab.cli", "spectrum", "--g0", "0",
                           "--no-timestamp", "--method", "series"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("# blockade-lab")
    assert "rows" in proc.stderr
