import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dcekit import io
from dcekit.cli import main

SMALL = {
    "seed": 4,
    "pump": {"phi_ac_phi0": 0.013},
    "chain": {"cycles": 12, "samples_per_cycle": 20000},
}


def write_config(tmp_path, doc=SMALL, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_sweep(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    return [{k: float(v) for k, v in zip(header, r)} for r in body]


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pipe")
    cfg = write_config(tmp)
    out = tmp / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["calibrate", str(out / "shotnoise_minus.csv"), str(out / "shotnoise_plus.csv"), "--out", str(out)]) == 0
    assert main([
        "analyze", str(out / "records.bin"), "--calib-minus", str(out / "calib_minus.json"),
        "--calib-plus", str(out / "calib_plus.json"), "--out", str(out),
    ]) == 0
    return tmp, out


def test_simulate_outputs(pipeline):
    _, out = pipeline
    for name in ("records.bin", "records.json", "truth.json", "shotnoise_minus.csv", "shotnoise_plus.csv"):
        assert (out / name).exists()
    truth = io.read_json(out / "truth.json")
    assert truth["n_p"] == pytest.approx(0.01)
    assert truth["schema_version"] == io.SCHEMA_VERSION


def test_calibrate_recovers_chain(pipeline):
    _, out = pipeline
    truth = io.read_json(out / "truth.json")
    fit = io.read_calibration(out / "calib_minus.json")
    assert fit.G == pytest.approx(truth["gains_mean"][0], rel=0.01)
    assert fit.T_n == pytest.approx(truth["t_n"][0], rel=0.02)


def test_analyze_closes_on_truth(pipeline):
    _, out = pipeline
    res = io.read_json(out / "analysis.json")
    truth = io.read_json(out / "truth.json")
    rep, exp = res["report"], truth["expected_report"]
    assert abs(rep["duan_minus"] - exp["duan_minus"]) < 4 * rep["errors"]["duan_minus"]
    for pair in ("ImIp", "QmQp", "ImQp", "QmIp"):
        assert (out / f"hist_{pair}.csv").exists()


def test_simulate_deterministic(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "chain": {"cycles": 3, "samples_per_cycle": 100}})
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d), "--format", "csv"]) == 0
    for name in ("records.csv", "truth.json", "shotnoise_minus.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "chain": {"cycles": 2, "samples_per_cycle": 50}})
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "99"])
    assert (tmp_path / "a" / "records.bin").read_bytes() != (tmp_path / "b" / "records.bin").read_bytes()
    assert io.read_json(tmp_path / "b" / "truth.json")["seed"] == 99


def test_vacuum_config_gives_null_report(tmp_path):
    doc = {"seed": 1, "pump": {"phi_ac_phi0": 0.0}, "chain": {"cycles": 20, "samples_per_cycle": 20000}}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "vac"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["calibrate", str(out / "shotnoise_minus.csv"), str(out / "shotnoise_plus.csv"), "--out", str(out)]) == 0
    assert main([
        "analyze", str(out / "records.bin"), "--calib-minus", str(out / "calib_minus.json"),
        "--calib-plus", str(out / "calib_plus.json"), "--out", str(out),
    ]) == 0
    rep = io.read_json(out / "analysis.json")["report"]
    assert rep["log_negativity"] == 0.0
    assert abs(rep["duan_minus"] - 1) < 4 * rep["errors"]["duan_minus"]


def test_missing_calibration_exit_2(pipeline):
    _, out = pipeline
    code = main([
        "analyze", str(out / "records.bin"), "--calib-minus", str(out / "nope.json"),
        "--calib-plus", str(out / "calib_plus.json"), "--out", str(out / "x"),
    ])
    assert code == 2


def test_bad_config_exit_2(tmp_path):
    cfg = write_config(tmp_path, {"chain": {"unknown_key": 1}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_missing_records_exit_3(pipeline, tmp_path):
    _, out = pipeline
    code = main([
        "analyze", str(tmp_path / "absent.bin"), "--calib-minus", str(out / "calib_minus.json"),
        "--calib-plus", str(out / "calib_plus.json"), "--out", str(tmp_path),
    ])
    assert code == 3


def test_degenerate_shot_noise_exit_4(tmp_path):
    from dcekit.calibration import ShotNoiseEnv

    io.write_shot_noise_csv(tmp_path / "shotnoise_x.csv", [(1e-6, 1.0)] * 5, ShotNoiseEnv(), 1e6)
    assert main(["calibrate", str(tmp_path / "shotnoise_x.csv"), "--out", str(tmp_path)]) == 4


def test_sweep(tmp_path):
    cfg = write_config(tmp_path, {"seed": 2, "chain": {"cycles": 10, "samples_per_cycle": 20000}})
    out = tmp_path / "sw"
    code = main(["sweep", "--config", str(cfg), "--out", str(out), "--phi-ac", "0.005", "0.01", "0.015",
                 "--bootstrap", "30", "--permutations", "30"])
    assert code == 0
    rows = read_sweep(out / "sweep.csv")
    assert [r["phi_ac_phi0"] for r in rows] == [0.005, 0.01, 0.015]
    n = [r["n"] for r in rows]
    assert np.all(np.diff(n) > 0)
    mu = [r["purity"] for r in rows]
    assert np.all(np.diff(mu) < 0)


def test_sweep_failed_point_is_nan_row(tmp_path):
    cfg = write_config(tmp_path, {"chain": {"cycles": 4, "samples_per_cycle": 5000}})
    out = tmp_path / "sw"
    code = main(["sweep", "--config", str(cfg), "--out", str(out), "--phi-ac", "0.2",
                 "--bootstrap", "10", "--permutations", "10"])
    assert code == 4
    row = read_sweep(out / "sweep.csv")[0]
    assert row["phi_ac_phi0"] == 0.2 and np.isnan(row["log_negativity"])


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write_config(tmp_path, {"chain": {"cycles": 4, "samples_per_cycle": 20000}})
    args = ["--phi-ac", "0.01", "0.02", "--bootstrap", "10", "--permutations", "10"]
    main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a"), "--jobs", "1", *args])
    main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2", *args])
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_rate(tmp_path, capsys):
    assert main(["rate", "--n-p", "0.01", "--out", str(tmp_path)]) == 0
    doc = io.read_json(tmp_path / "rate.json")
    assert doc["result"]["rate"] == pytest.approx(261e6, rel=0.1)
    assert len(doc["comparison"]) == 6
    assert "This work" in capsys.readouterr().out


def test_rate_band_and_logneg(tmp_path):
    assert main(["rate", "--peak-logneg", "0.03", "--band", "4e9", "8e9", "--out", str(tmp_path)]) == 0
    assert io.read_json(tmp_path / "rate.json")["result"]["rate"] == pytest.approx(5.2e6, rel=0.1)


def test_rate_needs_one_source():
    assert main(["rate"]) == 2
    assert main(["rate", "--n-p", "0.01", "--peak-logneg", "0.1"]) == 2
    assert main(["rate", "--n-p", "0.01", "--panels", "7"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dcekit", "rate", "--n-p", "0.01"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Mebit/s" in proc.stdout
