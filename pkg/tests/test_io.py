import json

import numpy as np
import pytest

from dcekit import chain_sim as cs
from dcekit import io
from dcekit.analysis import histogram2d
from dcekit.calibration import CalibrationFit, ShotNoiseEnv
from dcekit.config import load_config, parse_config
from dcekit.errors import ConfigError, SchemaVersionError
from dcekit.squid import PumpConfig, paper_squid_params


@pytest.fixture(scope="module")
def records():
    chain = cs.ChainConfig(cycles=3, samples_per_cycle=50, seed=2)
    return cs.pump_cycle_dataset(PumpConfig(phi_ac=13e-3), paper_squid_params(), chain)


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_records_roundtrip(tmp_path, records, fmt):
    path = io.write_records(tmp_path / f"r.{fmt}", records, fmt)
    back = io.read_records(path)
    assert np.array_equal(back.quadratures, records.quadratures)
    assert np.array_equal(back.cycle, records.cycle)
    assert np.array_equal(back.pump_on, records.pump_on)
    assert back.meta["pump.f_minus"] == records.meta["pump.f_minus"]


def test_binary_sidecar(tmp_path, records):
    io.write_records_bin(tmp_path / "r.bin", records)
    side = json.loads((tmp_path / "r.json").read_text())
    assert side["record_count"] == len(records)
    assert side["schema_version"] == io.SCHEMA_VERSION
    assert (tmp_path / "r.bin").stat().st_size == len(records) * 6 * 8


def test_csv_record_count_checked(tmp_path, records):
    path = tmp_path / "r.csv"
    io.write_records_csv(path, records)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ConfigError):
        io.read_records_csv(path)


def test_unknown_major_version_rejected(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"schema_version": "2.0"}))
    with pytest.raises(SchemaVersionError):
        io.read_json(path)
    io.check_schema("1.7")


def test_missing_version_rejected(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{}")
    with pytest.raises(SchemaVersionError):
        io.read_json(path)


def test_atomic_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    with pytest.raises(RuntimeError):
        with io.atomic_open(target) as fh:
            fh.write("new")
            raise RuntimeError("boom")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_shot_noise_roundtrip(tmp_path):
    env = ShotNoiseEnv(f=4.8e9)
    data = cs.simulate_shot_noise_sweep(1e9, 3.0, env, np.linspace(-1e-5, 1e-5, 9))
    io.write_shot_noise_csv(tmp_path / "s.csv", data, env, 1e6)
    back, env2, bw = io.read_shot_noise_csv(tmp_path / "s.csv")
    assert back == data
    assert env2 == env and bw == 1e6


def test_calibration_roundtrip(tmp_path):
    fit = CalibrationFit(1.3e9, 3.7, 1e6, 0.04, 4.1e9, 1e6, 0.005, ("T_n poorly constrained",))
    io.write_calibration(tmp_path / "c.json", fit)
    assert io.read_calibration(tmp_path / "c.json") == fit


def test_histogram_csv(tmp_path, records):
    h = histogram2d(records, "I-I+", bins=11)
    io.write_histogram_csv(tmp_path / "h.csv", h)
    meta, skip = io.read_csv_header(tmp_path / "h.csv")
    grid = np.loadtxt(tmp_path / "h.csv", delimiter=",", skiprows=skip)
    assert meta["pair"] == "I-I+" and meta["x_bins"] == 11
    assert np.array_equal(grid, h.counts)


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.squid.density_scale == pytest.approx(paper_squid_params().density_scale)
        assert cfg.chain.cycles == 100

    def test_units_and_overrides(self):
        cfg = parse_config({
            "seed": 5,
            "pump": {"phi_ac_phi0": 0.015},
            "chain": {"loss_minus_db": -3.0, "eta_plus": 0.5, "cycles": 7, "g_start_minus": 2e9},
            "squid": {"density_scale": 2.0},
        })
        assert cfg.pump.phi_ac == 0.015
        assert 10 * np.log10(cfg.chain.eta_minus) == pytest.approx(-3.0)
        assert cfg.chain.eta_plus == 0.5
        assert cfg.chain.g_start[0] == 2e9 and cfg.chain.seed == 5
        assert cfg.squid.density_scale == 2.0

    @pytest.mark.parametrize("doc", [
        {"squid": {"i_c": 1.0}},
        {"bogus": {}},
        {"chain": {"eta_minus": 0.5, "loss_minus_db": -2.0}},
        {"chain": {"eta_minus": 2.0}},
        {"pump": {"phi_dc_phi0": 0.7}},
        {"shot_noise": {"points": 3}},
        {"pump": []},
    ])
    def test_invalid(self, doc):
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_load_relative_out_dir(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"paths": {"out_dir": "results"}}))
        assert load_config(path).out_dir == tmp_path / "results"

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_with_seed(self):
        cfg = parse_config({"seed": 1}).with_seed(9)
        assert cfg.seed == 9 and cfg.chain.seed == 9
