"""Run configuration: one JSON document, SI units in unit-suffixed keys."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .calibration import ShotNoiseEnv, transmissivity
from .chain_sim import ChainConfig
from .errors import ConfigError, DcekitError
from .io import check_schema
from .squid import (
    CALIBRATION_AMPLITUDE,
    CALIBRATION_DENSITY,
    PumpConfig,
    SquidParams,
    calibrate_density_scale,
)


@dataclass(frozen=True)
class SweepCurrents:
    min_a: float = -30e-6
    max_a: float = 30e-6
    points: int = 61
    noise_frac: float = 0.005

    def currents(self) -> np.ndarray:
        return np.linspace(self.min_a, self.max_a, self.points)


@dataclass(frozen=True)
class RunConfig:
    squid: SquidParams
    pump: PumpConfig
    chain: ChainConfig
    env: ShotNoiseEnv
    shot_noise: SweepCurrents = field(default_factory=SweepCurrents)
    out_dir: Path = Path("out")
    seed: int = 0

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, chain=replace(self.chain, seed=seed))

    def env_for(self, f: float) -> ShotNoiseEnv:
        return replace(self.env, f=f)


_SQUID_KEYS = {
    "i_c_a": "i_c", "z0_ohm": "z0", "v_line_m_per_s": "v_line", "r_ohm": "r",
    "v_gap_v": "v_gap", "density_scale": "density_scale",
}
_PUMP_KEYS = {
    "phi_dc_phi0": "phi_dc", "phi_ac_phi0": "phi_ac", "f_p_hz": "f_p",
    "f_minus_hz": "f_minus", "f_plus_hz": "f_plus",
}
_ENV_KEYS = {"t_k": "t", "r_ohm": "r", "z0_ohm": "z0"}
_CHAIN_KEYS = {
    "t_n_minus_k": "t_n_minus", "t_n_plus_k": "t_n_plus", "bw_hz": "bw",
    "cycles": "cycles", "samples_per_cycle": "samples_per_cycle",
}
_CHAIN_EXTRA = {
    "eta_minus", "eta_plus", "loss_minus_db", "loss_plus_db",
    "g_start_minus", "g_start_plus", "g_end_minus", "g_end_plus",
}
_SHOT_KEYS = {"min_a": "min_a", "max_a": "max_a", "points": "points", "noise_frac": "noise_frac"}
_CALIB_KEYS = {"phi_ac_phi0", "n_p"}


def _section(doc: dict, name: str, allowed) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(sorted(unknown))}")
    return sec


def _mapped(sec: dict, mapping: dict) -> dict:
    return {mapping[k]: v for k, v in sec.items() if k in mapping}


def parse_config(doc: dict, base_dir: Path | None = None) -> RunConfig:
    if "schema_version" in doc:
        check_schema(doc["schema_version"])
    unknown = set(doc) - {"schema_version", "seed", "squid", "pump", "chain", "env", "shot_noise", "paths"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    try:
        seed = int(doc.get("seed", 0))
        squid_sec = _section(doc, "squid", set(_SQUID_KEYS) | {"calibrate"})
        squid = SquidParams(**_mapped(squid_sec, _SQUID_KEYS))
        if "density_scale" not in squid_sec:
            cal = squid_sec.get("calibrate", {})
            if set(cal) - _CALIB_KEYS:
                raise ConfigError(f"unknown key(s) in squid.calibrate: {set(cal) - _CALIB_KEYS}")
            pump_defaults = PumpConfig(**_mapped(_section(doc, "pump", _PUMP_KEYS), _PUMP_KEYS))
            squid = calibrate_density_scale(
                replace(pump_defaults, phi_ac=float(cal.get("phi_ac_phi0", CALIBRATION_AMPLITUDE))),
                squid,
                float(cal.get("n_p", CALIBRATION_DENSITY)),
            )
        pump = PumpConfig(**_mapped(_section(doc, "pump", _PUMP_KEYS), _PUMP_KEYS))

        chain_sec = _section(doc, "chain", set(_CHAIN_KEYS) | _CHAIN_EXTRA)
        kwargs = _mapped(chain_sec, _CHAIN_KEYS)
        for band in ("minus", "plus"):
            if f"eta_{band}" in chain_sec and f"loss_{band}_db" in chain_sec:
                raise ConfigError(f"give either eta_{band} or loss_{band}_db, not both")
            if f"eta_{band}" in chain_sec:
                kwargs[f"eta_{band}"] = float(chain_sec[f"eta_{band}"])
            elif f"loss_{band}_db" in chain_sec:
                kwargs[f"eta_{band}"] = transmissivity(float(chain_sec[f"loss_{band}_db"]))
        defaults = ChainConfig()
        kwargs["g_start"] = (
            chain_sec.get("g_start_minus", defaults.g_start[0]),
            chain_sec.get("g_start_plus", defaults.g_start[1]),
        )
        kwargs["g_end"] = (
            chain_sec.get("g_end_minus", defaults.g_end[0]),
            chain_sec.get("g_end_plus", defaults.g_end[1]),
        )
        chain = ChainConfig(seed=seed, **kwargs)

        env = ShotNoiseEnv(**_mapped(_section(doc, "env", _ENV_KEYS), _ENV_KEYS), f=pump.f_minus)
        shot = SweepCurrents(**_mapped(_section(doc, "shot_noise", _SHOT_KEYS), _SHOT_KEYS))
        if shot.points < 8:
            raise ConfigError("shot_noise.points must be >= 8")
        paths = _section(doc, "paths", {"out_dir"})
        out_dir = Path(paths.get("out_dir", "out"))
        if base_dir is not None and not out_dir.is_absolute():
            out_dir = base_dir / out_dir
    except ConfigError:
        raise
    except (DcekitError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(squid=squid, pump=pump, chain=chain, env=env, shot_noise=shot, out_dir=out_dir, seed=seed)


def load_config(path) -> RunConfig:
    """Read a config file; ``schema_version`` is optional but checked when given."""
    path = Path(path)
    return parse_config(_read_plain(path), base_dir=path.parent)


def _read_plain(path: Path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return doc
