"""Synthetic heterodyne data: device state, amplification chain, sampling.

Records are held column-wise in numpy arrays rather than as a list of
objects; a run of 100 cycles x 1e5 samples is 2e7 records.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from . import constants as k
from .calibration import ShotNoiseEnv, amplifier_occupation, shot_noise_psd
from .errors import DomainError, SamplingError
from .gaussian import CovMat4, apply_loss, tmsv_covariance, vacuum
from .rates import SpectralModel, n_of_f
from .squid import PumpConfig, SquidParams, dce_peak_density, dce_purity

PSD_TOL = 1e-10
JITTER = 1e-12
QUAD_COLUMNS = ("i_minus", "q_minus", "i_plus", "q_plus")


@dataclass(frozen=True)
class ChainConfig:
    eta_minus: float = 10 ** (k.LOSS_DB_MINUS / 10)
    eta_plus: float = 10 ** (k.LOSS_DB_PLUS / 10)
    t_n_minus: float = k.T_SYS_MINUS
    t_n_plus: float = k.T_SYS_PLUS
    g_start: tuple = (k.G_START_MINUS, k.G_START_PLUS)
    g_end: tuple = (k.G_END_MINUS, k.G_END_PLUS)
    bw: float = 1e6
    seed: int = 0
    cycles: int = 100
    samples_per_cycle: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "g_start", tuple(float(g) for g in self.g_start))
        object.__setattr__(self, "g_end", tuple(float(g) for g in self.g_end))
        for eta in (self.eta_minus, self.eta_plus):
            if not 0 <= eta <= 1:
                raise DomainError(f"transmissivity {eta} outside [0, 1]")
        if self.t_n_minus < 0 or self.t_n_plus < 0:
            raise DomainError("noise temperatures must be >= 0")
        if len(self.g_start) != 2 or len(self.g_end) != 2:
            raise DomainError("gains are given per band as (G_minus, G_plus)")
        if min(self.g_start + self.g_end) <= 0:
            raise DomainError("gains must be positive")
        if self.bw <= 0:
            raise DomainError("bandwidth must be positive")
        if self.cycles < 1 or self.samples_per_cycle < 1:
            raise DomainError("cycles and samples_per_cycle must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def gains_at(self, cycle: int) -> tuple[float, float]:
        """Per-band gain during ``cycle``, drifting linearly start to end."""
        frac = cycle / (self.cycles - 1) if self.cycles > 1 else 0.0
        return tuple(s + (e - s) * frac for s, e in zip(self.g_start, self.g_end))

    def mean_gains(self) -> tuple[float, float]:
        g = np.array([self.gains_at(c) for c in range(self.cycles)])
        return tuple(float(x) for x in g.mean(axis=0))


@dataclass(frozen=True)
class QuadratureRecord:
    cycle: int
    pump_on: bool
    i_minus: float
    q_minus: float
    i_plus: float
    q_plus: float


@dataclass(frozen=True, eq=False)
class RecordSet:
    """Column store of quadrature records, grouped by (cycle, pump state)."""

    cycle: np.ndarray
    pump_on: np.ndarray
    quadratures: np.ndarray  # (N, 4) in order I-, Q-, I+, Q+
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cyc = np.asarray(self.cycle, dtype=np.int64)
        on = np.asarray(self.pump_on, dtype=bool)
        q = np.asarray(self.quadratures, dtype=float).reshape(-1, 4)
        if not (cyc.shape[0] == on.shape[0] == q.shape[0]):
            raise DomainError("record columns have different lengths")
        if not np.all(np.isfinite(q)):
            raise DomainError("quadrature values must be finite")
        for a in (cyc, on, q):
            a.setflags(write=False)
        object.__setattr__(self, "cycle", cyc)
        object.__setattr__(self, "pump_on", on)
        object.__setattr__(self, "quadratures", q)

    def __len__(self):
        return self.quadratures.shape[0]

    def __iter__(self) -> Iterator[QuadratureRecord]:
        for c, on, q in zip(self.cycle, self.pump_on, self.quadratures):
            yield QuadratureRecord(int(c), bool(on), *map(float, q))

    def blocks(self):
        """Yield ``(cycle, pump_on, quadratures)`` for each contiguous block."""
        n = len(self)
        if n == 0:
            return
        key = self.cycle * 2 + self.pump_on
        edges = np.flatnonzero(np.diff(key)) + 1
        starts = np.concatenate([[0], edges])
        stops = np.concatenate([edges, [n]])
        for a, b in zip(starts, stops):
            yield int(self.cycle[a]), bool(self.pump_on[a]), self.quadratures[a:b]


def device_covariance(cfg: PumpConfig, p: SquidParams) -> CovMat4:
    """Two-mode state leaving the SQUID, including harmonic pollution."""
    if cfg.phi_ac == 0:
        return vacuum()
    model = SpectralModel(n_p=dce_peak_density(cfg, p), f_p=cfg.f_p)
    n_minus, n_plus = n_of_f(cfg.f_minus, model), n_of_f(cfg.f_plus, model)
    r = np.arcsinh(np.sqrt(np.sqrt(n_minus * n_plus)))
    mu = dce_purity(cfg, p)
    m = np.array(tmsv_covariance(r).elements)
    m[:2, 2:] *= np.sqrt(mu)
    m[2:, :2] *= np.sqrt(mu)
    m[[0, 1], [0, 1]] += (1 - mu) * n_minus
    m[[2, 3], [2, 3]] += (1 - mu) * n_plus
    return CovMat4(m)


def _gain_matrix(gains) -> np.ndarray:
    s = np.sqrt(np.repeat(np.asarray(gains, dtype=float), 2))
    return np.outer(s, s)


def detected_covariance(
    v_dev: CovMat4, chain: ChainConfig, f_minus: float, f_plus: float, gains=None
) -> CovMat4:
    """Covariance seen at the digitizer: loss, amplifier noise, then gain."""
    if gains is None:
        gains = chain.g_start
    lossy = np.array(apply_loss(v_dev, chain.eta_minus, chain.eta_plus).elements)
    n_amp = (
        amplifier_occupation(chain.t_n_minus, f_minus),
        amplifier_occupation(chain.t_n_plus, f_plus),
    )
    lossy[[0, 1, 2, 3], [0, 1, 2, 3]] += np.repeat(n_amp, 2)
    return CovMat4(lossy * _gain_matrix(gains))


def input_referred_expectation(
    v_dev: CovMat4, chain: ChainConfig, gains_used=None
) -> CovMat4:
    """Expected analysis output for ``v_dev`` after differencing and gain removal.

    ``gains_used`` are the calibrated gains the analysis divides by; by
    default the cycle-averaged chain gains.
    """
    lossy = np.array(apply_loss(v_dev, chain.eta_minus, chain.eta_plus).elements)
    if gains_used is None:
        gains_used = chain.mean_gains()
    mean_gain = np.mean([_gain_matrix(chain.gains_at(c)) for c in range(chain.cycles)], axis=0)
    ratio = mean_gain / _gain_matrix(gains_used)
    return CovMat4(ratio * (lossy - np.eye(4) / 2) + np.eye(4) / 2)


def cholesky_factor(V) -> np.ndarray:
    """Lower-triangular factor of ``V``; tiny negative directions are clamped."""
    m = np.asarray(V.elements if isinstance(V, CovMat4) else V, dtype=float)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    w, vecs = np.linalg.eigh(m)
    scale = max(1.0, float(np.abs(w).max()))
    if w.min() < -PSD_TOL * scale:
        raise SamplingError(f"covariance is indefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None) + JITTER * scale
    return np.linalg.cholesky((vecs * w) @ vecs.T)


def sample_quadratures(V, count: int, rng: np.random.Generator, factor=None) -> np.ndarray:
    if count < 0:
        raise DomainError("count must be >= 0")
    if factor is None:
        factor = cholesky_factor(V)
    z = rng.standard_normal((count, 4))
    return z @ factor.T


def sample_records(V: CovMat4, count: int, seed: int) -> np.ndarray:
    """``count`` zero-mean draws with covariance ``V`` as a ``(count, 4)`` array."""
    return sample_quadratures(V, count, np.random.default_rng(seed))


def stream_rng(seed: int, cycle: int, pump_on: bool) -> np.random.Generator:
    """Independent generator for one (cycle, pump state) block."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(cycle), int(pump_on)]))


def cycle_covariances(cfg: PumpConfig, p: SquidParams, chain: ChainConfig):
    """Detected (on, off) covariances for every cycle, gain drift applied."""
    v_dev = device_covariance(cfg, p)
    vac = vacuum()
    for c in range(chain.cycles):
        g = chain.gains_at(c)
        yield (
            detected_covariance(v_dev, chain, cfg.f_minus, cfg.f_plus, g),
            detected_covariance(vac, chain, cfg.f_minus, cfg.f_plus, g),
        )


def iter_cycle_blocks(cfg: PumpConfig, p: SquidParams, chain: ChainConfig):
    """Yield ``(cycle, pump_on, samples)``: ON block then OFF block per cycle."""
    n = chain.samples_per_cycle
    for c, (v_on, v_off) in enumerate(cycle_covariances(cfg, p, chain)):
        for flag, v in ((True, v_on), (False, v_off)):
            yield c, flag, sample_quadratures(v, n, stream_rng(chain.seed, c, flag))


def run_metadata(cfg: PumpConfig, chain: ChainConfig) -> dict:
    meta = {f"pump.{key}": val for key, val in asdict(cfg).items()}
    for key, val in asdict(chain).items():
        if isinstance(val, tuple):
            meta[f"chain.{key}_minus"], meta[f"chain.{key}_plus"] = val
        else:
            meta[f"chain.{key}"] = val
    return meta


def pump_cycle_dataset(cfg: PumpConfig, p: SquidParams, chain: ChainConfig) -> RecordSet:
    blocks = list(iter_cycle_blocks(cfg, p, chain))
    n = chain.samples_per_cycle
    return RecordSet(
        cycle=np.repeat([b[0] for b in blocks], n),
        pump_on=np.repeat([b[1] for b in blocks], n),
        quadratures=np.concatenate([b[2] for b in blocks]) if blocks else np.empty((0, 4)),
        meta=run_metadata(cfg, chain),
    )


def simulate_shot_noise_sweep(
    G: float,
    T_n: float,
    env: ShotNoiseEnv,
    currents,
    noise_frac: float = 0.0,
    Bw: float = 1e6,
    seed: int = 0,
) -> list[tuple[float, float]]:
    if noise_frac < 0:
        raise DomainError("noise_frac must be >= 0")
    cur = np.asarray(currents, dtype=float)
    s = np.atleast_1d(shot_noise_psd(cur, G, T_n, Bw, env))
    if noise_frac > 0:
        s = s * (1 + noise_frac * np.random.default_rng(seed).standard_normal(s.shape))
    return list(zip(cur.tolist(), s.tolist()))
