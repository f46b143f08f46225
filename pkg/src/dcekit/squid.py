"""SQUID-terminated transmission line: flux-tunable boundary condition.

Fluxes are in units of the flux quantum unless a name says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import constants as k
from .errors import DomainError, FitError, SingularInductanceError

COS_FLOOR = 1e-6
DERIV_STEP = 1e-4
N_TIME = 4096


@dataclass(frozen=True)
class SquidParams:
    i_c: float = k.I_C
    phi0: float = k.PHI0
    z0: float = k.Z0
    v_line: float = k.V_LINE
    r: float = k.R_SQUID
    v_gap: float = k.V_GAP
    # dimensionless factor multiplying the perturbative photon density;
    # fixed by calibrate_density_scale, 1 means "uncalibrated"
    density_scale: float = 1.0

    def __post_init__(self):
        if self.i_c <= 0 or self.z0 <= 0 or self.r <= 0 or self.phi0 <= 0:
            raise DomainError("I_c, Z0, R and Phi0 must be positive")
        if not 0 < self.v_line <= k.C_LIGHT:
            raise DomainError(f"v_line must lie in (0, c], got {self.v_line}")
        if self.density_scale <= 0:
            raise DomainError("density_scale must be positive")


@dataclass(frozen=True)
class PumpConfig:
    phi_dc: float = k.PHI_DC
    phi_ac: float = 0.0
    f_p: float = k.F_PUMP
    f_minus: float = k.F_MINUS
    f_plus: float = k.F_PLUS

    def __post_init__(self):
        if abs(self.f_plus + self.f_minus - self.f_p) > 1.0:
            raise DomainError(
                f"f_plus + f_minus must equal f_p within 1 Hz "
                f"({self.f_plus} + {self.f_minus} != {self.f_p})"
            )
        if not 0 < self.f_minus <= self.f_plus < self.f_p:
            raise DomainError("need 0 < f_minus <= f_plus < f_p")
        if abs(self.phi_dc) >= 0.5:
            raise DomainError(f"|phi_dc| must be < 0.5, got {self.phi_dc}")
        if self.phi_ac < 0:
            raise DomainError("phi_ac must be non-negative")

    def with_amplitude(self, phi_ac: float) -> "PumpConfig":
        return replace(self, phi_ac=phi_ac)


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Fourier coefficients of 1/L_J under sinusoidal flux modulation.

    ``amplitudes[k-1]`` is the complex coefficient at harmonic ``k`` of the
    pump; ``dc_term`` is the mean inverse inductance.
    """

    dc_term: complex
    amplitudes: np.ndarray

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def josephson_inductance(phi, p: SquidParams):
    """Josephson inductance of a symmetric SQUID, ``Phi0 / (2 pi I_c |cos(pi phi)|)``."""
    cos = np.abs(np.cos(np.pi * np.asarray(phi, dtype=float)))
    if np.any(cos <= COS_FLOOR):
        raise SingularInductanceError(f"inductance diverges at flux {phi}")
    out = p.phi0 / (2 * np.pi * p.i_c * cos)
    return float(out) if np.ndim(out) == 0 else out


def inverse_inductance(phi, p: SquidParams):
    # finite everywhere, unlike josephson_inductance
    return 2 * np.pi * p.i_c * np.abs(np.cos(np.pi * np.asarray(phi, dtype=float))) / p.phi0


def reflection_phase(f: float, phi: float, p: SquidParams) -> float:
    """Phase of a probe reflected off the SQUID (lossless, |Gamma| = 1)."""
    return float(-2.0 * np.arctan(2 * np.pi * f * josephson_inductance(phi, p) / p.z0))


def reflection_coefficient(f: float, phi: float, p: SquidParams) -> complex:
    z = 1j * 2 * np.pi * f * josephson_inductance(phi, p)
    return complex((z - p.z0) / (z + p.z0))


def _check_range(cfg: PumpConfig):
    lo, hi = cfg.phi_dc - cfg.phi_ac, cfg.phi_dc + cfg.phi_ac
    # half-integer fluxes inside [lo, hi] make the inductance singular
    first = np.ceil(lo - 0.5) + 0.5
    if first <= hi or np.abs(np.cos(np.pi * lo)) <= COS_FLOOR or np.abs(np.cos(np.pi * hi)) <= COS_FLOOR:
        raise SingularInductanceError(
            f"modulation range [{lo:.4f}, {hi:.4f}] Phi0 crosses a half flux quantum"
        )


def effective_length(phi, p: SquidParams):
    """Equivalent line length of the SQUID inductance, L_J v / Z0 (m)."""
    return josephson_inductance(phi, p) * p.v_line / p.z0


def effective_length_slope(phi: float, p: SquidParams, step: float = DERIV_STEP) -> float:
    """|dL_eff/dphi| in metres per flux quantum, by central difference."""
    return abs(effective_length(phi + step, p) - effective_length(phi - step, p)) / (2 * step)


def length_modulation(cfg: PumpConfig, p: SquidParams, step: float = DERIV_STEP) -> float:
    _check_range(cfg)
    if cfg.phi_ac == 0:
        return 0.0
    return cfg.phi_ac * effective_length_slope(cfg.phi_dc, p, step)


def effective_mirror_speed(cfg: PumpConfig, p: SquidParams, step: float = DERIV_STEP) -> float:
    """Peak speed of the equivalent moving mirror as a fraction of c."""
    return 2 * np.pi * cfg.f_p * length_modulation(cfg, p, step) / k.C_LIGHT


def harmonic_decomposition(
    cfg: PumpConfig, p: SquidParams, n_harmonics: int = 8, n_time: int = N_TIME
) -> HarmonicSpectrum:
    if n_harmonics < 2:
        raise DomainError("need at least 2 harmonics")
    if n_time <= 2 * n_harmonics:
        raise DomainError("too few time samples for the requested harmonics")
    _check_range(cfg)
    t = np.arange(n_time) / n_time
    g = inverse_inductance(cfg.phi_dc + cfg.phi_ac * np.sin(2 * np.pi * t), p)
    # trapezoid rule over one full period of a periodic integrand
    coeffs = np.fft.rfft(g)[: n_harmonics + 1] / n_time
    return HarmonicSpectrum(dc_term=complex(coeffs[0]), amplitudes=coeffs[1:].copy())


def dce_purity(cfg: PumpConfig, p: SquidParams, n_harmonics: int = 8) -> float:
    """Share of pair production driven by the fundamental pump tone."""
    if n_harmonics < 4:
        raise DomainError("purity needs at least 4 harmonics")
    if cfg.phi_ac == 0:
        return 1.0
    powers = harmonic_decomposition(cfg, p, n_harmonics).powers
    total = powers.sum()
    if total == 0:
        return 1.0
    return float(powers[0] / total)


def dce_peak_density(cfg: PumpConfig, p: SquidParams, step: float = DERIV_STEP) -> float:
    """Peak photon spectral density n_p, in photons per second per hertz."""
    dl = length_modulation(cfg, p, step)
    return p.density_scale * (dl * 2 * np.pi * cfg.f_p / (2 * p.v_line)) ** 2


def calibrate_density_scale(
    cfg: PumpConfig, p: SquidParams, target: float
) -> SquidParams:
    """Return ``p`` with ``density_scale`` set so ``dce_peak_density(cfg) == target``."""
    if target <= 0 or cfg.phi_ac <= 0:
        raise DomainError("calibration needs a positive target and pump amplitude")
    bare = dce_peak_density(cfg, replace(p, density_scale=1.0))
    return replace(p, density_scale=target / bare)


# Fig. 3a: n = 0.01 at a pump amplitude of 13 mPhi0
CALIBRATION_AMPLITUDE = 13e-3
CALIBRATION_DENSITY = 0.01


def paper_squid_params() -> SquidParams:
    """Device parameters with the photon-density scale tied to the measured operating point."""
    return calibrate_density_scale(
        PumpConfig(phi_ac=CALIBRATION_AMPLITUDE), SquidParams(), CALIBRATION_DENSITY
    )


def beta_c(i_c: float, i_r: float) -> float:
    """Stewart-McCumber parameter estimated from the retrapping current."""
    if i_r <= 0:
        raise DomainError(f"retrapping current must be positive, got {i_r}")
    return 4.0 * i_c / (np.pi * i_r)


def iv_fit(points, gap_threshold: float = k.V_GAP, zero_tol: float = 1e-6):
    """Fit the resistive branch of a current-voltage characteristic.

    Parameters
    ----------
    points : iterable of (I, V)
        Bias current in A and measured voltage in V.
    gap_threshold : float
        Points with ``|V|`` above this belong to the resistive branch.
    zero_tol : float
        Voltages below this count as the supercurrent branch.

    Returns
    -------
    (R, V_gap, I_c)
        ``R`` is the least-squares slope of the resistive branch, ``V_gap`` the
        largest voltage on the sub-threshold (gap) plateau and ``I_c`` the
        largest current still carried at zero voltage.
    """
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    cur, volt = pts[:, 0], pts[:, 1]
    branch = np.abs(volt) > gap_threshold
    if branch.sum() < 2 or np.ptp(cur[branch]) == 0:
        raise FitError("need at least two distinct points on the resistive branch")
    slope, _ = np.polyfit(cur[branch], volt[branch], 1)
    below = np.abs(volt[~branch])
    v_gap = float(below.max()) if below.size else float("nan")
    zero = np.abs(volt) <= zero_tol
    i_c = float(np.abs(cur[zero]).max()) if zero.any() else 0.0
    return float(slope), v_gap, i_c
