"""In-situ calibration of the amplifier chain.

The SQUID biased above the gap is a calibrated shot-noise source: fitting
its detected noise power against bias current yields the system gain and
noise temperature for each detection band.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from . import constants as k
from .errors import DomainError, FitError, OnsetNotFoundError

log = logging.getLogger(__name__)

TN_BOUNDS = (0.1, 30.0)
TN_XTOL = 1e-4
TN_POORLY_CONSTRAINED = 1.0  # K


@dataclass(frozen=True)
class ShotNoiseEnv:
    t: float = k.T_FRIDGE
    r: float = k.R_SQUID
    z0: float = k.Z0
    f: float = k.F_MINUS

    def __post_init__(self):
        if min(self.t, self.r, self.z0, self.f) <= 0:
            raise DomainError("T, R, Z0 and f must all be positive")


@dataclass(frozen=True)
class CalibrationFit:
    G: float
    T_n: float
    dG: float
    dT_n: float
    f: float
    Bw: float
    residual_rms: float
    warnings: tuple = field(default=())

    def __post_init__(self):
        if self.G <= 0 or self.T_n <= 0:
            raise DomainError("G and T_n must be positive")
        if self.dG < 0 or self.dT_n < 0:
            raise DomainError("uncertainties must be non-negative")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d


@dataclass(frozen=True)
class ErrorBudget:
    dG_fit: float
    dG_drift: float
    dG_total: float
    G_mid: float
    dP_off: float | None = None
    dn: float | None = None


def _x_coth_x(x: np.ndarray) -> np.ndarray:
    """x / tanh(x), continued to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 3.0, safe / np.tanh(safe))


def noise_voltages(current, env: ShotNoiseEnv):
    """Shot, Johnson and zero-point spectral densities (V_s^2, V_T^2, V_z^2)."""
    z0, r = env.z0, env.r
    vs2 = 2 * k.E_CHARGE * np.abs(np.asarray(current, dtype=float)) * r**2 * z0**2 / (z0 + r) ** 2
    vt2 = 4 * k.KB * env.t * z0**2 / (z0 + r)
    vz2 = z0 * 0.5 * k.H_PLANCK * env.f
    return vs2, vt2, vz2


def source_term(current, env: ShotNoiseEnv):
    """Bracketed source noise of the shot-noise model, without the T_n term (W/Hz)."""
    vs2, vt2, vz2 = noise_voltages(current, env)
    e1 = (vs2 + vz2) / vt2
    e2 = (vs2 - vz2) / vt2
    return vt2 / (2 * env.z0) * (_x_coth_x(e1) + _x_coth_x(e2))


def shot_noise_psd(current, G: float, T_n: float, Bw: float, env: ShotNoiseEnv):
    """Detected noise power of the biased SQUID plus amplifier noise."""
    out = G * Bw * (source_term(current, env) + k.KB * T_n)
    return float(out) if np.ndim(out) == 0 else out


def _best_gain(shape, s_obs, w):
    # weighted linear least squares for S = G * shape
    return np.sum(w * shape * s_obs) / np.sum(w * shape * shape)


def fit_calibration(data, env: ShotNoiseEnv, Bw: float, weighted: bool = True) -> CalibrationFit:
    """Fit gain and noise temperature to a shot-noise sweep.

    The model is linear in ``G`` for fixed ``T_n``, so ``G`` is profiled out
    in closed form and only ``T_n`` is searched (bounded Brent).  With
    ``weighted`` the residuals are relative, matching multiplicative noise.
    """
    arr = np.asarray(list(data), dtype=float).reshape(-1, 2)
    cur, s_obs = arr[:, 0], arr[:, 1]
    if len(cur) < 3 or np.ptp(np.abs(cur)) == 0:
        raise FitError("shot-noise data must span at least two distinct |I| values")
    if np.any(s_obs <= 0):
        raise FitError("detected powers must be positive")
    src = source_term(cur, env)
    w = 1.0 / s_obs**2 if weighted else np.ones_like(s_obs)
    t_n, g = _profile_fit(src, s_obs, w, Bw)
    if weighted:
        # reweight with the fitted model so noise in s_obs does not bias weights
        w = 1.0 / (g * Bw * (src + k.KB * t_n)) ** 2
        t_n, g = _profile_fit(src, s_obs, w, Bw)
    shape = Bw * (src + k.KB * t_n)
    resid = s_obs - g * shape

    # linearized covariance in (G, T_n)
    jac = np.column_stack([shape, np.full_like(shape, g * Bw * k.KB)])
    dof = max(len(cur) - 2, 1)
    s2 = np.sum(w * resid**2) / dof
    jtj = jac.T @ (jac * w[:, None])
    try:
        cov = s2 * np.linalg.inv(jtj)
        dg, dtn = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        dg = dtn = float("inf")

    warnings = []
    lo, hi = TN_BOUNDS
    if min(t_n - lo, hi - t_n) < 10 * TN_XTOL:
        warnings.append("T_n at search boundary")
    if dtn > TN_POORLY_CONSTRAINED:
        warnings.append("T_n poorly constrained")
    for msg in warnings:
        log.warning("calibration at %.3g Hz: %s", env.f, msg)
    rms = np.sqrt(np.mean((resid / s_obs) ** 2)) if weighted else np.sqrt(np.mean(resid**2))
    return CalibrationFit(
        G=float(g), T_n=float(t_n), dG=float(dg), dT_n=float(dtn),
        f=env.f, Bw=Bw, residual_rms=float(rms), warnings=tuple(warnings),
    )


def _profile_fit(src, s_obs, w, Bw):
    def sse(t_n):
        shape = Bw * (src + k.KB * t_n)
        g = _best_gain(shape, s_obs, w)
        return np.sum(w * (s_obs - g * shape) ** 2)

    res = minimize_scalar(sse, bounds=TN_BOUNDS, method="bounded", options={"xatol": TN_XTOL})
    # the bounded search stops at xatol; one Newton step on the profiled
    # objective removes the leftover error for well-conditioned data
    t_n = _polish(sse, float(res.x))
    return t_n, _best_gain(Bw * (src + k.KB * t_n), s_obs, w)


def _polish(fun, x: float, h: float = 1e-3) -> float:
    lo, hi = TN_BOUNDS
    if x - h <= lo or x + h >= hi:
        return x
    f0, fm, fp = fun(x), fun(x - h), fun(x + h)
    curv = fp - 2 * f0 + fm
    if curv <= 0:
        return x
    step = -0.5 * h * (fp - fm) / curv
    if abs(step) > h:
        return x
    cand = x + step
    return cand if fun(cand) <= f0 else x


def combine_gain_uncertainty(Gs: float, Ge: float, dGs: float, dGe: float) -> ErrorBudget:
    """Combine fit uncertainty with the start-to-end gain drift."""
    if Gs <= 0 or Ge <= 0:
        raise DomainError("gains must be positive")
    drift = abs(Gs - Ge)
    fit = max(dGs, dGe)
    return ErrorBudget(
        dG_fit=fit, dG_drift=drift, dG_total=float(np.hypot(fit, drift)), G_mid=(Gs + Ge) / 2
    )


def photon_number(p_on, p_off, G: float, Bw: float, f: float):
    """Photon spectral density from the pump on/off power difference.

    Noisy inputs may give negative values; they are returned unclamped.
    """
    if G <= 0 or Bw <= 0 or f <= 0:
        raise DomainError("G, Bw and f must be positive")
    return (np.asarray(p_on) - np.asarray(p_off)) / (Bw * G * k.H_PLANCK * f)


def photon_number_error(n: float, dG_over_G: float, dP_off: float) -> float:
    """Photon-number uncertainty from gain error plus on/off power scatter."""
    if n < 0 or dG_over_G < 0 or dP_off < 0:
        raise DomainError("inputs must be non-negative")
    return float(np.sqrt((n * dG_over_G) ** 2 + 2 * dP_off**2))


def loss_from_noise(t_amp: float, t_sys: float) -> float:
    """Loss in dB between device and amplifier from the noise-temperature ratio."""
    if t_amp <= 0 or t_sys <= 0:
        raise DomainError("temperatures must be positive")
    if t_amp > t_sys:
        raise DomainError(f"T_amp={t_amp} exceeds T_sys={t_sys}: that would be gain")
    return float(10 * np.log10(t_amp / t_sys))


def transmissivity(loss_db: float) -> float:
    """Power transmissivity for a (non-positive) loss in dB."""
    if loss_db > 0:
        raise DomainError("loss must be <= 0 dB")
    return 10 ** (loss_db / 10)


def thermal_occupation(f: float, T: float) -> float:
    """Bose-Einstein occupation at frequency ``f`` and temperature ``T``."""
    if f <= 0:
        raise DomainError("frequency must be positive")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    if T == 0:
        return 0.0
    with np.errstate(over="ignore"):  # deep quantum limit: occupation -> 0
        return float(1.0 / np.expm1(k.H_PLANCK * f / (k.KB * T)))


def amplifier_occupation(T_n: float, f: float) -> float:
    """Noise photons per quadrature added by an amplifier of noise temperature T_n."""
    return k.KB * T_n / (k.H_PLANCK * f)


# moments of the lowest quartile of a unit normal, used to undo truncation
_Z25 = norm.ppf(0.25)
_LQ_MEAN = -norm.pdf(_Z25) / 0.25
_LQ_STD = np.sqrt(1 + _Z25 * _LQ_MEAN - _LQ_MEAN**2)


def _column_background(col: np.ndarray) -> tuple[float, float]:
    q = np.quantile(col, 0.25)
    low = col[col <= q]
    sigma = low.std() / _LQ_STD if low.size > 1 else 0.0
    return float(low.mean() - _LQ_MEAN * sigma), float(sigma)


def flux_pump_slope(v_pump, phi_dc, power, kappa: float = 5.0) -> tuple[float, float]:
    """Flux-per-volt of the pump line from the photon-onset ridge.

    Parameters
    ----------
    v_pump : (n_v,) array, monotone
    phi_dc : (n_phi,) array of static flux (Phi0), ascending
    power : (n_v, n_phi) array of detected power
    kappa : threshold in background standard deviations

    Returns
    -------
    (slope, intercept) of ``0.5 - phi_onset`` against ``v_pump``.
    """
    v = np.asarray(v_pump, dtype=float)
    phi = np.asarray(phi_dc, dtype=float)
    pw = np.asarray(power, dtype=float)
    if pw.shape != (v.size, phi.size):
        raise DomainError(f"power map shape {pw.shape} != ({v.size}, {phi.size})")
    if v.size > 1 and not (np.all(np.diff(v) > 0) or np.all(np.diff(v) < 0)):
        raise DomainError("v_pump axis must be monotone")
    order = np.argsort(phi)
    phi, pw = phi[order], pw[:, order]

    xs, ys = [], []
    for vi, col in zip(v, pw):
        bg, sigma = _column_background(col)
        above = np.nonzero(col > bg + kappa * sigma)[0]
        if sigma == 0 or above.size == 0:
            continue
        xs.append(vi)
        ys.append(0.5 - phi[above[0]])
    if len(xs) < 2:
        raise OnsetNotFoundError(f"only {len(xs)} column(s) crossed the onset threshold")
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)
