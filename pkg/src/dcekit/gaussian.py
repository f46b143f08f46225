"""Two-mode Gaussian state algebra.

Covariance matrices are ordered (I-, Q-, I+, Q+) and use the convention in
which the vacuum has ``V = diag(1/2, 1/2, 1/2, 1/2)``.  The 2x2 blocks are
named ``A`` (mode -), ``B`` (mode +) and ``C`` (cross correlations).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalDomainError

RADICAND_EPS = 1e-10
VACUUM_CONVENTION = "vacuum-half"


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _symmetrize(m: np.ndarray) -> np.ndarray:
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


@dataclass(frozen=True, eq=False)
class CovMat4:
    """Symmetric 4x4 covariance matrix with per-element one-sigma errors.

    Only the upper triangle of ``elements`` is read; the lower triangle is
    mirrored from it so the stored matrix is exactly symmetric.
    """

    elements: np.ndarray
    errors: np.ndarray | None = None

    def __post_init__(self):
        m = np.array(self.elements, dtype=float)
        if m.shape != (4, 4):
            raise DomainError(f"covariance must be 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("covariance contains non-finite entries")
        object.__setattr__(self, "elements", _freeze(_symmetrize(m)))
        if self.errors is None:
            err = np.zeros((4, 4))
        else:
            err = np.array(self.errors, dtype=float)
            if err.shape != (4, 4):
                raise DomainError("error matrix must be 4x4")
            if np.any(err < 0):
                raise DomainError("element errors must be non-negative")
            err = _symmetrize(err)
        object.__setattr__(self, "errors", _freeze(err))

    @property
    def A(self) -> np.ndarray:
        return self.elements[:2, :2]

    @property
    def B(self) -> np.ndarray:
        return self.elements[2:, 2:]

    @property
    def C(self) -> np.ndarray:
        return self.elements[:2, 2:]

    def swapped(self) -> "CovMat4":
        """Return the same state with modes - and + exchanged."""
        perm = [2, 3, 0, 1]
        return CovMat4(self.elements[np.ix_(perm, perm)], self.errors[np.ix_(perm, perm)])

    def __array__(self, dtype=None, copy=None):
        return np.array(self.elements, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, CovMat4):
            return NotImplemented
        return np.array_equal(self.elements, other.elements) and np.array_equal(
            self.errors, other.errors
        )

    def allclose(self, other: "CovMat4", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return bool(np.allclose(self.elements, np.asarray(other), atol=atol, rtol=rtol))


def vacuum() -> CovMat4:
    return CovMat4(np.eye(4) / 2)


@dataclass(frozen=True)
class TwoModeState:
    """Zero-mean two-mode Gaussian state."""

    covariance: CovMat4
    mean: np.ndarray = field(default_factory=lambda: _freeze(np.zeros(4)))
    convention: str = VACUUM_CONVENTION

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (4,) or np.any(mean != 0):
            raise DomainError("only zero-mean states are supported")
        if self.convention != VACUUM_CONVENTION:
            raise DomainError(f"unknown convention {self.convention!r}")


@dataclass(frozen=True)
class EntanglementReport:
    nu_minus: float
    log_negativity: float
    duan_plus: float
    duan_minus: float
    entropy_of_formation: float
    purity: float
    errors: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "nu_minus": self.nu_minus,
            "log_negativity": self.log_negativity,
            "duan_plus": self.duan_plus,
            "duan_minus": self.duan_minus,
            "entropy_of_formation": self.entropy_of_formation,
            "purity": self.purity,
            "errors": dict(self.errors),
        }


def tmsv_covariance(r: float, n_th: float = 0.0) -> CovMat4:
    """Two-mode squeezed thermal state with squeezing ``r``."""
    if r < 0 or n_th < 0:
        raise DomainError(f"need r >= 0 and n_th >= 0, got r={r}, n_th={n_th}")
    scale = (2.0 * n_th + 1.0) / 2.0
    a = scale * np.cosh(2.0 * r)
    c = scale * np.sinh(2.0 * r)
    return CovMat4(
        np.array(
            [
                [a, 0.0, c, 0.0],
                [0.0, a, 0.0, -c],
                [c, 0.0, a, 0.0],
                [0.0, -c, 0.0, a],
            ]
        )
    )


def _det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def _as_stack(V) -> np.ndarray:
    return np.asarray(V.elements if isinstance(V, CovMat4) else V, dtype=float)


def nu_minus_batch(V, eps: float = RADICAND_EPS) -> np.ndarray:
    """Vectorized smaller symplectic eigenvalue of the partial transpose.

    Accepts an array of shape ``(..., 4, 4)``.  Entries whose radicand is
    below ``-eps`` (relative to the state's scale) come back as NaN
    instead of raising.
    """
    m = _as_stack(V)
    zeta = _det2(m[..., :2, :2]) + _det2(m[..., 2:, 2:]) - 2.0 * _det2(m[..., :2, 2:])
    det_v = np.linalg.det(m)
    tol = eps * np.maximum(1.0, zeta * zeta)
    inner = zeta * zeta - 4.0 * det_v
    inner = np.where((inner < 0) & (inner >= -tol), 0.0, inner)
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(inner)
        denom = zeta + root
        # nu_-^2 = 2 det V / (zeta + root) avoids cancellation for strong squeezing
        nu2 = np.where(denom > 0, 2.0 * det_v / np.where(denom > 0, denom, 1.0), (zeta - root) / 2.0)
        nu2 = np.where(np.isnan(root), np.nan, nu2)
        nu2 = np.where((nu2 < 0) & (nu2 >= -eps * np.maximum(1.0, np.abs(zeta))), 0.0, nu2)
        return np.sqrt(nu2)


def symplectic_nu_minus(V: CovMat4, eps: float = RADICAND_EPS) -> float:
    """Smaller symplectic eigenvalue of the partially transposed state.

    Rounding-level negative radicands (within ``eps`` relative to the
    state's scale) are clamped to zero; larger ones raise.
    """
    m = _as_stack(V)
    zeta = _det2(m[:2, :2]) + _det2(m[2:, 2:]) - 2.0 * _det2(m[:2, 2:])
    det_v = float(np.linalg.det(m))
    inner = zeta * zeta - 4.0 * det_v
    if inner < -eps * max(1.0, zeta * zeta):
        raise NumericalDomainError(
            f"symplectic radicand zeta^2 - 4 det V = {inner:.3e} is negative", inner
        )
    root = np.sqrt(max(inner, 0.0))
    nu2 = 2.0 * det_v / (zeta + root) if zeta + root > 0 else (zeta - root) / 2.0
    if nu2 < -eps * max(1.0, abs(zeta)):
        raise NumericalDomainError(f"nu_minus^2 = {nu2:.3e} is negative", nu2)
    return float(np.sqrt(max(nu2, 0.0)))


def log_negativity_from_nu(nu) -> np.ndarray | float:
    nu = np.asarray(nu, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.maximum(0.0, -np.log2(2.0 * nu)) + 0.0  # no signed zero
    return float(out) if out.ndim == 0 else out


def log_negativity(V: CovMat4) -> float:
    return log_negativity_from_nu(symplectic_nu_minus(V))


def duan_batch(V) -> tuple[np.ndarray, np.ndarray]:
    m = _as_stack(V)
    ii = m[..., 0, 0] + m[..., 2, 2]
    qq = m[..., 1, 1] + m[..., 3, 3]
    plus = (ii + 2.0 * m[..., 0, 2] + qq - 2.0 * m[..., 1, 3]) / 2.0
    minus = (ii - 2.0 * m[..., 0, 2] + qq + 2.0 * m[..., 1, 3]) / 2.0
    return plus, minus


def duan_quantities(V: CovMat4) -> tuple[float, float]:
    """Combined quadrature variances ``(delta_plus, delta_minus)``.

    Normalized so the vacuum gives exactly 1 for both; ``delta_minus < 1``
    is the inseparability criterion.
    """
    plus, minus = duan_batch(V)
    return float(plus), float(minus)


def _xlog2x(x: float) -> float:
    return 0.0 if x == 0.0 else x * np.log2(x)


def entropy_of_formation(logneg: float) -> float:
    """Ebits needed to prepare a state with the given log-negativity."""
    if logneg < 0:
        raise DomainError(f"log-negativity must be >= 0, got {logneg}")
    if logneg == 0:
        return 0.0
    # with delta = 2**-logneg, (delta**-0.5 -+ delta**0.5)**2 / 4 equals
    # sinh^2 / cosh^2 of logneg*ln2/2; this form avoids cancellation
    c_minus = np.sinh(logneg * np.log(2.0) / 2.0) ** 2
    c_plus = c_minus + 1.0
    return float(_xlog2x(c_plus) - _xlog2x(c_minus))


def entropy_of_formation_batch(logneg) -> np.ndarray:
    x = np.asarray(logneg, dtype=float)
    c_minus = np.sinh(x * np.log(2.0) / 2.0) ** 2
    c_plus = c_minus + 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(c_minus > 0, c_minus * np.log2(np.where(c_minus > 0, c_minus, 1.0)), 0.0)
    return c_plus * np.log2(c_plus) - tail


def apply_loss(
    V: CovMat4,
    eta_minus: float,
    eta_plus: float,
    n_add_minus: float = 0.0,
    n_add_plus: float = 0.0,
) -> CovMat4:
    """Beam-splitter loss on each mode, mixing in a thermal bath."""
    for name, eta in (("eta_minus", eta_minus), ("eta_plus", eta_plus)):
        if not 0.0 <= eta <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {eta}")
    if n_add_minus < 0 or n_add_plus < 0:
        raise DomainError("added occupations must be non-negative")
    m = np.array(V.elements)
    eye = np.eye(2)
    out = np.empty((4, 4))
    out[:2, :2] = eta_minus * m[:2, :2] + (1 - eta_minus) * (2 * n_add_minus + 1) / 2 * eye
    out[2:, 2:] = eta_plus * m[2:, 2:] + (1 - eta_plus) * (2 * n_add_plus + 1) / 2 * eye
    out[:2, 2:] = np.sqrt(eta_minus * eta_plus) * m[:2, 2:]
    out[2:, :2] = out[:2, 2:].T
    return CovMat4(out)


def purity(V: CovMat4) -> float:
    det_v = float(np.linalg.det(_as_stack(V)))
    if det_v <= 0:
        raise NumericalDomainError(f"det V = {det_v:.3e} is not positive", det_v)
    return 1.0 / (4.0 * np.sqrt(det_v))


def purity_batch(V) -> np.ndarray:
    det_v = np.linalg.det(_as_stack(V))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(det_v > 0, 1.0 / (4.0 * np.sqrt(np.abs(det_v))), np.nan)


def entanglement_report(V: CovMat4) -> EntanglementReport:
    """All entanglement measures of an analytic state, with zero errors."""
    nu = symplectic_nu_minus(V)
    ln = log_negativity_from_nu(nu)
    dp, dm = duan_quantities(V)
    return EntanglementReport(
        nu_minus=nu,
        log_negativity=ln,
        duan_plus=dp,
        duan_minus=dm,
        entropy_of_formation=entropy_of_formation(ln),
        purity=purity(V),
        errors={k: 0.0 for k in (
            "nu_minus", "log_negativity", "duan_plus", "duan_minus",
            "entropy_of_formation", "purity",
        )},
    )
