import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcekit import gaussian as gs
from dcekit.errors import DomainError, NumericalDomainError

LOG2E = 1 / math.log(2)

# double precision holds the oracle tolerances for r in {0} U [1e-4, 2]; below
# 1e-4 the radicand cancels at r^2 and above 2 the elements exceed 1e3
r_values = st.just(0.0) | st.floats(min_value=1e-4, max_value=2.0)
n_values = st.floats(min_value=0.0, max_value=20.0, allow_nan=False)
etas = st.floats(min_value=0.0, max_value=1.0)


def rotation(theta_minus, theta_plus):
    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    out = np.zeros((4, 4))
    out[:2, :2] = rot(theta_minus)
    out[2:, 2:] = rot(theta_plus)
    return out


def nu_minus_oracle(V):
    """Smaller symplectic eigenvalue from the spectrum of i*Omega*V~."""
    m = np.array(V.elements)
    p = np.diag([1, 1, 1, -1])
    pt = p @ m @ p
    omega = np.kron(np.eye(2), np.array([[0, 1], [-1, 0]]))
    ev = np.abs(np.linalg.eigvals(1j * omega @ pt))
    return float(np.min(ev))


class TestCovMat4:
    def test_symmetrized_from_upper_triangle(self):
        m = np.arange(16, dtype=float).reshape(4, 4)
        V = gs.CovMat4(m)
        assert np.array_equal(V.elements, V.elements.T)
        assert V.elements[1, 0] == m[0, 1]

    def test_read_only(self):
        V = gs.vacuum()
        with pytest.raises(ValueError):
            V.elements[0, 0] = 3.0

    def test_shape_check(self):
        with pytest.raises(DomainError):
            gs.CovMat4(np.eye(3))

    def test_nonfinite_rejected(self):
        m = np.eye(4) / 2
        m[0, 0] = np.nan
        with pytest.raises(DomainError):
            gs.CovMat4(m)

    def test_blocks_and_swap(self):
        V = gs.tmsv_covariance(0.3)
        assert np.allclose(V.C, V.elements[:2, 2:])
        W = V.swapped()
        assert np.allclose(W.A, V.B) and np.allclose(W.B, V.A)
        assert np.allclose(W.C, V.C.T)

    def test_two_mode_state_zero_mean_only(self):
        with pytest.raises(DomainError):
            gs.TwoModeState(gs.vacuum(), mean=np.ones(4))
        assert gs.TwoModeState(gs.vacuum()).convention == "vacuum-half"


class TestOracles:
    def test_vacuum_exact(self):
        V = gs.vacuum()
        assert gs.log_negativity(V) == 0.0
        assert math.copysign(1, gs.log_negativity(V)) == 1.0
        assert gs.symplectic_nu_minus(V) == 0.5
        assert gs.duan_quantities(V) == (1.0, 1.0)
        assert gs.purity(V) == 1.0

    @given(r_values)
    def test_tmsv_log_negativity(self, r):
        ln = gs.log_negativity(gs.tmsv_covariance(r))
        assert ln == pytest.approx(2 * r * LOG2E, rel=1e-9, abs=1e-12)

    @given(r_values)
    def test_tmsv_duan(self, r):
        plus, minus = gs.duan_quantities(gs.tmsv_covariance(r))
        assert plus == pytest.approx(math.exp(2 * r), rel=1e-12)
        assert minus == pytest.approx(math.exp(-2 * r), rel=1e-12)

    @given(r_values)
    def test_tmsv_pure(self, r):
        assert gs.purity(gs.tmsv_covariance(r)) == pytest.approx(1.0, abs=1e-12)

    def test_tmsv_series(self):
        # second-order expansion in r: a = 1/2 + r^2, c = r
        r = 1e-4
        V = gs.tmsv_covariance(r)
        assert V.elements[0, 0] == pytest.approx(0.5 + r**2, rel=1e-12)
        assert V.elements[0, 2] == pytest.approx(r, rel=1e-8)
        assert V.elements[1, 3] == pytest.approx(-r, rel=1e-8)

    def test_thermal_product_state(self):
        V = gs.tmsv_covariance(0.0, n_th=1.0)
        assert gs.log_negativity(V) == 0.0
        assert gs.purity(V) == pytest.approx(1 / 9)

    @given(r_values, n_values)
    def test_nu_minus_matches_eigen_oracle(self, r, n):
        V = gs.tmsv_covariance(r, n)
        assert gs.symplectic_nu_minus(V) == pytest.approx(nu_minus_oracle(V), rel=1e-7)

    def test_nu_minus_general_state(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            base = gs.tmsv_covariance(rng.uniform(0, 1), rng.uniform(0, 2))
            lossy = gs.apply_loss(base, rng.uniform(0.2, 1), rng.uniform(0.2, 1), rng.uniform(0, 1), 0.0)
            rot = rotation(*rng.uniform(0, 2 * np.pi, 2))
            V = gs.CovMat4(rot @ np.array(lossy.elements) @ rot.T)
            assert gs.symplectic_nu_minus(V) == pytest.approx(nu_minus_oracle(V), rel=1e-7)


class TestInvariants:
    @given(r_values, n_values, st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
    def test_local_rotations_preserve_measures(self, r, n, a, b):
        V = gs.tmsv_covariance(r, n)
        rot = rotation(a, b)
        W = gs.CovMat4(rot @ np.array(V.elements) @ rot.T)
        assert gs.log_negativity(W) == pytest.approx(gs.log_negativity(V), rel=1e-7, abs=1e-7)
        assert gs.purity(W) == pytest.approx(gs.purity(V), rel=1e-9)

    @given(r_values, n_values)
    def test_mode_swap_symmetry(self, r, n):
        V = gs.apply_loss(gs.tmsv_covariance(r, n), 0.7, 0.4)
        assert gs.log_negativity(V.swapped()) == pytest.approx(gs.log_negativity(V), abs=1e-9)

    @given(st.floats(0.01, 2.0), etas, etas)
    def test_pure_loss_never_increases_entanglement(self, r, e1, e2):
        V = gs.tmsv_covariance(r)
        assert gs.log_negativity(gs.apply_loss(V, e1, e2)) <= gs.log_negativity(V) + 1e-9

    @given(st.floats(0.01, 2.0), st.floats(0.05, 1.0), st.floats(0.05, 0.95))
    def test_log_negativity_monotone_in_loss(self, r, e_high, frac):
        V = gs.tmsv_covariance(r)
        e_low = e_high * frac
        hi = gs.log_negativity(gs.apply_loss(V, e_high, e_high))
        lo = gs.log_negativity(gs.apply_loss(V, e_low, e_low))
        assert lo <= hi + 1e-9

    @given(r_values, n_values)
    def test_purity_in_unit_interval(self, r, n):
        mu = gs.purity(gs.tmsv_covariance(r, n))
        assert 0 < mu <= 1 + 1e-12

    @given(st.floats(0, 10))
    def test_entropy_of_formation_bounds(self, ln):
        ef = gs.entropy_of_formation(ln)
        assert ef >= 0
        assert gs.entropy_of_formation(ln + 0.1) > ef

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        stack = np.stack([
            np.array(gs.apply_loss(gs.tmsv_covariance(r), 0.6, 0.8, 0.1, 0.2).elements)
            for r in rng.uniform(0, 1.5, 20)
        ])
        nu = gs.nu_minus_batch(stack)
        dp, dm = gs.duan_batch(stack)
        for i, m in enumerate(stack):
            V = gs.CovMat4(m)
            assert nu[i] == pytest.approx(gs.symplectic_nu_minus(V), rel=1e-12)
            assert (dp[i], dm[i]) == pytest.approx(gs.duan_quantities(V), rel=1e-12)
            assert gs.purity_batch(stack)[i] == pytest.approx(gs.purity(V), rel=1e-12)
        lns = gs.log_negativity_from_nu(nu)
        ef = gs.entropy_of_formation_batch(lns)
        assert np.allclose(ef, [gs.entropy_of_formation(x) for x in lns], rtol=1e-12, atol=0)


class TestEntropyOfFormation:
    def test_zero(self):
        assert gs.entropy_of_formation(0.0) == 0.0

    def test_high_precision_oracle(self):
        mpmath.mp.dps = 40
        for ln in (0.03, 0.5, 2.0):
            d = mpmath.mpf(2) ** (-mpmath.mpf(ln))
            cp = (d ** -0.5 + d**0.5) ** 2 / 4
            cm = (d ** -0.5 - d**0.5) ** 2 / 4
            ref = cp * mpmath.log(cp, 2) - cm * mpmath.log(cm, 2)
            assert gs.entropy_of_formation(ln) == pytest.approx(float(ref), rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            gs.entropy_of_formation(-0.1)


class TestErrors:
    def test_unphysical_radicand(self):
        m = np.eye(4) / 2
        m[0, 2] = m[2, 0] = 2.0
        with pytest.raises(NumericalDomainError) as info:
            gs.symplectic_nu_minus(gs.CovMat4(m))
        assert info.value.value is not None

    def test_tiny_negative_clamped(self):
        V = gs.tmsv_covariance(0.0)
        assert gs.symplectic_nu_minus(V, eps=1e-10) == 0.5

    def test_loss_domain(self):
        with pytest.raises(DomainError):
            gs.apply_loss(gs.vacuum(), 1.2, 0.5)
        with pytest.raises(DomainError):
            gs.apply_loss(gs.vacuum(), 0.5, 0.5, -1.0)

    def test_tmsv_domain(self):
        with pytest.raises(DomainError):
            gs.tmsv_covariance(-0.1)

    def test_report_consistency(self):
        rep = gs.entanglement_report(gs.tmsv_covariance(0.2))
        assert rep.log_negativity == pytest.approx(0.4 * LOG2E)
        assert rep.entropy_of_formation == pytest.approx(gs.entropy_of_formation(rep.log_negativity))
        assert set(rep.as_dict()) >= {"nu_minus", "log_negativity", "errors"}


@settings(max_examples=50)
@given(st.floats(0.0, 2.0), etas, etas, n_values, n_values)
def test_loss_keeps_physical_state(r, e1, e2, n1, n2):
    V = gs.apply_loss(gs.tmsv_covariance(r), e1, e2, n1, n2)
    # uncertainty principle: nu of the untransposed state >= 1/2 is implied by purity <= 1
    assert gs.purity(V) <= 1 + 1e-9
    assert np.all(np.linalg.eigvalsh(np.array(V.elements)) > 0)
