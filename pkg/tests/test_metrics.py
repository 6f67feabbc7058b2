from math import lgamma

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

from magnuspulse.algebra import pauli_matrices
from magnuspulse.errors import TruncationError
from magnuspulse.metrics import (avg_fidelity_error, bloch_trajectory, leakage, pulse_spectrum,
                                 spectral_peaks, squeezing_db)
from magnuspulse.schedule import FourierField


def squeezed_vacuum(r, cut):
    """Fock amplitudes of a vacuum squeezed along y by ``r``."""
    psi = np.zeros(cut, dtype=complex)
    for n in range((cut + 1) // 2):
        psi[2 * n] = np.exp(0.5 * lgamma(2 * n + 1) - lgamma(n + 1)) * (np.tanh(r) / 2) ** n
    return psi / np.sqrt(np.cosh(r))


def test_identity_has_zero_error():
    assert avg_fidelity_error(np.eye(3), np.eye(3)) == 0.0


def test_small_z_rotation_series():
    sz = pauli_matrices()[2]
    target = expm(-0.25j * np.pi * pauli_matrices()[0])
    for delta in (1e-2, 3e-3):
        U = expm(-0.5j * delta * sz) @ target
        assert avg_fidelity_error(U, target) == pytest.approx(delta ** 2 / 6, rel=1e-4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), phase=st.floats(0, 2 * np.pi))
def test_global_phase_invariance(seed, phase):
    U = unitary_group.rvs(3, random_state=seed)
    V = unitary_group.rvs(3, random_state=seed + 1)
    P = np.diag([1.0, 1.0, 0.0])
    e1 = avg_fidelity_error(U, V, P)
    e2 = avg_fidelity_error(np.exp(1j * phase) * U, V, P)
    assert e1 == pytest.approx(e2, abs=1e-12)
    assert 0.0 <= e1 <= 1.0


def test_leakage_of_swap_into_third_level():
    U = np.eye(3)[[2, 1, 0]]
    P = np.diag([1.0, 1.0, 0.0])
    assert leakage(U, P) == pytest.approx(0.5)
    assert leakage(np.eye(3), P) == 0.0


@pytest.mark.parametrize("r", [0.25, 0.5])
def test_squeezing_closed_form(r):
    rep = squeezing_db(squeezed_vacuum(r, 40))
    assert rep.S == pytest.approx(-10 * np.log10(np.exp(-2 * r)), abs=1e-6)
    assert rep.phi == pytest.approx(0.0, abs=1e-9)


def test_squeezing_r1_needs_larger_cut():
    # r = 1 leaves about 7e-6 of population in the top tenth of a 40-level
    # space, above the truncation guard, so the check is done at 80 levels
    with pytest.raises(TruncationError):
        squeezing_db(squeezed_vacuum(1.0, 40))
    rep = squeezing_db(squeezed_vacuum(1.0, 80))
    assert rep.S == pytest.approx(20 / np.log(10), abs=1e-6)
    assert rep.phi == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("angle", [0.3, -0.7, 1.2])
def test_squeezing_angle_recovered(angle):
    cut = 60
    psi = squeezed_vacuum(0.5, cut)
    # rotate the state in phase space by exp(-i angle n)
    psi = np.exp(-1j * angle * np.arange(cut)) * psi
    rep = squeezing_db(psi)
    assert abs(rep.phi) == pytest.approx(abs(angle), abs=1e-9)
    assert -np.pi / 2 < rep.phi <= np.pi / 2


@pytest.mark.parametrize("k", [1, 3, 7])
def test_pure_harmonic_spectrum(k):
    t_f, n = 10.0, 1024
    f = FourierField(t_f=t_f, k_max=k, c=np.eye(k + 1)[k], d=np.zeros(k + 1))
    t = np.arange(n) * t_f / n
    omega, mag = pulse_spectrum(f(t), t_f)
    w_pk, idx = spectral_peaks(omega, mag)
    dw = omega[1] - omega[0]
    assert np.any(np.abs(w_pk - f.omegas[k]) <= dw)


def test_peaks_at_the_edges():
    _, idx = spectral_peaks(np.arange(5.0), np.array([3.0, 1.0, 0.5, 1.0, 2.0]))
    assert list(idx) == [0, 4]


def test_bloch_ground_state():
    b = bloch_trajectory(np.array([[1.0, 0.0], [1.0, 1.0] / np.sqrt(2)]))
    assert np.allclose(b, [[0, 0, -1], [1, 0, 0]])
