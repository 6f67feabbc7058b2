"""Figures of merit: gate infidelity, squeezing, spectra and Bloch vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .algebra import annihilation, pauli_matrices
from .errors import TruncationError

TAIL_TOL = 1e-8


@dataclass(frozen=True)
class GateReport:
    epsilon: float
    leakage: float
    order: int
    t_f: float
    scenario: str = ""


@dataclass(frozen=True)
class SqueezeReport:
    S: float
    phi: float
    t_f: float = float("nan")


def avg_fidelity_error(U, U_target, P=None, d=None):
    """Average gate fidelity error on the subspace selected by ``P``.

    ``eps = 1 - [Tr(M M^dag) + |Tr M|^2] / (d (d + 1))`` with
    ``M = P U_target^dag U P``.  Leakage out of the subspace makes ``M``
    non-unitary, which the formula accounts for.
    """
    U = np.asarray(U)
    U_target = np.asarray(U_target)
    if P is None:
        P = np.eye(U.shape[0])
    if d is None:
        d = int(round(np.real(np.trace(P))))
    M = P @ U_target.conj().T @ U @ P
    F = (np.real(np.trace(M @ M.conj().T)) + abs(np.trace(M)) ** 2) / (d * (d + 1))
    return float(min(1.0, max(0.0, 1.0 - F)))


def leakage(U, P):
    """Population leaving the subspace, averaged over its basis states."""
    P = np.asarray(P)
    idx = np.nonzero(np.abs(np.diag(P)) > 0.5)[0]
    cols = U[:, idx]
    kept = np.sum(np.abs(P @ cols) ** 2, axis=0)
    return float(np.clip(np.mean(1.0 - kept), 0.0, 1.0))


def gate_report(U, U_target, P, order, t_f, scenario=""):
    return GateReport(epsilon=avg_fidelity_error(U, U_target, P), leakage=leakage(U, P),
                      order=order, t_f=t_f, scenario=scenario)


def quadratures(cut):
    a = annihilation(cut)
    ad = a.conj().T
    x = (a + ad) / np.sqrt(2)
    y = (a - ad) / (1j * np.sqrt(2))
    return x, y


def _moments(psi, x, y):
    ex = lambda A: np.real(np.vdot(psi, A @ psi))
    mx, my = ex(x), ex(y)
    vxx = ex(x @ x) - mx ** 2
    vyy = ex(y @ y) - my ** 2
    cxy = 0.5 * ex(x @ y + y @ x) - mx * my
    return vxx, vyy, cxy


def tail_population(psi, frac=0.1):
    psi = np.asarray(psi)
    n = max(2, int(np.ceil(frac * psi.size)))
    return float(np.sum(np.abs(psi[-n:]) ** 2))


def squeezing_db(psi_final, psi_initial=None, t_f=float("nan")) -> SqueezeReport:
    """Degree of squeezing of ``y`` (dB) and the angle of maximal squeezing.

    ``S = -10 log10(Var_f(y) / Var_i(y))``.  The angle ``phi`` minimises the
    variance of ``cos(phi) y + sin(phi) x`` over ``(-pi/2, pi/2]``.

    Raises
    ------
    TruncationError
        If either state has more than ``1e-8`` population in the top tenth of
        the Fock space.
    """
    psi_final = np.asarray(psi_final, dtype=complex)
    cut = psi_final.size
    if psi_initial is None:
        psi_initial = np.zeros(cut, dtype=complex)
        psi_initial[0] = 1.0
    for psi in (psi_final, psi_initial):
        if tail_population(psi) > TAIL_TOL:
            raise TruncationError(f"Fock tail population {tail_population(psi):.2e} too large")
    x, y = quadratures(cut)
    vxx, vyy, cxy = _moments(psi_final, x, y)
    _, vyy0, _ = _moments(np.asarray(psi_initial, complex), x, y)
    S = -10.0 * np.log10(vyy / vyy0)

    # var(phi) = const + A cos(2 phi) + B sin(2 phi), minimal where 2 phi
    # points opposite to (A, B)
    A = 0.5 * (vyy - vxx)
    B = cxy
    phi = 0.5 * np.arctan2(-B, -A) if np.hypot(A, B) > 1e-14 else 0.0
    if phi <= -np.pi / 2:
        phi += np.pi
    return SqueezeReport(S=float(S), phi=float(phi), t_f=t_f)


def pulse_spectrum(samples, t_f, pad: int = 1):
    """One-sided DFT magnitude of uniformly sampled pulse components.

    Parameters
    ----------
    samples : ndarray, shape (n,) or (n, k)
        Samples on ``t_j = j t_f / n`` (endpoint excluded).
    pad : int
        Zero-padding factor for a finer frequency grid.

    Returns
    -------
    omega : ndarray
        Angular frequencies ``2 pi m / (pad t_f)``.
    mag : ndarray
        ``|DFT| dt`` per component.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    dt = t_f / n
    spec = np.fft.rfft(samples, n=pad * n, axis=0)
    omega = 2 * np.pi * np.fft.rfftfreq(pad * n, d=dt)
    return omega, np.abs(spec) * dt


def spectral_peaks(omega, mag, rel_height=1e-2):
    """Local maxima of ``mag`` at least ``rel_height * max(mag)`` high.

    Returns
    -------
    omega_peaks : ndarray
    index : ndarray
        Bin indices of the peaks.
    """
    mag = np.asarray(mag, dtype=float)
    # pad so that maxima at the first and last bin are found too
    padded = np.concatenate([[-np.inf], mag, [-np.inf]])
    idx, _ = find_peaks(padded, height=rel_height * mag.max())
    idx = idx - 1
    return np.asarray(omega)[idx], idx


def bloch_trajectory(states):
    """Bloch components ``(<sx>, <sy>, <sz>)`` for a sequence of qubit states."""
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    out = np.empty((states.shape[0], 3))
    for i, P in enumerate(pauli_matrices()):
        out[:, i] = np.real(np.einsum("ti,ij,tj->t", states.conj(), P, states))
    return out
