"""Number-selective phase gates on a cavity dispersively coupled to a qubit.

Frame: interaction picture of the dispersive Hamiltonian, fast terms
dropped, ``chi = 1``.  Operators are ``sigma_a (x) |n><n|`` with index
``3 n + a``; Hilbert-space index ``q N + n`` for qubit state ``q``.  Driving
level ``m`` at ``omega_q + chi m`` gives, on block ``n``, the rotating
field ``(1/2)[g_x (cos(d t) sx - sin(d t) sy) - g_y (sin(d t) sx + cos(d t) sy)]``
with ``d = chi (n - m)``.  The ``d = 0`` part on driven levels is the ideal
Hamiltonian and everything else is the error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..algebra import build_basis
from ..errors import InvalidParameter
from ..metrics import pulse_spectrum, spectral_peaks
from ..schedule import Envelope, FieldTemplate
from ..solver import Channel, split_params
from .base import Scenario

DEFAULT_PHASES = {0: np.pi / 2, 4: np.pi / 2}


def _drive_carriers(m, chi, n_sim, blocks=None):
    """Carriers ``t -> (3 n_sim,)`` of ``g_x`` and ``g_y`` for the drive at level ``m``.

    ``blocks`` restricts the carriers to a subset of cavity levels.
    """
    n = np.arange(n_sim)
    mask = np.zeros(n_sim, dtype=bool)
    mask[list(range(n_sim)) if blocks is None else list(blocks)] = True
    d = chi * (n - m)

    def cx(t):
        out = np.zeros((n_sim, 3))
        out[:, 0] = 0.5 * np.cos(d * t)
        out[:, 1] = -0.5 * np.sin(d * t)
        out[~mask] = 0.0
        return out.ravel()

    def cy(t):
        out = np.zeros((n_sim, 3))
        out[:, 0] = -0.5 * np.sin(d * t)
        out[:, 1] = -0.5 * np.cos(d * t)
        out[~mask] = 0.0
        return out.ravel()

    return cx, cy


@dataclass(eq=False)
class SnapScenario(Scenario):
    """Scenario with per-level channels and spectrum helpers."""

    def level_rows(self, level):
        return [3 * level, 3 * level + 1, 3 * level + 2]

    def _envelopes(self):
        return self.params["_envelopes"]

    def drive_components(self, x, t):
        """Total per-level envelopes ``(F_x, F_y)`` arrays of shape ``(n_drives, len(t))``.

        Row ``m`` is the envelope of the drive at ``omega_q + chi m``, for
        ``m < N_trunc``.
        """
        t = np.atleast_1d(np.asarray(t, float))
        N = self.params["n_trunc"]
        Fx = np.zeros((N, t.size))
        Fy = np.zeros((N, t.size))
        for m, (ex, ey) in self._envelopes().items():
            Fx[m] += ex(t)
            Fy[m] += ey(t)
        if x is not None:
            for ch, p in zip(self.channels, split_params(self.channels, x)):
                g = ch.template.basis_values(t, self.t_f) @ p
                if ch.name.startswith("g_x"):
                    Fx[ch.level] += g
                else:
                    Fy[ch.level] += g
        return Fx, Fy

    def pulse_quadratures(self, x, t):
        """In-phase and quadrature drive in the frame rotating at ``omega_q``."""
        chi = self.params["chi"]
        Fx, Fy = self.drive_components(x, t)
        t = np.atleast_1d(np.asarray(t, float))
        ph = chi * np.outer(np.arange(Fx.shape[0]), t)
        X = np.sum(Fx * np.cos(ph) + Fy * np.sin(ph), axis=0)
        Y = np.sum(-Fx * np.sin(ph) + Fy * np.cos(ph), axis=0)
        return X, Y

    def spectrum(self, x=None, n_samples=4096, pad=1):
        t = np.arange(n_samples) * self.t_f / n_samples
        X, Y = self.pulse_quadratures(x, t)
        return pulse_spectrum(np.column_stack([X, Y]), self.t_f, pad=pad)

    def peak_matches(self, x=None, levels=range(1, 10), rel_height=1e-2, n_samples=4096, pad=1):
        """Which ``k`` have a spectral maximum within one bin of ``k chi``.

        The amplitude is the root-sum-square of the ``x`` and ``y`` spectra.
        A match means the peak's bin index is at most one away from the bin
        nearest to ``k chi``.
        """
        omega, mag = self.spectrum(x, n_samples, pad)
        amp = np.hypot(mag[:, 0], mag[:, 1])
        _, idx = spectral_peaks(omega, amp, rel_height)
        dw = omega[1] - omega[0]
        chi = self.params["chi"]
        return {k: bool(np.any(np.abs(idx - round(k * chi / dw)) <= 1)) for k in levels}

    def state_error(self, x, q, n):
        """``1 - |<psi| U_target^dag U |psi>|^2`` for the product state ``|q, n>``."""
        N = self.params["n_sim"]
        psi = np.zeros(2 * N, dtype=complex)
        psi[q * N + n] = 1.0
        U = self.propagate(x).final
        return float(1.0 - abs(np.vdot(self.target @ psi, U @ psi)) ** 2)


def snap_gate(phases=None, chi_tf: float = 50.0, n_trunc: int = 10, k_max: int = 3,
              n_sim: int = None, chi: float = 1.0, policy: str = None) -> SnapScenario:
    """Berry-phase gate ``|g, n> -> exp(i phases[n]) |g, n>`` on selected levels.

    Each driven level gets a cyclic qubit path: a half-interval pulse of
    area ``pi`` along ``x``, then one of area ``pi`` along an axis chosen so
    that the enclosed solid angle yields the requested phase.  Corrections
    are per-level drives at ``omega_q + chi m`` for every ``m < n_trunc`` with
    free harmonics ``1..k_max`` on both quadratures.

    Parameters
    ----------
    n_sim : int, optional
        Cavity levels kept in the simulation (default ``n_trunc``); levels
        beyond ``n_trunc`` get no equations.
    policy : {"quadratic", "min_norm"}, optional
        Default is quadratic when only a subset of levels is driven and the
        linear min-norm path when every level carries a drive.
    """
    phases = dict(DEFAULT_PHASES if phases is None else phases)
    n_sim = n_trunc if n_sim is None else int(n_sim)
    if not phases:
        raise InvalidParameter("at least one driven level is needed")
    if n_trunc < max(phases) + 1 or n_sim < n_trunc:
        raise InvalidParameter("need n_sim >= n_trunc >= highest driven level + 1")
    if chi_tf <= 0 or chi <= 0 or k_max < 1:
        raise InvalidParameter("chi t_f, chi and k_max must be positive")
    t_f = chi_tf / chi
    all_driven = set(phases) >= set(range(n_trunc))
    if policy is None:
        policy = "min_norm" if all_driven else "quadratic"
    basis = build_basis("qubit_fock", n_levels=n_sim)

    envs = {}
    for m, gamma in phases.items():
        first = Envelope("snap_half", t_f=t_f, theta0=np.pi, half="first")
        second = Envelope("snap_half", t_f=t_f, theta0=np.pi, half="second")
        beta = gamma - np.pi
        cb, sb = np.cos(beta), np.sin(beta)
        envs[m] = (lambda t, a=first, b=second, cb=cb: a(t) + cb * b(t),
                   lambda t, b=second, sb=sb: -sb * b(t))

    drives = []
    for m, (ex, ey) in envs.items():
        on = _drive_carriers(m, chi, n_sim, blocks=[m])
        off = _drive_carriers(m, chi, n_sim, blocks=[n for n in range(n_sim) if n != m])
        drives.append((ex, ey, on, off))

    def h0(t):
        return sum(ex(t) * on[0](t) + ey(t) * on[1](t) for ex, ey, on, _ in drives)

    def v(t):
        return sum(ex(t) * off[0](t) + ey(t) * off[1](t) for ex, ey, _, off in drives)

    tpl = FieldTemplate("free", k_min=0, k_max=k_max, sine=True)
    model = policy == "quadratic"
    channels = []
    for m in range(n_trunc):
        cx, cy = _drive_carriers(m, chi, n_sim)
        mx, my = _drive_carriers(m, chi, n_sim, blocks=[m]) if model else (None, None)
        channels.append(Channel(f"g_x{m}", tpl, cx, operator=f"drive_x{m}", model_carrier=mx,
                                level=m))
        channels.append(Channel(f"g_y{m}", tpl, cy, operator=f"drive_y{m}", model_carrier=my,
                                level=m))

    # ideal gate: exp(+-i gamma) on the qubit states of each driven level
    dim = 2 * n_sim
    target = np.eye(dim, dtype=complex)
    for m, gamma in phases.items():
        target[m, m] = np.exp(1j * gamma)
        target[n_sim + m, n_sim + m] = np.exp(-1j * gamma)
    proj = np.zeros((dim, dim))
    for q in range(2):
        for n in range(n_trunc):
            proj[q * n_sim + n, q * n_sim + n] = 1.0

    amp = 2 * np.pi / t_f
    return SnapScenario(id="snap", basis=basis, t_f=t_f, h0=h0, v=v, channels=channels,
                        target=target, projector=proj, policy=policy,
                        params={"phases": {int(k): float(g) for k, g in phases.items()},
                                "chi_tf": chi_tf, "chi": chi, "n_trunc": n_trunc,
                                "n_sim": n_sim, "k_max": k_max, "_envelopes": envs},
                        n_intervals=max(4, int(np.ceil(n_sim * chi * t_f / np.pi))),
                        omega_v=chi, rwa="dispersive frame, fast terms dropped",
                        control_scale=amp)
