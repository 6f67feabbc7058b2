"""Three-level transmon: single-qubit gates with leakage to the second excited state.

Rotating frame at the drive, which is resonant with the 0-1 transition;
terms near twice the drive frequency are dropped.  The basis is
``sx, sy, sz, nx12, ny12, nx02, ny02, l8`` with ``l8`` the diagonal Gell-Mann
matrix, so ``alpha |2><2|`` enters as ``-alpha / sqrt(3) l8`` up to identity.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from ..algebra import build_basis
from ..errors import InsufficientBandwidth, InvalidParameter
from ..schedule import Envelope, FieldTemplate
from .base import Scenario, raw_subspace_projector
from ..solver import Channel

MIN_FREE = 7
SQ3 = np.sqrt(3.0)


def harmonic_cutoff(alpha_tf: float, k_floor: int = MIN_FREE) -> int:
    """Highest kept harmonic: enough bandwidth to reach ``|alpha|``."""
    return max(k_floor, int(np.ceil(abs(alpha_tf) / (2 * np.pi))))


def _unit(i, n=8, scale=1.0):
    e = np.zeros(n)
    e[i] = scale
    return e


def transmon_gate(theta0: float = np.pi / 2, alpha_tf: float = 5.0, eta: float = np.sqrt(2.0),
                  alpha: float = -1.0, k_max: int = None) -> Scenario:
    """Resonant x rotation of angle ``theta0`` on a weakly anharmonic three-level system.

    ``H0 = alpha |2><2| + (f/2) sx`` and ``V = eta (f/2) nx12``.  The correction
    keeps the physical drive direction ``(sx + eta nx12) / 2`` for ``g_x``,
    its quadrature ``(-sy + eta ny12) / 2`` for ``g_y`` and a static detuning
    ``Delta (sz + 3 |2><2|) / 2``.  Both envelopes keep harmonics
    ``1..k_max`` (cosine terms as ``1 - cos`` so the drive vanishes at the
    ends), which gives an underdetermined system solved for minimum norm.

    Raises
    ------
    InsufficientBandwidth
        If fewer than seven free coefficients remain or ``k_max`` stops
        short of the anharmonicity, ``2 pi k_max / t_f < |alpha|``.
    """
    if eta <= 0:
        raise InvalidParameter("eta must be positive")
    if alpha == 0:
        raise InvalidParameter("alpha must be nonzero")
    if abs(alpha_tf) < 2:
        raise InvalidParameter("|alpha| t_f must be at least 2")
    t_f = abs(alpha_tf) / abs(alpha)
    K = harmonic_cutoff(abs(alpha) * t_f) if k_max is None else int(k_max)
    tpl = FieldTemplate("boundary_zero", k_min=1, k_max=max(K, 1), sine=True)
    if K < 1 or 2 * tpl.n_params + 1 < MIN_FREE:
        raise InsufficientBandwidth(f"{2 * tpl.n_params + 1 if K >= 1 else 1} free coefficients,"
                                    f" need at least {MIN_FREE}")
    if 2 * np.pi * K / t_f < abs(alpha) * (1 - 1e-12):
        raise InsufficientBandwidth(f"k_max = {K} reaches {2 * np.pi * K / t_f:.3g},"
                                    f" below |alpha| = {abs(alpha):.3g}")
    basis = build_basis("gellmann3")
    env = Envelope("raised_cosine", t_f=t_f, theta0=theta0)

    def h0(t):
        return np.array([0.5 * env(t), 0, 0, 0, 0, 0, 0, -alpha / SQ3])

    def v(t):
        return _unit(3, scale=0.5 * eta * env(t))

    cx = 0.5 * (_unit(0) + eta * _unit(3))
    cy = 0.5 * (-_unit(1) + eta * _unit(4))
    cz = 0.5 * (_unit(2) - SQ3 * _unit(7))
    channels = [
        Channel("g_x", tpl, lambda t: cx, operator="sx+eta*nx12"),
        Channel("g_y", tpl, lambda t: cy, operator="-sy+eta*ny12"),
        Channel("delta", FieldTemplate("constant_only"), lambda t: cz, operator="(sz+3|2><2|)/2"),
    ]
    target = np.zeros((3, 3), dtype=complex)
    target[:2, :2] = expm(-0.5j * theta0 * basis.ops[0][:2, :2])
    target[2, 2] = np.exp(-1j * alpha * t_f)
    return Scenario(id="transmon", basis=basis, t_f=t_f, h0=h0, v=v, channels=channels,
                    target=target, projector=raw_subspace_projector(3, (0, 1)),
                    drop_rows=("l8",), policy="min_norm",
                    params={"theta0": theta0, "alpha_tf": abs(alpha_tf), "eta": eta,
                            "alpha": alpha, "k_max": K, "_envelope": env},
                    n_intervals=max(4, int(np.ceil(abs(alpha) * t_f / np.pi)) + 2 * K),
                    omega_v=abs(alpha), rwa="terms near twice the drive frequency dropped",
                    control_scale=2 * theta0 / t_f)


def transmon_error_interaction_closed_form(scenario: Scenario):
    """``v_tilde(t)`` from the analytic expressions (entries 4 to 7 nonzero)."""
    p = scenario.params
    alpha, eta = p["alpha"], p["eta"]
    env = Envelope("raised_cosine", t_f=scenario.t_f, theta0=p["theta0"])

    def vt(t):
        f, th = env(t), env.integral(t)
        c, s = np.cos(th / 2), np.sin(th / 2)
        ca, sa = np.cos(alpha * t), np.sin(alpha * t)
        out = np.zeros(8)
        out[3:7] = 0.5 * eta * f * np.array([c * ca, c * sa, s * sa, -s * ca])
        return out

    return vt


def drag_baseline(scenario: Scenario):
    """First-order DRAG fields as an extra coefficient function.

    Adds a quadrature ``g_y = -f_dot / (2 alpha)`` along the ``g_y`` carrier and
    shifts the drive frequency by ``(eta^2 - 4) f^2 / (4 alpha)``, which in
    this frame is a detuning ``(4 - eta^2) f^2 / (4 alpha)`` on the detuning
    carrier.  The 0-2 drive of full DRAG is not physical and is left out.
    """
    p = scenario.params
    alpha, eta = p["alpha"], p["eta"]
    env = Envelope("raised_cosine", t_f=scenario.t_f, theta0=p["theta0"])
    cy = scenario.channels[1].carrier(0.0)
    cz = scenario.channels[2].carrier(0.0)

    def extra(t):
        f = env(t)
        return (-env.derivative(t) / (2 * alpha)) * cy + ((4 - eta ** 2) * f * f / (4 * alpha)) * cz

    return extra
