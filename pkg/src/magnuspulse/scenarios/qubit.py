"""Strongly driven two-level system in the frame rotating at the drive."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from ..algebra import build_basis
from ..errors import InvalidParameter
from ..schedule import Envelope, FieldTemplate
from ..solver import Channel
from .base import Scenario


def _envelope(theta0, t_f):
    return Envelope("raised_cosine", t_f=t_f, theta0=theta0)


def qubit_strong_driving(theta0: float = np.pi / 2, wq_tf: float = 5.0, omega_q: float = 1.0,
                         k_max: int = 1) -> Scenario:
    """Resonantly driven qubit with counter-rotating terms kept as the error.

    ``H0 = (f/2) sx`` and ``V = (f/2)[cos(2 wd t) sx - sin(2 wd t) sy]`` with a
    raised-cosine envelope of area ``theta0``.  The correction modulates the
    two drive quadratures, ``g(t) = g_x(t) cos(wd t) + g_y(t) sin(wd t)``
    entering as ``g [cos(wd t) sx - sin(wd t) sy]``, plus a static detuning on
    ``sz``.  ``g_x`` and ``g_y`` use ``1 - cos(w_k t)`` harmonics up to
    ``k_max`` so the drive still vanishes at both ends.
    """
    if not 0 <= theta0 <= 2 * np.pi:
        raise InvalidParameter("theta0 must lie in [0, 2 pi]")
    if wq_tf <= 0 or omega_q <= 0:
        raise InvalidParameter("times and frequencies must be positive")
    wd = omega_q
    t_f = wq_tf / omega_q
    basis = build_basis("pauli_su2")
    env = _envelope(theta0, t_f)

    def h0(t):
        return np.array([0.5 * env(t), 0.0, 0.0])

    def v(t):
        f = 0.5 * env(t)
        return np.array([f * np.cos(2 * wd * t), -f * np.sin(2 * wd * t), 0.0])

    def quad_carrier(phase_fn):
        def c(t):
            return phase_fn(wd * t) * np.array([np.cos(wd * t), -np.sin(wd * t), 0.0])
        return c

    tpl = FieldTemplate("boundary_zero", k_min=1, k_max=k_max, sine=False)
    channels = [
        Channel("g_x", tpl, quad_carrier(np.cos), operator="drive_x"),
        Channel("g_y", tpl, quad_carrier(np.sin), operator="drive_y"),
        Channel("delta", FieldTemplate("constant_only"), lambda t: np.array([0.0, 0.0, 1.0]),
                operator="sz"),
    ]
    target = expm(-0.5j * theta0 * basis.ops[0])
    return Scenario(id="qubit", basis=basis, t_f=t_f, h0=h0, v=v, channels=channels,
                    target=target, projector=np.eye(2), policy="exact",
                    params={"theta0": theta0, "wq_tf": wq_tf, "omega_q": omega_q,
                            "omega_d": wd, "k_max": k_max, "_envelope": env},
                    n_intervals=max(4, int(np.ceil(2 * wd * t_f / np.pi))),
                    omega_v=2 * wd, rwa="counter-rotating terms kept as error",
                    control_scale=2 * theta0 / t_f)


def qubit_reduced_matrix(theta0: float, wq_tf: float, omega_q: float = 1.0):
    """3x3 matrix ``P_q`` from its closed-form integrands.

    Rows are the ``sx, sy, sz`` equations and columns the unknowns
    ``(c_x1, c_y1, Delta)``.
    """
    wd = omega_q
    t_f = wq_tf / omega_q
    w1 = 2 * np.pi / t_f
    env = _envelope(theta0, t_f)
    th = env.integral
    b = lambda t: 1 - np.cos(w1 * t)
    sc = lambda t: np.sin(wd * t) * np.cos(wd * t)
    integrands = [
        [lambda t: b(t) * np.cos(wd * t) ** 2, lambda t: b(t) * sc(t), None],
        [lambda t: -b(t) * sc(t) * np.cos(th(t)), lambda t: -b(t) * np.sin(wd * t) ** 2 * np.cos(th(t)),
         lambda t: np.sin(th(t))],
        [lambda t: b(t) * sc(t) * np.sin(th(t)), lambda t: b(t) * np.sin(wd * t) ** 2 * np.sin(th(t)),
         lambda t: np.cos(th(t))],
    ]
    P = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if integrands[i][j] is not None:
                P[i, j] = quad(integrands[i][j], 0.0, t_f, epsabs=1e-11, epsrel=1e-11, limit=500)[0]
    return P


def qubit_error_interaction_closed_form(theta0, wq_tf, omega_q=1.0):
    """``v_tilde(t)`` from the analytic interaction-picture expressions."""
    wd = omega_q
    t_f = wq_tf / omega_q
    env = _envelope(theta0, t_f)

    def vt(t):
        f = env(t)
        th = env.integral(t)
        s2, c2 = np.sin(2 * wd * t), np.cos(2 * wd * t)
        return 0.5 * f * np.array([c2, -s2 * np.cos(th), s2 * np.sin(th)])

    return vt


@dataclass(frozen=True, eq=False)
class DerivativeCorrection:
    """Closed-form derivative-based corrections in the interaction picture.

    Needs independent time-dependent control of ``sx``, ``sy`` and ``sz``,
    which the two-quadrature drive cannot provide.
    """

    w1: Callable[[float], np.ndarray]
    w2: Callable[[float], np.ndarray]
    omega1: Callable[[float], np.ndarray]
    lab: Callable[[float], np.ndarray]
    required_controls: tuple = ("sx", "sy", "sz")


def qubit_derivative_correction(scenario: Scenario) -> DerivativeCorrection:
    """First- and second-order derivative-based corrections for the qubit scenario.

    ``w1`` cancels the first Magnus term through integration by parts of the
    counter-rotating error; ``w2 = -1/2 [h, Omega_1(t)]`` with ``h`` the error
    plus ``w1``.  ``lab`` maps ``w1 + w2`` back to the rotating frame.
    """
    p = scenario.params
    wd = p["omega_d"]
    t_f = scenario.t_f
    env = _envelope(p["theta0"], t_f)
    if abs(env(0.0)) > 1e-14 or abs(env(t_f)) > 1e-14:
        raise InvalidParameter("derivative correction needs an envelope vanishing at both ends")
    basis = scenario.basis
    vt = qubit_error_interaction_closed_form(p["theta0"], p["wq_tf"], p["omega_q"])

    def w1(t):
        f, fd, th = env(t), env.derivative(t), env.integral(t)
        c2 = np.cos(2 * wd * t)
        return np.array([fd * np.sin(2 * wd * t),
                         (fd * np.cos(th) - f * f * np.sin(th)) * c2,
                         -(fd * np.sin(th) + f * f * np.cos(th)) * c2]) / (4 * wd)

    def omega1(t):
        f, th = env(t), env.integral(t)
        c2 = np.cos(2 * wd * t)
        return f / (4 * wd) * np.array([np.sin(2 * wd * t), c2 * np.cos(th), -c2 * np.sin(th)])

    def w2(t):
        return -0.5 * basis.bracket(vt(t) + w1(t), omega1(t))

    frame = scenario.frame()

    def lab(t):
        return np.linalg.solve(frame(t).T, w1(t) + w2(t))

    return DerivativeCorrection(w1=w1, w2=w2, omega1=omega1, lab=lab)
