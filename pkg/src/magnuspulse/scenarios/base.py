"""Common scenario container and verification helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..algebra import OperatorBasis
from ..metrics import GateReport, avg_fidelity_error, leakage
from ..propagation import (FrameCoefficients, frame_coefficients, full_propagator_oracle,
                           to_interaction_picture)
from ..solver import CorrectionResult, correct_to_order, correction_field, split_params


@dataclass(eq=False)
class Scenario:
    """Everything the correction loop and the verifier need.

    ``h0`` and ``v`` map ``t`` to coefficient vectors in ``basis``.  ``target``
    is the ideal propagator at ``t_f`` (full space) and ``projector`` selects
    the computational subspace for the fidelity.
    """

    id: str
    basis: OperatorBasis
    t_f: float
    h0: Callable[[float], np.ndarray]
    v: Callable[[float], np.ndarray]
    channels: list
    target: Optional[np.ndarray] = None
    projector: Optional[np.ndarray] = None
    drop_rows: tuple = ()
    policy: str = "min_norm"
    params: dict = field(default_factory=dict)
    n_intervals: Optional[int] = None
    omega_v: Optional[float] = None
    rwa: str = ""
    control_scale: float = 0.0
    _frame: Optional[FrameCoefficients] = field(default=None, repr=False)

    @property
    def n_params(self):
        return sum(ch.n_params for ch in self.channels)

    def frame(self) -> FrameCoefficients:
        if self._frame is None:
            self._frame = frame_coefficients(self.h0, self.basis, self.t_f)
        return self._frame

    def error_interaction(self):
        """``t -> a(t)^T v(t)``, the uncorrected error in the interaction picture."""
        return to_interaction_picture(self.v, self.frame())

    def hamiltonian(self, x=None, include_v=True, extra=None):
        """Coefficient function of ``H0 + V + W(x) + extra``."""
        n = self.basis.n_ops
        W = correction_field(self.channels, x, self.t_f, n) if x is not None else None
        h0, v = self.h0, self.v

        def h(t):
            out = np.array(h0(t), dtype=float)
            if include_v:
                out = out + v(t)
            if W is not None:
                out = out + W(t)
            if extra is not None:
                out = out + extra(t)
            return out

        return h

    def correct(self, order, **kw) -> CorrectionResult:
        return correct_to_order(self, order, frame=self.frame(), **kw)

    def propagate(self, x=None, include_v=True, extra=None, tol=1e-11):
        return full_propagator_oracle(self.hamiltonian(x, include_v, extra), self.basis,
                                      self.t_f, tol=tol)

    def pulse_quadratures(self, x, t):
        """Drive envelopes ``(f + sum g_x, sum g_y)`` in the drive's rotating frame."""
        t = np.atleast_1d(np.asarray(t, float))
        env = self.params.get("_envelope")
        X = np.asarray(env(t), float) if env is not None else np.zeros(t.size)
        Y = np.zeros(t.size)
        if x is not None:
            for ch, p in zip(self.channels, split_params(self.channels, x)):
                if ch.name in ("g_x", "g_y"):
                    g = ch.template.basis_values(t, self.t_f) @ p
                    if ch.name == "g_x":
                        X = X + g
                    else:
                        Y = Y + g
        return X, Y

    def evaluate(self, x=None, order=0, include_v=True, extra=None, tol=1e-11) -> GateReport:
        U = self.propagate(x, include_v, extra, tol).final
        return GateReport(epsilon=avg_fidelity_error(U, self.target, self.projector),
                          leakage=leakage(U, self.projector), order=order, t_f=self.t_f,
                          scenario=self.id)


def raw_subspace_projector(dim, indices):
    P = np.zeros((dim, dim))
    P[list(indices), list(indices)] = 1.0
    return P
